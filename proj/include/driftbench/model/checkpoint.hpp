// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "driftbench/model/model.hpp"

namespace driftbench::model {

/// JSON with the model config and one {name, shape, data} record per
/// parameter tensor. Reloading reproduces every parameter bit for bit.
std::string checkpoint_to_json(const Model& m);
Model checkpoint_from_json(const std::string& text);

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace driftbench::model
