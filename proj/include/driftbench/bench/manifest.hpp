// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "driftbench/bench/experiment.hpp"

namespace driftbench::bench {

std::string utc_timestamp();

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// SHA-256 of `path` relative to `root`, as a manifest entry.
ManifestFile hash_entry(const std::string& root, const std::string& relative);

/// Problems found when checking every listed file against its hash; empty
/// when the manifest verifies.
std::vector<std::string> verify_manifest(const std::string& manifest_path);

}  // namespace driftbench::bench
