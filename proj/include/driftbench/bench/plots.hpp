// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "driftbench/adapt/loop.hpp"
#include "driftbench/synthgen/generator.hpp"

namespace driftbench::bench {

/// Two columns of panels: support pairs with adapted predictions on the
/// left, query pairs on the right. Each panel draws the input window, the
/// ground-truth continuation, and the prediction as separate polylines.
/// Throws ContractError for empty predictions and DimensionError when they
/// do not line up with the episode.
std::string render_episode_svg(const synth::Episode& ep, const adapt::EpisodePredictions& pred,
                               const std::string& title);
void emit_plots(const synth::Episode& ep, const adapt::EpisodePredictions& pred, const std::string& path,
                const std::string& title = "");

}  // namespace driftbench::bench
