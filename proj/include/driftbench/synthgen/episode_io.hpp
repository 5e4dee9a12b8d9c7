// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "driftbench/synthgen/generator.hpp"

namespace driftbench::synth {

/// JSON episode file: header {format, variant, seed, spec, pool} followed by
/// an "episodes" array of {source_i, source_j, offsets, support, query};
/// each support/query entry is an [input, output] pair. Floats are written
/// with "%.17g".
std::string episodes_to_json(const EpisodeSet& set);
EpisodeSet episodes_from_json(const std::string& text);

void write_episode_file(const EpisodeSet& set, const std::string& path);
EpisodeSet read_episode_file(const std::string& path);

}  // namespace driftbench::synth
