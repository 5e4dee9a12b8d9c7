// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "driftbench/common/rng.hpp"

namespace driftbench::synth {

enum class Variant { s1, s2, s3 };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

inline constexpr double kBasePeriod = 3.0;
inline constexpr std::size_t kWindowsPerEpisode = 10;
inline constexpr std::size_t kSupportSize = 5;

struct SineComponent {
  double amplitude = 1.0;
  double period = kBasePeriod;  // time units
  double phase = 0.0;           // time units, in [0, period)
};

struct BaseSequence {
  std::vector<SineComponent> components;
  std::size_t id = 0;
};

/// Dataset parameters. dt = 0.1 puts 30 samples in one base period; the
/// stride 17 is coprime to 30 so consecutive windows land on distinct phases.
struct DatasetSpec {
  Variant variant = Variant::s1;
  std::size_t pool_size = 5;
  double dt = 0.1;
  std::size_t input_len = 60;
  std::size_t output_len = 30;
  std::size_t window_stride = 17;
  std::size_t offset_range = 1000;  // base offsets drawn from [0, offset_range)
  std::uint64_t seed = 0;

  void validate() const;
};

struct WindowPair {
  std::vector<double> input;
  std::vector<double> output;
};

/// Five support and five query pairs. Inputs are rendered from pool entry
/// source_i, outputs (the values that follow each input window) from source_j.
struct Episode {
  std::vector<WindowPair> support;
  std::vector<WindowPair> query;
  std::size_t source_i = 0;
  std::size_t source_j = 0;
  std::array<std::int64_t, kWindowsPerEpisode> offsets{};
};

struct EpisodeSet {
  DatasetSpec spec;
  std::vector<BaseSequence> pool;
  std::vector<Episode> episodes;
};

/// Draw order per sequence: for each component amplitude, then (S3 second
/// component only) period, then phase.
std::vector<BaseSequence> build_base_pool(const DatasetSpec& spec, Rng& rng);

/// Sample k = Σ_c A_c·sin(2π((start_offset + k)·dt + phase_c) / period_c).
std::vector<double> render(const BaseSequence& seq, std::int64_t start_offset, std::size_t length, double dt);

/// Draws i, j, then the base offset, and renders the ten windows.
Episode sample_episode(const std::vector<BaseSequence>& pool, const DatasetSpec& spec, Rng& rng);

/// One generator seeded with spec.seed: the pool first, then `count`
/// episodes. Skipping the first `skip` episodes gives a disjoint tail of the
/// same stream (used for evaluation splits).
EpisodeSet episode_stream(const DatasetSpec& spec, std::size_t count, std::size_t skip = 0);

}  // namespace driftbench::synth
