// SPDX-License-Identifier: Apache-2.0
#include "driftbench/synthgen/generator.hpp"

#include <cmath>
#include <numbers>

#include "driftbench/common/errors.hpp"

namespace driftbench::synth {
namespace {

constexpr double kAmplitudeLo = 0.5;
constexpr double kAmplitudeHi = 1.5;
constexpr double kS3PeriodLo = 1.5;
constexpr double kS3PeriodHi = 6.0;
constexpr double kS3MinPeriodGap = 0.3;

SineComponent draw_component(Rng& rng, double period) {
  SineComponent c;
  c.amplitude = rng.uniform(kAmplitudeLo, kAmplitudeHi);
  c.period = period;
  c.phase = rng.uniform(0.0, period);
  return c;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::s1: return "s1";
    case Variant::s2: return "s2";
    case Variant::s3: return "s3";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "s1" || s == "S1") return Variant::s1;
  if (s == "s2" || s == "S2") return Variant::s2;
  if (s == "s3" || s == "S3") return Variant::s3;
  throw ConfigError("unknown dataset variant '" + std::string(s) + "' (expected s1|s2|s3)");
}

void DatasetSpec::validate() const {
  if (pool_size < 2) throw ConfigError("pool_size must be at least 2");
  if (input_len < 1 || output_len < 1 || window_stride < 1) {
    throw ConfigError("input_len, output_len and window_stride must be at least 1");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (offset_range < 1) throw ConfigError("offset_range must be at least 1");
}

std::vector<BaseSequence> build_base_pool(const DatasetSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<BaseSequence> pool;
  pool.reserve(spec.pool_size);
  for (std::size_t id = 0; id < spec.pool_size; ++id) {
    BaseSequence seq;
    seq.id = id;
    switch (spec.variant) {
      case Variant::s1:
        seq.components.push_back(draw_component(rng, kBasePeriod));
        break;
      case Variant::s2:
        seq.components.push_back(draw_component(rng, kBasePeriod));
        seq.components.push_back(draw_component(rng, kBasePeriod));
        break;
      case Variant::s3: {
        seq.components.push_back(draw_component(rng, kBasePeriod));
        SineComponent c;
        c.amplitude = rng.uniform(kAmplitudeLo, kAmplitudeHi);
        do {
          c.period = rng.uniform(kS3PeriodLo, kS3PeriodHi);
        } while (std::abs(c.period - kBasePeriod) < kS3MinPeriodGap);
        c.phase = rng.uniform(0.0, c.period);
        seq.components.push_back(c);
        break;
      }
    }
    pool.push_back(std::move(seq));
  }
  return pool;
}

std::vector<double> render(const BaseSequence& seq, std::int64_t start_offset, std::size_t length, double dt) {
  std::vector<double> out(length, 0.0);
  for (std::size_t k = 0; k < length; ++k) {
    const double t = static_cast<double>(start_offset + static_cast<std::int64_t>(k)) * dt;
    double s = 0.0;
    for (const SineComponent& c : seq.components) {
      s += c.amplitude * std::sin(2.0 * std::numbers::pi * (t + c.phase) / c.period);
    }
    out[k] = s;
  }
  return out;
}

Episode sample_episode(const std::vector<BaseSequence>& pool, const DatasetSpec& spec, Rng& rng) {
  if (pool.empty()) throw ContractError("sample_episode: empty pool");
  Episode ep;
  ep.source_i = static_cast<std::size_t>(rng.below(pool.size()));
  ep.source_j = static_cast<std::size_t>(rng.below(pool.size()));
  const auto base = static_cast<std::int64_t>(rng.below(spec.offset_range));
  const auto in_len = static_cast<std::int64_t>(spec.input_len);
  for (std::size_t k = 0; k < kWindowsPerEpisode; ++k) {
    const std::int64_t off = base + static_cast<std::int64_t>(k * spec.window_stride);
    ep.offsets[k] = off;
    WindowPair pair{render(pool[ep.source_i], off, spec.input_len, spec.dt),
                    render(pool[ep.source_j], off + in_len, spec.output_len, spec.dt)};
    (k < kSupportSize ? ep.support : ep.query).push_back(std::move(pair));
  }
  return ep;
}

EpisodeSet episode_stream(const DatasetSpec& spec, std::size_t count, std::size_t skip) {
  if (count < 1) throw ConfigError("episode count must be at least 1");
  Rng rng(spec.seed);
  EpisodeSet set;
  set.spec = spec;
  set.pool = build_base_pool(spec, rng);
  set.episodes.reserve(count);
  for (std::size_t k = 0; k < skip + count; ++k) {
    Episode ep = sample_episode(set.pool, spec, rng);
    if (k >= skip) set.episodes.push_back(std::move(ep));
  }
  return set;
}

}  // namespace driftbench::synth
