// SPDX-License-Identifier: Apache-2.0
// Full-length Dynamic training on S1; about a minute and a half.
#include <doctest.h>

#include "driftbench/adapt/loop.hpp"

using namespace driftbench;

TEST_CASE("dynamic S1: final-epoch query MSE below first-epoch") {
  synth::DatasetSpec spec;
  spec.seed = 1;
  const synth::EpisodeSet data = synth::episode_stream(spec, 1000);
  Rng rng(7);
  model::Model m(model::ModelConfig{}, rng);
  const adapt::AdaptConfig cfg;  // 50 epochs x 100 batches
  const adapt::RunLog log = adapt::train_run(data, m, cfg, 3);
  REQUIRE(log.epoch_query_loss.size() == 50);
  INFO("first " << log.epoch_query_loss.front() << ", final " << log.epoch_query_loss.back());
  CHECK(log.epoch_query_loss.back() < log.epoch_query_loss.front());
}
