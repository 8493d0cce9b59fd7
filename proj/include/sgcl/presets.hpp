#pragma once

#include "sgcl/graph.hpp"
#include "sgcl/trainer.hpp"

namespace sgcl {

// The synthetic benchmark: 4 communities of 100 nodes, 32 features, library
// defaults for edge probabilities and feature signal/noise.
inline SbmConfig benchmark_sbm_config() {
  SbmConfig c;
  c.num_communities = 4;
  c.nodes_per_community = 100;
  c.feature_dim = 32;
  return c;
}

inline constexpr std::uint64_t kBenchmarkGraphSeed = 0;

// Library defaults (hidden 256, output 128, lr 5e-4, weight decay 1e-5,
// p_e 0.3, p_f 0.2) over 300 iterations, periodic probing off.
inline TrainConfig benchmark_train_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 300;
  c.seed = seed;
  c.probe_every = 0;
  return c;
}

}  // namespace sgcl
