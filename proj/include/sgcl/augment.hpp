#pragma once

#include <cstdint>

#include "sgcl/graph.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

struct AugmentConfig {
  double p_e = 0.0;  // edge drop probability, [0, 1)
  double p_f = 0.0;  // feature-dimension drop probability, [0, 1)

  void validate() const;
};

struct AugmentedView {
  Graph graph;
  FeatureMatrix features;
  std::uint64_t seed_used = 0;
};

// Keeps each undirected edge with probability 1 - p_e; both directions share
// one draw.
Graph drop_edges(const Graph& graph, double p_e, Rng& rng);

// Zeroes each feature column independently with probability p_f.
FeatureMatrix mask_features(const FeatureMatrix& features, double p_f, Rng& rng);

// drop_edges followed by mask_features, both driven by a stream seeded from
// one draw of `rng`, which is recorded in the view.
AugmentedView augment(const DatasetBundle& bundle, const AugmentConfig& config, Rng& rng);

}  // namespace sgcl
