#include "sgcl/augment.hpp"

#include <algorithm>
#include <string>

#include "sgcl/errors.hpp"

namespace sgcl {
namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1), got " + std::to_string(p));
}

}  // namespace

void AugmentConfig::validate() const {
  check_probability(p_e, "p_e");
  check_probability(p_f, "p_f");
}

Graph drop_edges(const Graph& graph, double p_e, Rng& rng) {
  check_probability(p_e, "p_e");
  const std::size_t n = graph.num_nodes();
  const auto& off = graph.row_offsets();
  const auto& cols = graph.col_indices();

  // One decision per stored entry. An entry (i, j) with i > j reuses the
  // decision of (j, i) when that reverse entry exists.
  std::vector<char> keep(cols.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const std::size_t j = cols[k];
      if (i < j || !graph.has_edge(j, i)) keep[k] = rng.bernoulli(1.0 - p_e) ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const std::size_t j = cols[k];
      if (i > j && graph.has_edge(j, i)) {
        const auto b = cols.begin() + static_cast<std::ptrdiff_t>(off[j]);
        const auto e = cols.begin() + static_cast<std::ptrdiff_t>(off[j + 1]);
        keep[k] = keep[static_cast<std::size_t>(std::lower_bound(b, e, i) - cols.begin())];
      }
    }
  }

  std::vector<std::size_t> new_off{0};
  new_off.reserve(n + 1);
  std::vector<std::size_t> new_cols;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k)
      if (keep[k]) new_cols.push_back(cols[k]);
    new_off.push_back(new_cols.size());
  }
  return Graph(n, std::move(new_off), std::move(new_cols));
}

FeatureMatrix mask_features(const FeatureMatrix& features, double p_f, Rng& rng) {
  check_probability(p_f, "p_f");
  FeatureMatrix out = features;
  std::vector<char> drop(features.cols());
  for (auto& d : drop) d = rng.bernoulli(p_f) ? 1 : 0;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      if (drop[j]) r[j] = 0.0;
  }
  return out;
}

AugmentedView augment(const DatasetBundle& bundle, const AugmentConfig& config, Rng& rng) {
  config.validate();
  AugmentedView view;
  view.seed_used = rng.next_u64();
  Rng local(view.seed_used);
  view.graph = drop_edges(bundle.graph, config.p_e, local);
  view.features = mask_features(bundle.features, config.p_f, local);
  return view;
}

}  // namespace sgcl
