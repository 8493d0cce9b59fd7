#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sgcl/augment.hpp"
#include "sgcl/errors.hpp"

using namespace sgcl;

namespace {

Graph ring_with_chords(std::size_t n, std::size_t edges, Rng& rng) {
  std::vector<Edge> e;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  while (e.size() < edges) {
    std::size_t u = rng.below(n), v = rng.below(n);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (seen.insert({u, v}).second) e.emplace_back(u, v);
  }
  return Graph::from_undirected_edges(n, e);
}

std::size_t zero_columns(const DenseMatrix& m) {
  std::size_t z = 0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    bool all = true;
    for (std::size_t i = 0; i < m.rows(); ++i) all = all && m(i, j) == 0.0;
    z += all ? 1 : 0;
  }
  return z;
}

}  // namespace

TEST_CASE("drop_edges: identity at p_e = 0 and determinism") {
  Rng g(1);
  const Graph graph = ring_with_chords(200, 600, g);
  Rng r(5);
  CHECK(drop_edges(graph, 0.0, r) == graph);
  Rng a(8), b(8);
  CHECK(drop_edges(graph, 0.4, a) == drop_edges(graph, 0.4, b));
  CHECK_THROWS_AS(drop_edges(graph, 1.0, a), ConfigError);
  CHECK_THROWS_AS(drop_edges(graph, -0.1, a), ConfigError);
}

TEST_CASE("drop_edges: kept count is binomial over 50 seeds and symmetry survives") {
  Rng g(2);
  const Graph graph = ring_with_chords(400, 1000, g);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r(seed);
    const Graph kept = drop_edges(graph, 0.5, r);
    CHECK(kept.is_symmetric());
    CHECK(kept.num_nodes() == graph.num_nodes());
    const double count = static_cast<double>(kept.undirected_edges().size());
    CHECK(std::abs(count - 500.0) <= 3.0 * std::sqrt(1000.0 * 0.25));
    for (const auto& [u, v] : kept.undirected_edges()) CHECK(graph.has_edge(u, v));
  }
}

TEST_CASE("mask_features: identity, whole columns, binomial count") {
  Rng g(3);
  const DenseMatrix x = testutil::random_matrix(20, 300, g);
  Rng r0(0);
  CHECK(mask_features(x, 0.0, r0) == x);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r(seed);
    const DenseMatrix m = mask_features(x, 0.3, r);
    const std::size_t z = zero_columns(m);
    CHECK(std::abs(static_cast<double>(z) - 90.0) <= 3.0 * std::sqrt(300.0 * 0.21));
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const bool masked = m(0, j) == 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) CHECK(m(i, j) == (masked ? 0.0 : x(i, j)));
    }
  }
  CHECK_THROWS_AS(mask_features(x, 1.0, r0), ConfigError);
}

TEST_CASE("augment: identity config, determinism and seed record") {
  const DatasetBundle b = generate_sbm(SbmConfig{}, 4);
  Rng r(1);
  const AugmentedView same = augment(b, {0.0, 0.0}, r);
  CHECK(same.graph == b.graph);
  CHECK(same.features == b.features);

  Rng a(9), c(9);
  const AugmentedView va = augment(b, {0.4, 0.1}, a);
  const AugmentedView vc = augment(b, {0.4, 0.1}, c);
  CHECK(va.graph == vc.graph);
  CHECK(va.features == vc.features);
  CHECK(va.seed_used == vc.seed_used);

  // The recorded seed alone regenerates the view.
  Rng replay(va.seed_used);
  CHECK(drop_edges(b.graph, 0.4, replay) == va.graph);
  CHECK(mask_features(b.features, 0.1, replay) == va.features);
  CHECK_THROWS_AS(augment(b, {0.2, 1.5}, a), ConfigError);
}

TEST_CASE("augment: heavy edge drop on the SBM graph") {
  const DatasetBundle b = generate_sbm(SbmConfig{}, 6);
  const double total = static_cast<double>(b.graph.undirected_edges().size());
  const double sd = std::sqrt(total * 0.1 * 0.9);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r(seed);
    const AugmentedView v = augment(b, {0.9, 0.0}, r);
    CHECK(std::abs(static_cast<double>(v.graph.undirected_edges().size()) - 0.1 * total) <= 3.0 * sd);
    CHECK(v.features == b.features);
  }
}
