#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/graph.hpp"
#include "sgcl/rng.hpp"
#include "sgcl/sparse.hpp"

namespace testutil {

inline sgcl::DenseMatrix random_matrix(std::size_t rows, std::size_t cols, sgcl::Rng& rng, double scale = 1.0) {
  sgcl::DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

// Erdős–Rényi style undirected graph.
inline sgcl::Graph random_graph(std::size_t n, double p, sgcl::Rng& rng) {
  std::vector<sgcl::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
  return sgcl::Graph::from_undirected_edges(n, edges);
}

inline sgcl::CsrMatrix random_sparse(std::size_t rows, std::size_t cols, double density, sgcl::Rng& rng) {
  sgcl::DenseMatrix d(rows, cols);
  for (double& v : d.values())
    if (rng.bernoulli(density)) v = rng.normal();
  return sgcl::CsrMatrix::from_dense(d);
}

// Dense A from a graph, independent of CSR propagation code.
inline std::vector<std::vector<double>> dense_adjacency(const sgcl::Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (const auto& [u, v] : g.undirected_edges()) a[u][v] = a[v][u] = 1.0;
  return a;
}

// D̃^-1/2 (A + I) D̃^-1/2 computed with plain loops.
inline std::vector<std::vector<double>> dense_normalized(const sgcl::Graph& g) {
  auto a = dense_adjacency(g);
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a[i][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i]) * std::sqrt(deg[j]);
  return a;
}

// Norm-wise relative error; two (near) zero tensors compare equal.
inline double rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  // Gradients that vanish analytically (a bias ahead of batch norm) leave
  // only finite-difference round-off, around 1e-10 per entry.
  if (denom < 1e-6) return std::sqrt(diff) < 1e-7 ? 0.0 : 1.0;
  return std::sqrt(diff) / denom;
}

}  // namespace testutil
