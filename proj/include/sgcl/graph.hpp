#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/sparse.hpp"

namespace sgcl {

using Edge = std::pair<std::size_t, std::size_t>;

// Immutable unweighted adjacency in compressed-row form. Undirected graphs
// store both directions. Columns within a row are sorted and unique; self-loops
// are never stored (propagation adds them).
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices);

  // Symmetrizes, sorts and deduplicates; drops self-loops.
  static Graph from_undirected_edges(std::size_t num_nodes, const std::vector<Edge>& edges);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  // Number of stored (directed) entries.
  std::size_t num_entries() const noexcept { return col_indices_.size(); }
  std::size_t degree(std::size_t node) const { return row_offsets_[node + 1] - row_offsets_[node]; }
  const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const noexcept { return col_indices_; }

  bool has_edge(std::size_t src, std::size_t dst) const;
  bool is_symmetric() const;
  // Each undirected edge once as (u, v) with u < v.
  std::vector<Edge> undirected_edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
};

struct DatasetBundle {
  Graph graph;
  FeatureMatrix features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t num_nodes() const noexcept { return graph.num_nodes(); }
  // Throws ConsistencyError when fields disagree.
  void validate() const;
};

struct SplitSpec {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  std::vector<std::size_t> test_idx;
};

struct SbmConfig {
  std::size_t num_communities = 4;
  std::size_t nodes_per_community = 100;
  double intra_prob = 0.1;
  double inter_prob = 0.01;
  std::size_t feature_dim = 32;
  double feature_signal = 1.0;
  double feature_noise = 1.0;

  void validate() const;
};

// Edge file: "src dst" per line. Features: CSV rows. Labels: one integer per
// line. The feature file defines N.
DatasetBundle load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                           const std::filesystem::path& label_path);

DatasetBundle generate_sbm(const SbmConfig& config, std::uint64_t seed);

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
CsrMatrix normalized_adjacency(const Graph& graph);

struct SplitFractions {
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
};

SplitSpec random_split(std::size_t num_nodes, SplitFractions fractions, std::uint64_t seed);

}  // namespace sgcl
