#include "sgcl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include "sgcl/errors.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

Graph::Graph(std::size_t num_nodes, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices)
    : num_nodes_(num_nodes), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)) {
  if (row_offsets_.size() != num_nodes_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size()) {
    throw ConsistencyError("Graph: row offsets do not match node count / column count");
  }
  for (std::size_t r = 0; r < num_nodes_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) throw ConsistencyError("Graph: row offsets decrease");
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      const std::size_t c = col_indices_[k];
      if (c >= num_nodes_) throw RangeError("Graph: column index " + std::to_string(c) + " >= " + std::to_string(num_nodes_));
      if (c == r) throw ConsistencyError("Graph: self-loop stored at node " + std::to_string(r));
      if (k > row_offsets_[r] && col_indices_[k - 1] >= c) {
        throw ConsistencyError("Graph: row " + std::to_string(r) + " columns unsorted or duplicated");
      }
    }
  }
}

Graph Graph::from_undirected_edges(std::size_t num_nodes, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(num_nodes);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw RangeError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::size_t> offsets{0};
  offsets.reserve(num_nodes + 1);
  std::vector<std::size_t> cols;
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    cols.insert(cols.end(), row.begin(), row.end());
    offsets.push_back(cols.size());
  }
  return Graph(num_nodes, std::move(offsets), std::move(cols));
}

bool Graph::has_edge(std::size_t src, std::size_t dst) const {
  const auto b = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[src]);
  const auto e = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[src + 1]);
  return std::binary_search(b, e, dst);
}

bool Graph::is_symmetric() const {
  for (std::size_t r = 0; r < num_nodes_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      if (!has_edge(col_indices_[k], r)) return false;
  return true;
}

std::vector<Edge> Graph::undirected_edges() const {
  std::vector<Edge> out;
  for (std::size_t r = 0; r < num_nodes_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      if (col_indices_[k] > r) out.emplace_back(r, col_indices_[k]);
  return out;
}

void DatasetBundle::validate() const {
  const std::size_t n = graph.num_nodes();
  if (features.rows() != n) {
    throw ConsistencyError("dataset: " + std::to_string(features.rows()) + " feature rows for " + std::to_string(n) + " nodes");
  }
  if (labels.size() != n) {
    throw ConsistencyError("dataset: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " nodes");
  }
  for (std::size_t l : labels) {
    if (l >= num_classes) throw ConsistencyError("dataset: label " + std::to_string(l) + " >= num_classes");
  }
  if (!features.all_finite()) throw ConsistencyError("dataset: non-finite feature entries");
}

void SbmConfig::validate() const {
  if (num_communities == 0) throw ConfigError("sbm: zero communities");
  if (nodes_per_community == 0) throw ConfigError("sbm: zero nodes per community");
  if (!(inter_prob >= 0.0 && inter_prob < intra_prob && intra_prob <= 1.0)) {
    throw ConfigError("sbm: need 0 <= inter_prob < intra_prob <= 1");
  }
  if (feature_dim < num_communities) throw ConfigError("sbm: feature_dim must be >= num_communities");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_signal)) throw ConfigError("sbm: invalid feature signal/noise");
}

namespace {

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+'.
    if (s.front() == '+') s.remove_prefix(1);
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::ifstream open_text(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot open " + p.string());
  return is;
}

}  // namespace

DatasetBundle load_dataset(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                           const std::filesystem::path& label_path) {
  const std::string edge_name = edge_path.string();
  const std::string feat_name = feature_path.string();
  const std::string label_name = label_path.string();

  std::vector<double> feat_values;
  std::size_t feat_rows = 0;
  std::size_t feat_cols = 0;
  {
    auto is = open_text(feature_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string_view sv = trim_cr(line);
      if (sv.empty()) continue;
      std::size_t cols = 0;
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = sv.find(',', start);
        const std::string_view cell = sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start);
        double v;
        if (!parse_number(cell, v) || !std::isfinite(v)) throw ParseError(feat_name, line_no, "bad real '" + std::string(cell) + "'");
        feat_values.push_back(v);
        ++cols;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      if (feat_rows == 0) {
        feat_cols = cols;
      } else if (cols != feat_cols) {
        throw ParseError(feat_name, line_no, "expected " + std::to_string(feat_cols) + " columns, got " + std::to_string(cols));
      }
      ++feat_rows;
    }
  }
  const std::size_t n = feat_rows;

  std::vector<Edge> edges;
  {
    auto is = open_text(edge_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string_view sv = trim_cr(line);
      if (sv.empty()) continue;
      const std::size_t sp = sv.find(' ');
      std::size_t u = 0;
      std::size_t v = 0;
      if (sp == std::string_view::npos || !parse_number(sv.substr(0, sp), u) || !parse_number(sv.substr(sp + 1), v)) {
        throw ParseError(edge_name, line_no, "expected \"src dst\", got '" + std::string(sv) + "'");
      }
      if (u >= n || v >= n) {
        throw ConsistencyError(edge_name + ":" + std::to_string(line_no) + ": node index " + std::to_string(std::max(u, v)) +
                               " but feature file has " + std::to_string(n) + " rows");
      }
      edges.emplace_back(u, v);
    }
  }

  std::vector<std::size_t> labels;
  {
    auto is = open_text(label_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string_view sv = trim_cr(line);
      if (sv.empty()) continue;
      std::size_t l;
      if (!parse_number(sv, l)) throw ParseError(label_name, line_no, "bad label '" + std::string(sv) + "'");
      labels.push_back(l);
    }
  }
  if (labels.size() != n) {
    throw ConsistencyError(label_name + " has " + std::to_string(labels.size()) + " rows, feature file has " + std::to_string(n));
  }

  DatasetBundle b;
  b.graph = Graph::from_undirected_edges(n, edges);
  b.features = DenseMatrix(n, feat_cols, std::move(feat_values));
  b.num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  b.labels = std::move(labels);
  b.validate();
  return b;
}

DatasetBundle generate_sbm(const SbmConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t k = config.num_communities;
  const std::size_t per = config.nodes_per_community;
  const std::size_t n = k * per;
  Rng rng(seed);

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = (i / per == j / per) ? config.intra_prob : config.inter_prob;
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
    }
  }

  const std::size_t f = config.feature_dim;
  const std::size_t block = (f + k - 1) / k;
  DenseMatrix x(n, f);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / per;
    labels[i] = c;
    const std::size_t lo = std::min(f, c * block);
    const std::size_t hi = std::min(f, (c + 1) * block);
    for (std::size_t j = 0; j < f; ++j) {
      const double signal = (j >= lo && j < hi) ? config.feature_signal : 0.0;
      x(i, j) = signal + config.feature_noise * rng.normal();
    }
  }

  DatasetBundle b;
  b.graph = Graph::from_undirected_edges(n, edges);
  b.features = std::move(x);
  b.labels = std::move(labels);
  b.num_classes = k;
  return b;
}

CsrMatrix normalized_adjacency(const Graph& graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(i) + 1));

  std::vector<std::size_t> offsets{0};
  offsets.reserve(n + 1);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(graph.num_entries() + n);
  vals.reserve(graph.num_entries() + n);
  const auto& off = graph.row_offsets();
  const auto& gc = graph.col_indices();
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const std::size_t j = gc[k];
      if (!diag_done && j > i) {
        cols.push_back(i);
        vals.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[i]);
        diag_done = true;
      }
      cols.push_back(j);
      vals.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
    if (!diag_done) {
      cols.push_back(i);
      vals.push_back(inv_sqrt_deg[i] * inv_sqrt_deg[i]);
    }
    offsets.push_back(cols.size());
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::move(vals));
}

SplitSpec random_split(std::size_t num_nodes, SplitFractions fractions, std::uint64_t seed) {
  if (num_nodes == 0) throw ConfigError("random_split: no nodes");
  if (!(fractions.train > 0.0 && fractions.val > 0.0 && fractions.test > 0.0)) {
    throw ConfigError("random_split: fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("random_split: fractions must sum to 1");
  }
  std::vector<std::size_t> perm(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);

  const auto n = static_cast<double>(num_nodes);
  // Tiny slack so that e.g. 0.1 * 100 floors to 10, not 9.
  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(fractions.val * n + 1e-9));

  SplitSpec s;
  s.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                   perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return s;
}

}  // namespace sgcl
