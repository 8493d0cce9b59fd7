#include "sgcl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgcl/errors.hpp"
#include "sgcl/numerics.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

void ProbeConfig::validate() const {
  if (!(l2_lambda >= 0.0)) throw ConfigError("probe: l2_lambda must be non-negative");
  if (epochs == 0) throw ConfigError("probe: epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("probe: learning_rate must be positive");
}

RepresentationMatrix final_embeddings(const EncoderConfig& config, const EncoderParams& params,
                                      const DatasetBundle& bundle) {
  const CsrMatrix adj = normalized_adjacency(bundle.graph);
  return encoder_forward(config, params, adj, bundle.features, ForwardMode::Eval).h;
}

std::vector<std::size_t> predict_classes(const DenseMatrix& h, const DenseMatrix& weights, const DenseMatrix& bias) {
  if (weights.rows() != h.cols() || bias.cols() != weights.cols()) {
    throw ShapeError("predict_classes: H " + h.shape_string() + ", W " + weights.shape_string());
  }
  const DenseMatrix logits = matmul(h, weights);
  std::vector<std::size_t> out(h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    std::size_t best = 0;
    double best_v = logits(i, 0) + bias(0, 0);
    for (std::size_t c = 1; c < weights.cols(); ++c) {
      const double v = logits(i, c) + bias(0, c);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out[i] = best;
  }
  return out;
}

namespace {

double accuracy(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& labels,
                const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i : idx) hit += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

}  // namespace

ProbeResult fit_linear_probe(const DenseMatrix& h, const std::vector<std::size_t>& labels, std::size_t num_classes,
                             const SplitSpec& split, const ProbeConfig& config) {
  config.validate();
  if (labels.size() != h.rows()) throw ShapeError("probe: label count does not match embedding rows");
  if (num_classes < 1) throw ConfigError("probe: need at least one class");
  for (const auto* part : {&split.train_idx, &split.val_idx, &split.test_idx})
    for (std::size_t i : *part)
      if (i >= h.rows()) throw RangeError("probe: split index " + std::to_string(i) + " out of range");
  if (split.train_idx.empty()) throw DegenerateProbeError("probe: empty training split");
  {
    const std::size_t first = labels[split.train_idx.front()];
    const bool single = std::all_of(split.train_idx.begin(), split.train_idx.end(),
                                    [&](std::size_t i) { return labels[i] == first; });
    if (single) throw DegenerateProbeError("probe: training split contains a single class");
  }

  const std::size_t n = split.train_idx.size();
  const std::size_t d = h.cols();
  const std::size_t c = num_classes;
  DenseMatrix x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = h.row(split.train_idx[r]);
    std::copy(src.begin(), src.end(), x.row(r).begin());
  }

  ProbeResult res;
  res.weights = DenseMatrix(d, c);
  res.bias = DenseMatrix(1, c);
  DenseMatrix gw(d, c);
  DenseMatrix gb(1, c);
  OptimState opt;
  opt.hyper = {config.learning_rate, 0.9, 0.999, 1e-8, 0.0};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    DenseMatrix logits = matmul(x, res.weights);
    // Softmax minus one-hot, averaged over rows.
    for (std::size_t r = 0; r < n; ++r) {
      auto row = logits.row(r);
      double mx = -INFINITY;
      for (std::size_t k = 0; k < c; ++k) {
        row[k] += res.bias(0, k);
        mx = std::max(mx, row[k]);
      }
      double z = 0.0;
      for (double& v : row) {
        v = std::exp(v - mx);
        z += v;
      }
      for (double& v : row) v /= z;
      row[labels[split.train_idx[r]]] -= 1.0;
      for (double& v : row) v /= static_cast<double>(n);
    }
    gw = matmul_tn(x, logits);
    const auto w = res.weights.values();
    auto g = gw.values();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += 2.0 * config.l2_lambda * w[k];
    gb = column_sum(logits);
    adamw_step({{"probe_w", &res.weights, &gw}, {"probe_b", &res.bias, &gb}}, opt);
  }

  const auto pred = predict_classes(h, res.weights, res.bias);
  res.accuracy_train = accuracy(pred, labels, split.train_idx);
  res.accuracy_val = accuracy(pred, labels, split.val_idx);
  res.accuracy_test = accuracy(pred, labels, split.test_idx);
  return res;
}

SplitEvaluation evaluate_over_splits(const DenseMatrix& h, const std::vector<std::size_t>& labels,
                                     std::size_t num_classes, std::size_t num_splits, const ProbeConfig& config,
                                     SplitFractions fractions) {
  if (num_splits == 0) throw ConfigError("evaluate_over_splits: num_splits must be >= 1");
  SplitEvaluation ev;
  for (std::size_t s = 0; s < num_splits; ++s) {
    const std::uint64_t seed = Rng::derive(config.seed, s);
    const SplitSpec split = random_split(h.rows(), fractions, seed);
    const ProbeResult r = fit_linear_probe(h, labels, num_classes, split, config);
    ev.reports.push_back({seed, r.accuracy_train, r.accuracy_val, r.accuracy_test});
  }
  double sum = 0.0;
  for (const auto& r : ev.reports) sum += r.acc_test;
  ev.mean_test = sum / static_cast<double>(num_splits);
  if (num_splits > 1) {
    double ss = 0.0;
    for (const auto& r : ev.reports) ss += (r.acc_test - ev.mean_test) * (r.acc_test - ev.mean_test);
    ev.std_test = std::sqrt(ss / static_cast<double>(num_splits - 1));
  }
  return ev;
}

}  // namespace sgcl
