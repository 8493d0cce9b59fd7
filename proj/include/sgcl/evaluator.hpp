#pragma once

#include <cstdint>
#include <vector>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/encoder.hpp"
#include "sgcl/graph.hpp"

namespace sgcl {

struct ProbeConfig {
  double l2_lambda = 1e-4;
  std::size_t epochs = 300;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;  // drives split derivation in evaluate_over_splits

  void validate() const;
};

struct ProbeResult {
  double accuracy_train = 0.0;
  double accuracy_val = 0.0;
  double accuracy_test = 0.0;
  DenseMatrix weights;  // d x num_classes
  DenseMatrix bias;     // 1 x num_classes
};

// Eval-mode forward on the clean graph.
RepresentationMatrix final_embeddings(const EncoderConfig& config, const EncoderParams& params,
                                      const DatasetBundle& bundle);

// Argmax of H W + b per row; ties go to the lowest class index.
std::vector<std::size_t> predict_classes(const DenseMatrix& h, const DenseMatrix& weights, const DenseMatrix& bias);

// Multinomial logistic regression with penalty lambda * ||W||², trained by
// full-batch Adam on the train rows only. Weights start at zero.
ProbeResult fit_linear_probe(const DenseMatrix& h, const std::vector<std::size_t>& labels, std::size_t num_classes,
                             const SplitSpec& split, const ProbeConfig& config);

struct SplitReport {
  std::uint64_t split_seed = 0;
  double acc_train = 0.0;
  double acc_val = 0.0;
  double acc_test = 0.0;
};

struct SplitEvaluation {
  std::vector<SplitReport> reports;
  double mean_test = 0.0;
  double std_test = 0.0;  // sample standard deviation; 0 for a single split
};

SplitEvaluation evaluate_over_splits(const DenseMatrix& h, const std::vector<std::size_t>& labels,
                                     std::size_t num_classes, std::size_t num_splits, const ProbeConfig& config,
                                     SplitFractions fractions = {});

}  // namespace sgcl
