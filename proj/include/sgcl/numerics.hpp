#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

// Uniform Glorot initialization in [-a, a], a = sqrt(6 / (rows + cols)).
DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

struct AdamHyper {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // 0 gives plain Adam
};

// One trainable tensor together with its gradient for a single update.
struct ParamSlot {
  std::string name;
  DenseMatrix* value;
  const DenseMatrix* grad;
};

struct OptimState {
  AdamHyper hyper;
  std::vector<DenseMatrix> first_moment;
  std::vector<DenseMatrix> second_moment;
  std::int64_t step_count = 0;
};

// Decoupled-weight-decay Adam step. Moments are allocated on the first call and
// must keep matching shapes afterwards. Gradients are validated before any
// parameter is touched.
void adamw_step(const std::vector<ParamSlot>& slots, OptimState& state);

}  // namespace sgcl
