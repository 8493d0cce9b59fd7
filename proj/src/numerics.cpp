#include "sgcl/numerics.hpp"

#include <cmath>

#include "sgcl/errors.hpp"

namespace sgcl {

DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ConfigError("glorot_init: zero dimension");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-a, a);
  return m;
}

void adamw_step(const std::vector<ParamSlot>& slots, OptimState& state) {
  const AdamHyper& h = state.hyper;
  if (h.weight_decay < 0.0) throw ConfigError("adamw: negative weight decay");

  for (const auto& s : slots) {
    if (!s.value->same_shape(*s.grad)) {
      throw ShapeError("adamw: gradient shape " + s.grad->shape_string() + " for parameter '" + s.name + "' " +
                       s.value->shape_string());
    }
    if (!s.grad->all_finite()) throw NumericError("adamw: non-finite gradient for parameter '" + s.name + "'");
  }

  if (state.first_moment.empty()) {
    for (const auto& s : slots) {
      state.first_moment.emplace_back(s.value->rows(), s.value->cols());
      state.second_moment.emplace_back(s.value->rows(), s.value->cols());
    }
  }
  if (state.first_moment.size() != slots.size()) throw ShapeError("adamw: parameter count changed between steps");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!state.first_moment[i].same_shape(*slots[i].value)) {
      throw ShapeError("adamw: moment shape mismatch for parameter '" + slots[i].name + "'");
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  const double decay = 1.0 - h.learning_rate * h.weight_decay;

  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto p = slots[i].value->values();
    auto g = slots[i].grad->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] *= decay;
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

}  // namespace sgcl
