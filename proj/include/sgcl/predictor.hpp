#pragma once

#include <cstddef>
#include <string_view>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/encoder.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

enum class PredictorVariant { Inferential, Mlp, Identity };

std::string_view to_string(PredictorVariant v);
PredictorVariant predictor_variant_from_string(std::string_view s);

struct PredictorKind {
  PredictorVariant variant = PredictorVariant::Inferential;
  std::size_t mlp_hidden_dim = 256;  // mlp only
};

// Row norms below this are treated as degenerate.
inline constexpr double kNormGuard = 1e-12;

struct CenteredRows {
  RepresentationMatrix values;
  std::size_t degenerate_rows = 0;
};

// Subtracts the column mean, then scales every row to unit length. Rows whose
// centered norm falls below kNormGuard come back as zero rows.
CenteredRows center_and_normalize(const RepresentationMatrix& h);

// H̄ᵀH̄ / (N - 1); symmetric positive semidefinite.
DenseMatrix inferential_predictor(const RepresentationMatrix& h_bar);

// Z = H P. P is a constant in training, so dL/dH = dL/dZ Pᵀ.
RepresentationMatrix predict(const RepresentationMatrix& h, const DenseMatrix& p);
DenseMatrix predict_backward(const DenseMatrix& dz, const DenseMatrix& p);

// One-hidden-layer MLP predictor d -> hidden -> d.
struct MlpParams {
  DenseMatrix w1, b1, w2, b2, prelu_slope;

  template <class F>
  void visit(F&& f) {
    f("mlp_w1", w1), f("mlp_b1", b1), f("mlp_w2", w2), f("mlp_b2", b2), f("mlp_prelu_slope", prelu_slope);
  }
  template <class F>
  void visit(F&& f) const {
    f("mlp_w1", w1), f("mlp_b1", b1), f("mlp_w2", w2), f("mlp_b2", b2), f("mlp_prelu_slope", prelu_slope);
  }
  MlpParams zeros_like() const;
  std::size_t parameter_count() const;
};

MlpParams init_mlp(std::size_t dim, std::size_t hidden, Rng& rng, double prelu_init = 0.25);

struct MlpTrace {
  Activation activation = Activation::Prelu;
  MlpParams params;
  DenseMatrix input;
  DenseMatrix pre_act;
  DenseMatrix hidden;
};

struct MlpOutput {
  RepresentationMatrix z;
  MlpTrace trace;
};

MlpOutput mlp_predict_forward(const MlpParams& params, const RepresentationMatrix& h,
                              Activation activation = Activation::Prelu);

struct MlpGradients {
  MlpParams params;
  DenseMatrix dh;
};

MlpGradients mlp_predict_backward(const MlpTrace& trace, const DenseMatrix& dz);

}  // namespace sgcl
