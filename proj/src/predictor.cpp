#include "sgcl/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgcl/errors.hpp"
#include "sgcl/numerics.hpp"

namespace sgcl {

std::string_view to_string(PredictorVariant v) {
  switch (v) {
    case PredictorVariant::Inferential: return "inferential";
    case PredictorVariant::Mlp: return "mlp";
    case PredictorVariant::Identity: return "identity";
  }
  return "?";
}

PredictorVariant predictor_variant_from_string(std::string_view s) {
  if (s == "inferential") return PredictorVariant::Inferential;
  if (s == "mlp") return PredictorVariant::Mlp;
  if (s == "identity") return PredictorVariant::Identity;
  throw ConfigError("unknown predictor '" + std::string(s) + "'");
}

CenteredRows center_and_normalize(const RepresentationMatrix& h) {
  if (h.rows() < 2) throw UsageError("center_and_normalize: need at least 2 rows");
  const DenseMatrix mean = column_mean(h);
  CenteredRows out{h, 0};
  for (std::size_t i = 0; i < h.rows(); ++i) {
    auto r = out.values.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= mean(0, j);
    const double nrm = norm2(r);
    if (nrm < kNormGuard) {
      std::fill(r.begin(), r.end(), 0.0);
      ++out.degenerate_rows;
    } else {
      for (double& v : r) v /= nrm;
    }
  }
  return out;
}

DenseMatrix inferential_predictor(const RepresentationMatrix& h_bar) {
  if (h_bar.rows() < 2) throw UsageError("inferential_predictor: need at least 2 rows");
  DenseMatrix p = matmul_tn(h_bar, h_bar);
  p *= 1.0 / static_cast<double>(h_bar.rows() - 1);
  // Exact symmetry; the accumulation above is already symmetric up to rounding.
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = i + 1; j < p.cols(); ++j) p(j, i) = p(i, j);
  return p;
}

RepresentationMatrix predict(const RepresentationMatrix& h, const DenseMatrix& p) {
  if (p.rows() != h.cols() || p.cols() != h.cols()) {
    throw ShapeError("predict: H " + h.shape_string() + " with P " + p.shape_string());
  }
  return matmul(h, p);
}

DenseMatrix predict_backward(const DenseMatrix& dz, const DenseMatrix& p) { return matmul_nt(dz, p); }

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  z.visit([](std::string_view, DenseMatrix& m) { m.fill(0.0); });
  return z;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, const DenseMatrix& m) { n += m.size(); });
  return n;
}

MlpParams init_mlp(std::size_t dim, std::size_t hidden, Rng& rng, double prelu_init) {
  MlpParams p;
  p.w1 = glorot_init(dim, hidden, rng);
  p.b1 = DenseMatrix(1, hidden);
  p.w2 = glorot_init(hidden, dim, rng);
  p.b2 = DenseMatrix(1, dim);
  p.prelu_slope = DenseMatrix(1, 1, prelu_init);
  return p;
}

namespace {

void add_bias(DenseMatrix& m, const DenseMatrix& b) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b(0, j);
  }
}

}  // namespace

MlpOutput mlp_predict_forward(const MlpParams& params, const RepresentationMatrix& h, Activation activation) {
  const std::size_t d = h.cols();
  const std::size_t hid = params.w1.cols();
  if (params.w1.rows() != d || params.b1.cols() != hid || params.w2.rows() != hid || params.w2.cols() != d ||
      params.b2.cols() != d || params.b1.rows() != 1 || params.b2.rows() != 1) {
    throw ShapeError("mlp predictor: parameter shapes do not match representation width " + std::to_string(d));
  }
  MlpOutput out;
  DenseMatrix pre = matmul(h, params.w1);
  add_bias(pre, params.b1);
  DenseMatrix act = pre;
  if (activation != Activation::Identity) {
    const double s = activation == Activation::Relu ? 0.0 : params.prelu_slope(0, 0);
    for (double& v : act.values())
      if (!(v > 0.0)) v *= s;
  }
  out.z = matmul(act, params.w2);
  add_bias(out.z, params.b2);
  out.trace.activation = activation;
  out.trace.params = params;
  out.trace.input = h;
  out.trace.pre_act = std::move(pre);
  out.trace.hidden = std::move(act);
  return out;
}

MlpGradients mlp_predict_backward(const MlpTrace& trace, const DenseMatrix& dz) {
  const MlpParams& p = trace.params;
  if (dz.rows() != trace.input.rows() || dz.cols() != p.w2.cols()) {
    throw ShapeError("mlp predictor backward: dZ shape " + dz.shape_string());
  }
  MlpGradients g{p.zeros_like(), {}};
  g.params.w2 = matmul_tn(trace.hidden, dz);
  g.params.b2 = column_sum(dz);
  DenseMatrix dact = matmul_nt(dz, p.w2);
  if (trace.activation != Activation::Identity) {
    const double s = trace.activation == Activation::Relu ? 0.0 : p.prelu_slope(0, 0);
    double dslope = 0.0;
    const auto pre = trace.pre_act.values();
    auto d = dact.values();
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (!(pre[k] > 0.0)) {
        dslope += d[k] * pre[k];
        d[k] *= s;
      }
    }
    if (trace.activation == Activation::Prelu) g.params.prelu_slope(0, 0) = dslope;
  }
  g.params.w1 = matmul_tn(trace.input, dact);
  g.params.b1 = column_sum(dact);
  g.dh = matmul_nt(dact, p.w1);
  return g;
}

}  // namespace sgcl
