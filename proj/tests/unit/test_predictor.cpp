#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "helpers.hpp"
#include "sgcl/errors.hpp"
#include "sgcl/predictor.hpp"

using namespace sgcl;

namespace {

DenseMatrix triple_loop_gram(const DenseMatrix& h) {
  DenseMatrix p(h.cols(), h.cols());
  for (std::size_t a = 0; a < h.cols(); ++a)
    for (std::size_t b = 0; b < h.cols(); ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < h.rows(); ++i) s += h(i, a) * h(i, b);
      p(a, b) = s / static_cast<double>(h.rows() - 1);
    }
  return p;
}

}  // namespace

TEST_CASE("center_and_normalize: analytic examples") {
  const auto a = center_and_normalize(DenseMatrix{{3, 4}, {-3, -4}}).values;
  CHECK(max_abs_diff(a, DenseMatrix{{0.6, 0.8}, {-0.6, -0.8}}) < 1e-15);
  const double r = std::sqrt(2.0) / 2.0;
  const auto b = center_and_normalize(DenseMatrix{{1, 0}, {0, 1}}).values;
  CHECK(max_abs_diff(b, DenseMatrix{{r, -r}, {-r, r}}) < 1e-15);
  const auto c = center_and_normalize(DenseMatrix{{2, 5, 1}, {2, 5, 1}, {2, 5, 1}});
  CHECK(c.values == DenseMatrix(3, 3));
  CHECK(c.degenerate_rows == 3);
  CHECK_THROWS_AS(center_and_normalize(DenseMatrix{{1, 2}}), UsageError);
}

TEST_CASE("inferential_predictor: analytic 2x2 and PSD symmetry") {
  const double r = std::sqrt(2.0) / 2.0;
  const DenseMatrix p = inferential_predictor(DenseMatrix{{r, -r}, {-r, r}});
  CHECK(max_abs_diff(p, DenseMatrix{{1, -1}, {-1, 1}}) < 1e-15);
  CHECK_THROWS_AS(inferential_predictor(DenseMatrix{{1, 0}}), UsageError);

  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix hb = center_and_normalize(testutil::random_matrix(15, 6, rng)).values;
    const DenseMatrix q = inferential_predictor(hb);
    CHECK(q == transpose(q));
    Eigen::MatrixXd e(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) e(i, j) = q(i, j);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(e);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("inferential_predictor: triple-loop oracle and trace") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30), d = 1 + rng.below(8);
    const DenseMatrix hb = center_and_normalize(testutil::random_matrix(n, d, rng)).values;
    const DenseMatrix p = inferential_predictor(hb);
    CHECK(max_abs_diff(p, triple_loop_gram(hb)) <= 1e-12);
    if (d >= 2) {
      double tr = 0.0;
      for (std::size_t j = 0; j < d; ++j) tr += p(j, j);
      CHECK(tr == doctest::Approx(static_cast<double>(n) / static_cast<double>(n - 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("predict: identity, scalar, oracle, linearity, shape") {
  Rng rng(3);
  const DenseMatrix h = testutil::random_matrix(7, 4, rng);
  CHECK(predict(h, DenseMatrix::identity(4)) == h);
  DenseMatrix scaled = DenseMatrix::identity(4);
  scaled *= 2.5;
  CHECK(max_abs_diff(predict(h, scaled), 2.5 * h) < 1e-15);

  const DenseMatrix p = testutil::random_matrix(4, 4, rng);
  DenseMatrix ref(7, 4);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) ref(i, j) += h(i, k) * p(k, j);
  CHECK(max_abs_diff(predict(h, p), ref) <= 1e-12);

  const DenseMatrix h2 = testutil::random_matrix(7, 4, rng);
  CHECK(max_abs_diff(predict(1.5 * h + (-0.5) * h2, p), 1.5 * predict(h, p) + (-0.5) * predict(h2, p)) < 1e-12);

  // dL/dH = dZ Pᵀ
  const DenseMatrix dz = testutil::random_matrix(7, 4, rng);
  CHECK(max_abs_diff(predict_backward(dz, p), matmul(dz, transpose(p))) < 1e-14);
  CHECK_THROWS_AS(predict(h, DenseMatrix(3, 3)), ShapeError);
}

TEST_CASE("mlp predictor: degenerate and identity compositions") {
  Rng rng(4);
  const DenseMatrix h = testutil::random_matrix(6, 3, rng);
  MlpParams p = init_mlp(3, 5, rng);
  p.w1.fill(0.0);
  p.w2.fill(0.0);
  p.b2 = DenseMatrix{{1.0, -2.0, 0.5}};
  const auto z = mlp_predict_forward(p, h).z;
  for (std::size_t i = 0; i < 6; ++i) CHECK(max_abs_diff(DenseMatrix{{z(i, 0), z(i, 1), z(i, 2)}}, p.b2) == 0.0);

  MlpParams id = init_mlp(3, 3, rng);
  id.w1 = id.w2 = DenseMatrix::identity(3);
  CHECK(mlp_predict_forward(id, h, Activation::Identity).z == h);
  CHECK_THROWS_AS(mlp_predict_forward(init_mlp(4, 5, rng), h), ShapeError);
}

TEST_CASE("mlp predictor: gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const DenseMatrix h = testutil::random_matrix(9, 4, rng);
    const MlpParams p = init_mlp(4, 6, rng);
    const DenseMatrix g = testutil::random_matrix(9, 4, rng);
    auto objective = [&](const MlpParams& q, const DenseMatrix& x) {
      const DenseMatrix z = mlp_predict_forward(q, x).z;
      double s = 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) s += z.values()[k] * g.values()[k];
      return s;
    };
    const auto out = mlp_predict_forward(p, h);
    const MlpGradients grads = mlp_predict_backward(out.trace, g);

    MlpParams probe = p;
    std::vector<std::vector<double>> numeric;
    probe.visit([&](std::string_view, DenseMatrix& m) {
      std::vector<double> col;
      for (double& v : m.values()) {
        const double keep = v;
        v = keep + 1e-5;
        const double up = objective(probe, h);
        v = keep - 1e-5;
        const double down = objective(probe, h);
        v = keep;
        col.push_back((up - down) / 2e-5);
      }
      numeric.push_back(std::move(col));
    });
    std::size_t i = 0;
    grads.params.visit([&](std::string_view name, const DenseMatrix& m) {
      INFO(name);
      CHECK(testutil::rel_error({m.values().begin(), m.values().end()}, numeric[i++]) < 1e-4);
    });

    DenseMatrix hp = h;
    std::vector<double> dh_num;
    for (double& v : hp.values()) {
      const double keep = v;
      v = keep + 1e-5;
      const double up = objective(p, hp);
      v = keep - 1e-5;
      const double down = objective(p, hp);
      v = keep;
      dh_num.push_back((up - down) / 2e-5);
    }
    CHECK(testutil::rel_error({grads.dh.values().begin(), grads.dh.values().end()}, dh_num) < 1e-4);
  }
}

TEST_CASE("predictor variant names round trip") {
  for (auto v : {PredictorVariant::Inferential, PredictorVariant::Mlp, PredictorVariant::Identity})
    CHECK(predictor_variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(predictor_variant_from_string("linear"), ConfigError);
}
