#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sgcl/encoder.hpp"
#include "sgcl/errors.hpp"

using namespace sgcl;
namespace fs = std::filesystem;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat to_rows(const DenseMatrix& m) {
  Mat r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

Mat mul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

// One GCN layer written out directly: Â(XW) + b, batch norm, activation.
Mat oracle_layer(const Mat& adj, const Mat& x, const DenseMatrix& w, const DenseMatrix& b, const DenseMatrix& gamma,
                 const DenseMatrix& beta, bool bn, double eps, double slope, bool act) {
  Mat u = mul(adj, mul(x, to_rows(w)));
  const std::size_t n = u.size(), m = u[0].size();
  for (auto& r : u)
    for (std::size_t j = 0; j < m; ++j) r[j] += b(0, j);
  if (bn) {
    for (std::size_t j = 0; j < m; ++j) {
      double mu = 0.0, var = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += u[i][j];
      mu /= n;
      for (std::size_t i = 0; i < n; ++i) var += (u[i][j] - mu) * (u[i][j] - mu);
      var /= n;
      for (std::size_t i = 0; i < n; ++i) u[i][j] = gamma(0, j) * (u[i][j] - mu) / std::sqrt(var + eps) + beta(0, j);
    }
  }
  if (act)
    for (auto& r : u)
      for (double& v : r) v = v > 0.0 ? v : slope * v;
  return u;
}

struct Tiny {
  EncoderConfig config;
  EncoderParams params;
  Graph graph;
  CsrMatrix adj;
  DenseMatrix x;
};

Tiny make_tiny(std::uint64_t seed, bool bn, Activation act = Activation::Prelu) {
  Rng rng(seed);
  Tiny t;
  t.config.in_dim = 5;
  t.config.hidden_dim = 7;
  t.config.out_dim = 4;
  t.config.use_batch_norm = bn;
  t.config.activation = act;
  t.params = init_encoder(t.config, rng);
  // Perturb every tensor away from its structured initial value.
  t.params.visit([&](std::string_view, DenseMatrix& m) {
    for (double& v : m.values()) v += 0.3 * rng.normal();
  });
  t.graph = testutil::random_graph(12, 0.3, rng);
  t.adj = normalized_adjacency(t.graph);
  t.x = testutil::random_matrix(12, 5, rng);
  return t;
}

double weighted_sum(const Tiny& t, const EncoderParams& p, const DenseMatrix& g) {
  const DenseMatrix h = encoder_forward(t.config, p, t.adj, t.x, ForwardMode::Eval).h;
  double s = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) s += h.values()[k] * g.values()[k];
  return s;
}

}  // namespace

TEST_CASE("encoder: linear composition without batch norm") {
  Rng rng(1);
  EncoderConfig c;
  c.in_dim = c.hidden_dim = c.out_dim = 3;
  c.use_batch_norm = false;
  c.activation = Activation::Identity;
  EncoderParams p = init_encoder(c, rng);
  p.w1 = p.w2 = DenseMatrix::identity(3);
  const Graph g = testutil::random_graph(9, 0.4, rng);
  const CsrMatrix adj = normalized_adjacency(g);
  const DenseMatrix x = testutil::random_matrix(9, 3, rng);
  const DenseMatrix h = encoder_forward(c, p, adj, x, ForwardMode::Eval).h;
  CHECK(max_abs_diff(h, spmm(adj, spmm(adj, x))) < 1e-13);
}

TEST_CASE("encoder: forward matches a straight-line oracle") {
  for (bool bn : {true, false}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Tiny t = make_tiny(seed, bn);
      const auto h = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Train).h;
      CHECK(h.rows() == 12);
      CHECK(h.cols() == 4);
      const Mat adj = testutil::dense_normalized(t.graph);
      const double slope = t.params.prelu_slope(0, 0);
      const Mat a1 = oracle_layer(adj, to_rows(t.x), t.params.w1, t.params.b1, t.params.bn1_scale, t.params.bn1_shift,
                                  bn, t.config.bn_eps, slope, true);
      const Mat ref = oracle_layer(adj, a1, t.params.w2, t.params.b2, t.params.bn2_scale, t.params.bn2_shift, bn,
                                   t.config.bn_eps, slope, false);
      double worst = 0.0;
      for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(h(i, j) - ref[i][j]));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("encoder: eval mode is deterministic and equals train mode values") {
  const Tiny t = make_tiny(3, true);
  const auto a = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Eval);
  const auto b = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Eval);
  const auto c = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Train);
  CHECK(a.h == b.h);
  CHECK(a.h == c.h);
  CHECK_THROWS_AS(encoder_backward(a.trace, a.h), UsageError);
}

TEST_CASE("encoder: zero upstream gradient gives zero gradients") {
  const Tiny t = make_tiny(4, true);
  const auto out = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Train);
  const EncoderParams g = encoder_backward(out.trace, DenseMatrix(12, 4));
  g.visit([](std::string_view, const DenseMatrix& m) {
    for (double v : m.values()) CHECK(v == 0.0);
  });
}

TEST_CASE("encoder: gradients match central finite differences") {
  for (bool bn : {true, false}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Tiny t = make_tiny(100 + seed, bn);
      Rng rng(seed);
      const DenseMatrix g = testutil::random_matrix(12, 4, rng);
      const auto out = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Train);
      const EncoderParams analytic = encoder_backward(out.trace, g);

      std::vector<std::vector<double>> numeric;
      EncoderParams probe = t.params;
      probe.visit([&](std::string_view, DenseMatrix& m) {
        std::vector<double> col;
        for (double& v : m.values()) {
          const double keep = v;
          v = keep + 1e-5;
          const double up = weighted_sum(t, probe, g);
          v = keep - 1e-5;
          const double down = weighted_sum(t, probe, g);
          v = keep;
          col.push_back((up - down) / 2e-5);
        }
        numeric.push_back(std::move(col));
      });
      std::size_t i = 0;
      analytic.visit([&](std::string_view name, const DenseMatrix& m) {
        const std::vector<double> a(m.values().begin(), m.values().end());
        const double err = testutil::rel_error(a, numeric[i++]);
        INFO("tensor " << name << " seed " << seed << " bn " << bn);
        CHECK(err < 1e-4);
      });
    }
  }
}

TEST_CASE("encoder: batch-norm scale gradient on a single-feature toy") {
  // One feature, no edges (Â = I), identity activation, unit weights. The
  // output is γ2 x̂ + β2 where x̂ standardizes the BN1 output; with γ1 > 0
  // that equals the standardized input.
  EncoderConfig c;
  c.in_dim = c.hidden_dim = c.out_dim = 1;
  c.activation = Activation::Identity;
  Rng rng(0);
  EncoderParams p = init_encoder(c, rng);
  p.w1 = p.w2 = DenseMatrix{{1.0}};
  p.bn2_scale = DenseMatrix{{1.7}};
  const DenseMatrix x{{1.0}, {2.0}, {4.0}, {7.0}};
  const CsrMatrix adj = normalized_adjacency(Graph::from_undirected_edges(4, {}));
  const DenseMatrix g{{0.5}, {-1.0}, {2.0}, {0.25}};
  const auto out = encoder_forward(c, p, adj, x, ForwardMode::Train);
  const EncoderParams grad = encoder_backward(out.trace, g);

  // Hand computation of x̂ for layer 2 input y1 = x̂(x) (γ1 = 1, β1 = 0).
  const double mean = 3.5;
  const double var = ((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) + (4 - mean) * (4 - mean) + (7 - mean) * (7 - mean)) / 4.0;
  double y1[4], expected_scale = 0.0, expected_shift = 0.0;
  for (int i = 0; i < 4; ++i) y1[i] = (x(i, 0) - mean) / std::sqrt(var + 1e-5);
  double m2 = 0.0, v2 = 0.0;
  for (double v : y1) m2 += v / 4.0;
  for (double v : y1) v2 += (v - m2) * (v - m2) / 4.0;
  for (int i = 0; i < 4; ++i) {
    expected_scale += g(i, 0) * (y1[i] - m2) / std::sqrt(v2 + 1e-5);
    expected_shift += g(i, 0);
  }
  CHECK(grad.bn2_scale(0, 0) == doctest::Approx(expected_scale).epsilon(1e-12));
  CHECK(grad.bn2_shift(0, 0) == doctest::Approx(expected_shift).epsilon(1e-12));
}

TEST_CASE("encoder: batch-norm statistics before scale and shift") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tiny t = make_tiny(200 + trial, true);
    // A vanishing stabilizer isolates the normalization itself.
    t.config.bn_eps = 1e-14;
    const auto out = encoder_forward(t.config, t.params, t.adj, t.x, ForwardMode::Train);
    for (const LayerTrace* tr : {&out.trace.layer1, &out.trace.layer2}) {
      const DenseMatrix& xh = tr->xhat;
      for (std::size_t j = 0; j < xh.cols(); ++j) {
        double mu = 0.0, var = 0.0;
        for (std::size_t i = 0; i < xh.rows(); ++i) mu += xh(i, j);
        mu /= static_cast<double>(xh.rows());
        for (std::size_t i = 0; i < xh.rows(); ++i) var += (xh(i, j) - mu) * (xh(i, j) - mu);
        var /= static_cast<double>(xh.rows());
        CHECK(std::abs(mu) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("encoder: shape and finiteness errors") {
  Tiny t = make_tiny(6, true);
  CHECK_THROWS_AS(encoder_forward(t.config, t.params, t.adj, DenseMatrix(12, 3), ForwardMode::Eval), ShapeError);
  CHECK_THROWS_AS(encoder_forward(t.config, t.params, CsrMatrix::identity(5), t.x, ForwardMode::Eval), ShapeError);
  EncoderParams bad = t.params;
  bad.w2 = DenseMatrix(3, 3);
  CHECK_THROWS_AS(encoder_forward(t.config, bad, t.adj, t.x, ForwardMode::Eval), ShapeError);
  bad = t.params;
  bad.w1(0, 0) = INFINITY;
  try {
    encoder_forward(t.config, bad, t.adj, t.x, ForwardMode::Eval);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("ema_update: limits and arithmetic") {
  const Tiny a = make_tiny(7, true), b = make_tiny(8, true);
  CHECK(ema_update(a.params, b.params, 0.0) == a.params);
  CHECK(ema_update(a.params, b.params, 1.0) == b.params);
  EncoderParams zero = a.params.zeros_like(), ones = a.params.zeros_like();
  ones.visit([](std::string_view, DenseMatrix& m) { m.fill(1.0); });
  const EncoderParams mixed = ema_update(zero, ones, 0.99);
  mixed.visit([](std::string_view, const DenseMatrix& m) {
    for (double v : m.values()) CHECK(v == doctest::Approx(0.99).epsilon(1e-15));
  });
  CHECK_THROWS_AS(ema_update(a.params, b.params, 1.5), ConfigError);
  CHECK_THROWS_AS(ema_update(a.params, b.params, -0.1), ConfigError);
}

TEST_CASE("checkpoint: round trip and corruption") {
  const fs::path dir = fs::temp_directory_path() / "sgcl_ckpt_test";
  fs::remove_all(dir);
  const Tiny t = make_tiny(9, true);
  save_checkpoint(dir, t.config, t.params);
  const Checkpoint ck = load_checkpoint(dir);
  CHECK(ck.params == t.params);
  CHECK(ck.config.hidden_dim == 7);
  CHECK(ck.config.activation == Activation::Prelu);

  fs::resize_file(dir / "w2.bin", 20);
  CHECK_THROWS_AS(load_checkpoint(dir), IoError);
  save_checkpoint(dir, t.config, t.params);
  {
    std::ofstream os(dir / "manifest.json");
    os << "{ not json";
  }
  CHECK_THROWS_AS(load_checkpoint(dir), IoError);
  save_checkpoint(dir, t.config, t.params);
  fs::remove(dir / "b1.bin");
  CHECK_THROWS_AS(load_checkpoint(dir), IoError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing"), IoError);
  fs::remove_all(dir);
}
