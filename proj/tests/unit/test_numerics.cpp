#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "sgcl/errors.hpp"
#include "sgcl/numerics.hpp"
#include "sgcl/parallel.hpp"
#include "sgcl/sparse.hpp"

using namespace sgcl;

namespace {

DenseMatrix naive_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

// Scalar Adam / AdamW written straight from the update rule.
struct ScalarAdam {
  double lr, b1, b2, eps, wd;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g) {
    ++t;
    p *= 1.0 - lr * wd;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mh = m / (1.0 - std::pow(b1, t));
    const double vh = v / (1.0 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("spmm: identity and empty sparse") {
  Rng rng(1);
  const DenseMatrix x = testutil::random_matrix(6, 3, rng);
  CHECK(spmm(CsrMatrix::identity(6), x) == x);
  const CsrMatrix empty(6, 6, std::vector<std::size_t>(7, 0), {}, {});
  CHECK(spmm(empty, x) == DenseMatrix(6, 3));
}

TEST_CASE("spmm: matches dense oracle on random instances") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t m = 1 + rng.below(64);
    const std::size_t d = 1 + rng.below(6);
    const CsrMatrix s = testutil::random_sparse(n, m, 0.2, rng);
    const DenseMatrix x = testutil::random_matrix(m, d, rng);
    CHECK(max_abs_diff(spmm(s, x), naive_product(s.to_dense(), x)) <= 1e-12);
    const DenseMatrix y = testutil::random_matrix(n, d, rng);
    CHECK(max_abs_diff(spmm_transposed(s, y), naive_product(transpose(s.to_dense()), y)) <= 1e-12);
  }
}

TEST_CASE("spmm: shape mismatch") {
  Rng rng(3);
  CHECK_THROWS_AS(spmm(CsrMatrix::identity(4), testutil::random_matrix(5, 2, rng)), ShapeError);
}

TEST_CASE("spmm: thread count does not change results") {
  Rng rng(4);
  const CsrMatrix s = testutil::random_sparse(1500, 1500, 0.01, rng);
  const DenseMatrix x = testutil::random_matrix(1500, 8, rng);
  const std::size_t saved = thread_cap();
  set_thread_cap(1);
  const DenseMatrix one = spmm(s, x);
  const DenseMatrix dense_one = matmul(x, transpose(x));
  set_thread_cap(4);
  const DenseMatrix four = spmm(s, x);
  const DenseMatrix dense_four = matmul(x, transpose(x));
  set_thread_cap(saved);
  CHECK(one == four);
  CHECK(dense_one == dense_four);
}

TEST_CASE("dense products agree with a naive oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t a = 1 + rng.below(9), b = 1 + rng.below(9), c = 1 + rng.below(9);
    const DenseMatrix x = testutil::random_matrix(a, b, rng);
    const DenseMatrix y = testutil::random_matrix(b, c, rng);
    const DenseMatrix ref = naive_product(x, y);
    CHECK(max_abs_diff(matmul(x, y), ref) <= 1e-12);
    CHECK(max_abs_diff(matmul_tn(transpose(x), y), ref) <= 1e-12);
    CHECK(max_abs_diff(matmul_nt(x, transpose(y)), ref) <= 1e-12);
  }
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ShapeError);
}

TEST_CASE("glorot_init: bounds, mean and determinism") {
  Rng rng(6);
  const DenseMatrix w = glorot_init(100, 50, rng);
  const double a = std::sqrt(6.0 / 150.0);
  for (double v : w.values()) CHECK(std::abs(v) <= a);

  const double a2 = std::sqrt(6.0 / 400.0);
  const double sigma = a2 / std::sqrt(3.0 * 200.0 * 200.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const DenseMatrix big = glorot_init(200, 200, r);
    double mean = 0.0;
    for (double v : big.values()) mean += v;
    mean /= static_cast<double>(big.size());
    CHECK(std::abs(mean) < 3.0 * sigma * 1.5);  // 3σ with slack for 20 draws
  }

  Rng r1(9), r2(9);
  CHECK(glorot_init(7, 5, r1) == glorot_init(7, 5, r2));
  CHECK_THROWS_AS(glorot_init(0, 5, r1), ConfigError);
}

TEST_CASE("adamw: zero gradient cases") {
  DenseMatrix p{{1.0, -2.0}, {0.5, 3.0}};
  const DenseMatrix orig = p;
  const DenseMatrix g(2, 2);
  OptimState st;
  st.hyper = {0.1, 0.9, 0.999, 1e-8, 0.0};
  adamw_step({{"p", &p, &g}}, st);
  CHECK(p == orig);
  CHECK(st.step_count == 1);

  OptimState decay;
  decay.hyper = {0.1, 0.9, 0.999, 1e-8, 0.2};
  adamw_step({{"p", &p, &g}}, decay);
  for (std::size_t k = 0; k < p.size(); ++k) CHECK(p.values()[k] == doctest::Approx(orig.values()[k] * (1.0 - 0.02)));
}

TEST_CASE("adamw: single scalar step matches hand oracle") {
  DenseMatrix p{{1.0}};
  const DenseMatrix g{{0.5}};
  OptimState st;
  st.hyper = {0.1, 0.9, 0.999, 1e-8, 0.0};
  adamw_step({{"p", &p, &g}}, st);
  // m̂ = 0.5, v̂ = 0.25, so the step is lr * 0.5 / (0.5 + eps).
  const double expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(std::abs(p(0, 0) - expected) < 1e-15);
}

TEST_CASE("adamw: 100 steps track the scalar oracle exactly") {
  for (double wd : {0.0, 0.01}) {
    ScalarAdam oracle{0.05, 0.9, 0.999, 1e-8, wd};
    DenseMatrix p{{2.0}};
    OptimState st;
    st.hyper = {0.05, 0.9, 0.999, 1e-8, wd};
    double q = 2.0;
    for (int i = 0; i < 100; ++i) {
      // gradient of (p - 0.3)^2
      const DenseMatrix g{{2.0 * (p(0, 0) - 0.3)}};
      const double gq = 2.0 * (q - 0.3);
      adamw_step({{"p", &p, &g}}, st);
      q = oracle.step(q, gq);
      REQUIRE(p(0, 0) == doctest::Approx(q).epsilon(1e-14));
    }
  }
}

TEST_CASE("adamw: non-finite gradient names the parameter and leaves values intact") {
  DenseMatrix a{{1.0}}, b{{2.0}};
  const DenseMatrix ga{{0.1}}, gb{{NAN}};
  OptimState st;
  try {
    adamw_step({{"alpha", &a, &ga}, {"beta", &b, &gb}}, st);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("beta") != std::string::npos);
  }
  CHECK(a(0, 0) == 1.0);
  CHECK(b(0, 0) == 2.0);
  CHECK(st.step_count == 0);
  const DenseMatrix wrong(2, 1);
  CHECK_THROWS_AS(adamw_step({{"alpha", &a, &wrong}}, st), ShapeError);
}

TEST_CASE("matrix serialization round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "sgcl_matrix_io";
  std::filesystem::create_directories(dir);
  Rng rng(10);
  const DenseMatrix m = testutil::random_matrix(3, 4, rng);
  save_matrix(m, dir / "m.bin");
  CHECK(load_matrix(dir / "m.bin") == m);
  CHECK(std::filesystem::file_size(dir / "m.bin") == 8 + 16 + 12 * 8);

  {
    std::ofstream os(dir / "bad.bin", std::ios::binary);
    os << "NOTAMAT1";
  }
  CHECK_THROWS_AS(load_matrix(dir / "bad.bin"), IoError);
  std::filesystem::resize_file(dir / "m.bin", 8 + 16 + 5 * 8);
  CHECK_THROWS_AS(load_matrix(dir / "m.bin"), IoError);
  CHECK_THROWS_AS(load_matrix(dir / "missing.bin"), IoError);
  std::filesystem::remove_all(dir);
}
