#include "sgcl/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "sgcl/errors.hpp"
#include "sgcl/predictor.hpp"

namespace sgcl {

AlignmentStats alignment_stats(const DenseMatrix& h1, const DenseMatrix& h2) {
  if (!h1.same_shape(h2)) throw ShapeError("alignment_stats: " + h1.shape_string() + " vs " + h2.shape_string());
  AlignmentStats s;
  double cos_sum = 0.0;
  double dist_sum = 0.0;
  for (std::size_t i = 0; i < h1.rows(); ++i) {
    const auto a = h1.row(i);
    const auto b = h2.row(i);
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na < kNormGuard || nb < kNormGuard) {
      ++s.degenerate_rows;
      continue;
    }
    const double c = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
    const double d = std::sqrt(d2);
    cos_sum += c;
    dist_sum += d;
    s.cosines.push_back(c);
    s.distances.push_back(d);
    s.length_ratios.push_back(na / nb);
    s.nodes.push_back(i);
  }
  if (s.nodes.empty()) throw EmptyStatisticsError("alignment_stats: every row is degenerate");
  const auto kept = static_cast<double>(s.nodes.size());
  s.s_bar = cos_sum / kept;
  s.d_bar = dist_sum / kept;
  return s;
}

PearsonResult pearson_offdiag(const DenseMatrix& h, std::size_t max_nodes, Rng& rng, bool keep_matrix) {
  if (h.cols() < 2) throw UsageError("pearson_offdiag: need at least 2 dimensions");
  if (max_nodes < 2 || h.rows() < 2) throw UsageError("pearson_offdiag: need at least 2 nodes");
  PearsonResult res;
  std::vector<std::size_t> idx(h.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t n = std::min(max_nodes, h.rows());
  if (n < h.rows()) {
    // Partial Fisher-Yates: first n entries become a uniform sample.
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  res.nodes = idx;

  const std::size_t d = h.cols();
  DenseMatrix z(n, d);
  std::vector<char> constant(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    const auto r = h.row(idx[a]);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(d);
    auto zr = z.row(a);
    for (std::size_t j = 0; j < d; ++j) zr[j] = r[j] - mean;
    const double nrm = norm2(zr);
    if (nrm < kNormGuard) {
      constant[a] = 1;
      ++res.constant_rows;
      std::fill(zr.begin(), zr.end(), 0.0);
    } else {
      for (double& v : zr) v /= nrm;
    }
  }

  DenseMatrix corr = matmul_nt(z, z);
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    corr(a, a) = constant[a] ? 0.0 : 1.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      corr(a, b) = std::clamp(corr(a, b), -1.0, 1.0);
      sum += std::abs(corr(a, b));
    }
  }
  res.mean_abs_offdiag = sum / static_cast<double>(n * (n - 1));
  if (keep_matrix) res.matrix = std::move(corr);
  return res;
}

double EigenResidualReport::median_residual() const {
  if (rows.empty()) throw EmptyStatisticsError("eigen residual report is empty");
  std::vector<double> r;
  r.reserve(rows.size());
  for (const auto& e : rows) r.push_back(e.residual);
  std::sort(r.begin(), r.end());
  const std::size_t m = r.size() / 2;
  return r.size() % 2 == 1 ? r[m] : 0.5 * (r[m - 1] + r[m]);
}

EigenResidualReport eigen_alignment_residual(const DenseMatrix& p, const DenseMatrix& h) {
  if (p.rows() != h.cols() || p.cols() != h.cols()) {
    throw ShapeError("eigen_alignment_residual: P " + p.shape_string() + " with H " + h.shape_string());
  }
  EigenResidualReport rep;
  const DenseMatrix ph = matmul_nt(h, p);  // row i = (P h_i)ᵀ
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const auto hi = h.row(i);
    const double hh = dot(hi, hi);
    if (std::sqrt(hh) < kNormGuard) {
      ++rep.degenerate_rows;
      continue;
    }
    const auto phi = ph.row(i);
    const double lambda = dot(hi, phi) / hh;
    double r2 = 0.0;
    for (std::size_t j = 0; j < hi.size(); ++j) {
      const double e = phi[j] - lambda * hi[j];
      r2 += e * e;
    }
    rep.rows.push_back({i, lambda, std::sqrt(r2 / hh)});
  }
  return rep;
}

double ts_closed_form(double s_hat, double omega, double t) {
  const double e = std::exp(2.0 * s_hat * t / omega);
  if (std::isinf(e)) return s_hat;
  return s_hat * e / (e - 1.0 + s_hat / omega);
}

double ts_closed_form_from(double s_hat, double omega, double t, double s0) {
  const double e = std::exp(2.0 * s_hat * t / omega);
  if (std::isinf(e)) return s_hat;
  return s_hat * e / (e - 1.0 + s_hat / s0);
}

namespace {

using Mat = Eigen::MatrixXd;

Mat to_eigen(const DenseMatrix& m) {
  Mat e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

DenseMatrix from_eigen(const Mat& e) {
  DenseMatrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return m;
}

std::vector<double> singular_values(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

}  // namespace

TsResult ts_simulate(const TsDynamicsConfig& config) {
  const DenseMatrix& h = config.input;
  if (h.rows() < 2 || h.cols() == 0) throw UsageError("ts_simulate: input needs at least 2 rows");
  if (!(config.epsilon > 0.0)) throw ConfigError("ts_simulate: epsilon must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("ts_simulate: learning_rate must be positive");
  if (config.record_every == 0) throw ConfigError("ts_simulate: record_every must be positive");
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double nrm = norm2(h.row(i));
    if (nrm > kNormGuard && std::abs(nrm - 1.0) > 1e-8) {
      throw UsageError("ts_simulate: row " + std::to_string(i) + " is not l2-normalized");
    }
  }

  TsResult res;
  res.sigma = matmul_tn(h, h);
  res.sigma *= 1.0 / static_cast<double>(h.rows() - 1);
  const Mat sigma = to_eigen(res.sigma);
  const double sigma_norm = sigma.norm();
  if (!(sigma_norm > 0.0)) throw UsageError("ts_simulate: covariance is zero");

  Eigen::JacobiSVD<Mat> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat u_hat = svd.matrixU();
  const Mat v_hat = svd.matrixV();
  res.teacher_spectrum.assign(svd.singularValues().data(), svd.singularValues().data() + svd.singularValues().size());

  const double root_eps = std::sqrt(config.epsilon);
  Mat w2 = root_eps * u_hat;
  Mat w1 = root_eps * v_hat.transpose();
  const double lr = config.learning_rate;

  auto deviation = [&](const Mat& wp) {
    const Mat core = u_hat.transpose() * wp * v_hat;
    const double total = core.norm();
    if (total == 0.0) return 0.0;
    const Mat off = core - Mat(core.diagonal().asDiagonal());
    return off.norm() / total;
  };
  auto record = [&](std::size_t step, const Mat& wp, double dist, double dev) {
    res.trajectory.push_back({step, dist, dev, singular_values(wp)});
  };

  Mat wp = w2 * w1;
  double dist = (wp - sigma).norm() / sigma_norm;
  res.max_vector_deviation = deviation(wp);
  record(0, wp, dist, res.max_vector_deviation);

  std::size_t rising = 0;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const Mat err = wp - sigma;
    const Mat g2 = err * w1.transpose();
    const Mat g1 = w2.transpose() * err;
    w2 -= lr * g2;
    w1 -= lr * g1;
    wp = w2 * w1;
    const double next = (wp - sigma).norm() / sigma_norm;
    if (!std::isfinite(next)) {
      throw DivergenceError("ts_simulate: non-finite student at step " + std::to_string(step) +
                                " (learning rate " + std::to_string(lr) + ")",
                            lr, static_cast<long>(step));
    }
    rising = next > dist ? rising + 1 : 0;
    if (rising >= 100) {
      throw DivergenceError("ts_simulate: distance to teacher grew for 100 consecutive steps ending at step " +
                                std::to_string(step) + " (learning rate " + std::to_string(lr) + ")",
                            lr, static_cast<long>(step));
    }
    dist = next;
    const double dev = deviation(wp);
    res.max_vector_deviation = std::max(res.max_vector_deviation, dev);
    if (step % config.record_every == 0 || step == config.steps) record(step, wp, dist, dev);
  }
  res.final_wp = from_eigen(wp);
  return res;
}

}  // namespace sgcl
