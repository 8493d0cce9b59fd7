#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sgcl/dense_matrix.hpp"
#include "sgcl/rng.hpp"

namespace sgcl {

struct AlignmentStats {
  double s_bar = 0.0;  // mean row-wise cosine similarity
  double d_bar = 0.0;  // mean row-wise Euclidean distance
  std::vector<double> length_ratios;  // ||h1_i|| / ||h2_i|| over kept rows
  std::vector<double> cosines;
  std::vector<double> distances;
  std::vector<std::size_t> nodes;  // row index of each kept entry
  std::size_t degenerate_rows = 0;
};

// Rows where either side has norm < kNormGuard are excluded and counted.
AlignmentStats alignment_stats(const DenseMatrix& h1, const DenseMatrix& h2);

struct PearsonResult {
  double mean_abs_offdiag = 0.0;
  std::vector<std::size_t> nodes;       // sampled row indices, ascending
  std::optional<DenseMatrix> matrix;    // |nodes| x |nodes|, when requested
  std::size_t constant_rows = 0;
};

// Pearson correlation between representation rows of a uniform sample of at
// most max_nodes nodes. Correlations involving a constant row are 0.
PearsonResult pearson_offdiag(const DenseMatrix& h, std::size_t max_nodes, Rng& rng, bool keep_matrix = false);

struct EigenResidual {
  std::size_t node = 0;
  double lambda = 0.0;    // Rayleigh quotient hᵀPh / hᵀh
  double residual = 0.0;  // ||P h - lambda h|| / ||h||
};

struct EigenResidualReport {
  std::vector<EigenResidual> rows;
  std::size_t degenerate_rows = 0;
  double median_residual() const;
};

EigenResidualReport eigen_alignment_residual(const DenseMatrix& p, const DenseMatrix& h);

// Singular-value trajectory of the linear teacher-student model as printed:
// s_hat e^{2 s_hat t / omega} / (e^{2 s_hat t / omega} - 1 + s_hat / omega).
double ts_closed_form(double s_hat, double omega, double t);

// Same logistic law started from s(0) = s0 instead of omega.
double ts_closed_form_from(double s_hat, double omega, double t, double s0);

struct TsDynamicsConfig {
  DenseMatrix input;  // rows are samples; unit-norm rows expected
  double epsilon = 1e-3;
  double learning_rate = 1.0;
  std::size_t steps = 20000;
  std::size_t record_every = 10;
};

struct TsPoint {
  std::size_t step = 0;
  double rel_distance = 0.0;             // ||W_p - Sigma||_F / ||Sigma||_F
  double vector_deviation = 0.0;         // off-diagonal mass of Ûᵀ W_p V̂ over ||W_p||_F
  std::vector<double> singular_values;   // descending
};

struct TsResult {
  DenseMatrix sigma;                     // Hᵀ H / (N - 1)
  std::vector<double> teacher_spectrum;  // singular values of sigma, descending
  DenseMatrix final_wp;
  std::vector<TsPoint> trajectory;       // step 0, every record_every steps, and the last step
  double max_vector_deviation = 0.0;     // over every step, not only recorded ones
};

// Gradient descent on a factorized linear student W_p = W2 W1 learning the
// teacher correlation Sigma under whitened inputs, loss
// ½||W_p||² - tr(W_pᵀ Sigma), from W2 = sqrt(eps) Û, W1 = sqrt(eps) V̂ᵀ.
// Throws DivergenceError when the distance to Sigma grows for 100 consecutive
// steps or becomes non-finite.
TsResult ts_simulate(const TsDynamicsConfig& config);

}  // namespace sgcl
