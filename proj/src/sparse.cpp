#include "sgcl/sparse.hpp"

#include <string>

#include "sgcl/errors.hpp"
#include "sgcl/parallel.hpp"

namespace sgcl {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size() ||
      col_indices_.size() != values_.size()) {
    throw ShapeError("CsrMatrix: inconsistent compressed-row arrays");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_offsets_[r] > row_offsets_[r + 1]) throw ShapeError("CsrMatrix: row offsets decrease");
  }
  for (std::size_t c : col_indices_) {
    if (c >= cols_) throw RangeError("CsrMatrix: column index " + std::to_string(c) + " out of range");
  }
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = i;
  }
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& d) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (d(i, j) != 0.0) {
        cols.push_back(j);
        vals.push_back(d(i, j));
      }
    }
    offsets.push_back(cols.size());
  }
  return CsrMatrix(d.rows(), d.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) d(r, col_indices_[k]) += values_[k];
  return d;
}

DenseMatrix spmm(const CsrMatrix& sparse, const DenseMatrix& dense) {
  if (sparse.cols() != dense.rows()) {
    throw ShapeError("spmm: sparse (" + std::to_string(sparse.rows()) + "x" + std::to_string(sparse.cols()) +
                     ") * dense " + dense.shape_string());
  }
  const std::size_t d = dense.cols();
  DenseMatrix out(sparse.rows(), d);
  const auto& off = sparse.row_offsets();
  const auto& cols = sparse.col_indices();
  const auto& vals = sparse.values();
  parallel_rows(sparse.rows(), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r) {
      double* o = out.data() + r * d;
      for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
        const double v = vals[k];
        const double* in = dense.data() + cols[k] * d;
        for (std::size_t j = 0; j < d; ++j) o[j] += v * in[j];
      }
    }
  });
  return out;
}

DenseMatrix spmm_transposed(const CsrMatrix& sparse, const DenseMatrix& dense) {
  if (sparse.rows() != dense.rows()) {
    throw ShapeError("spmm_transposed: sparse^T rows " + std::to_string(sparse.cols()) + " vs dense " +
                     dense.shape_string());
  }
  const std::size_t d = dense.cols();
  DenseMatrix out(sparse.cols(), d);
  const auto& off = sparse.row_offsets();
  const auto& cols = sparse.col_indices();
  const auto& vals = sparse.values();
  for (std::size_t r = 0; r < sparse.rows(); ++r) {
    const double* in = dense.data() + r * d;
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
      const double v = vals[k];
      double* o = out.data() + cols[k] * d;
      for (std::size_t j = 0; j < d; ++j) o[j] += v * in[j];
    }
  }
  return out;
}

}  // namespace sgcl
