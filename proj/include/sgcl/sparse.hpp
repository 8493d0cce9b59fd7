#pragma once

#include <cstddef>
#include <vector>

#include "sgcl/dense_matrix.hpp"

namespace sgcl {

// Compressed-row real matrix.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, std::vector<double> values);

  static CsrMatrix identity(std::size_t n);
  static CsrMatrix from_dense(const DenseMatrix& d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  DenseMatrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

// sparse * dense
DenseMatrix spmm(const CsrMatrix& sparse, const DenseMatrix& dense);
// sparse^T * dense
DenseMatrix spmm_transposed(const CsrMatrix& sparse, const DenseMatrix& dense);

}  // namespace sgcl
