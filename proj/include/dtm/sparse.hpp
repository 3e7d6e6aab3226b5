#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dtm {

using Index = std::uint32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Row-major dense matrix of doubles. Used for small blocks (W Wᵀ, Cholesky
/// factors, eigenvectors) and for the N×N gram matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix transpose() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Compressed sparse column matrix. Row indices within a column are strictly
/// increasing, so no (row, col) pair is stored twice. Stored values are
/// finite; explicit zeros are allowed but never produced by the builders.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Throws DimensionError on out-of-range indices and std::invalid_argument
  /// on duplicate positions or non-finite values. Zero values are dropped.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);

  /// Takes ownership of pre-built CSC arrays and validates them.
  static SparseMatrix from_csc(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
                               std::vector<Index> row_idx, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const DenseMatrix& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const Index> col_indices(std::size_t c) const noexcept {
    return {row_idx_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }
  std::span<const double> col_values(std::size_t c) const noexcept {
    return {values_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }

  std::span<const std::size_t> col_ptr() const noexcept { return col_ptr_; }
  std::span<const Index> row_idx() const noexcept { return row_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  double at(std::size_t r, std::size_t c) const;
  double col_norm(std::size_t c) const noexcept;

  SparseMatrix transpose() const;
  /// Columns listed in `cols`, in that order.
  SparseMatrix select_cols(std::span<const std::size_t> cols) const;
  /// Rows listed in `rows`, renumbered 0..rows.size()-1 in that order.
  SparseMatrix select_rows(std::span<const std::size_t> rows) const;
  DenseMatrix to_dense() const;
  std::vector<Triplet> triplets() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<Index> row_idx_;
  std::vector<double> values_;
};

/// Sparse dot product of column `i` of `a` and column `j` of `b`.
double sparse_col_dot(const SparseMatrix& a, std::size_t i, const SparseMatrix& b, std::size_t j);

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);
DenseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// Lower-triangular L with L·Lᵀ = a. Throws NotPositiveDefinite carrying the
/// failing pivot index.
DenseMatrix cholesky(const DenseMatrix& a);

/// Solves L·Lᵀ x = b in place given the Cholesky factor L.
void cholesky_solve(const DenseMatrix& lower, std::span<double> b);

struct SymEigs {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // rows × k, column j pairs with values[j]
};

/// Top-k eigenpairs of a dense symmetric matrix. The full decomposition is
/// computed (Householder tridiagonalization + implicit QL/QR), so the cost is
/// O(n³) regardless of k.
SymEigs sym_eigs_topk(const DenseMatrix& a, std::size_t k);

// Matrix Market I/O. Sparse matrices use the coordinate format, dense ones the
// array format. Values are written with 17 significant digits, which makes a
// write/read cycle lossless.
void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m);
void write_matrix_market(const std::filesystem::path& path, const DenseMatrix& m);
SparseMatrix read_matrix_market_sparse(const std::filesystem::path& path);
DenseMatrix read_matrix_market_dense(const std::filesystem::path& path);

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace dtm
