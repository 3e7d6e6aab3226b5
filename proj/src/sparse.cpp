#include "dtm/sparse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dtm/error.hpp"

namespace dtm {

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("dense matrix " + shape_string(rows, cols) + " given " +
                         std::to_string(values_.size()) + " values");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// SparseMatrix

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), col_ptr_(cols + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) {
      throw DimensionError("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                           ") outside " + shape_string(rows, cols));
    }
    if (!std::isfinite(t.value)) {
      throw std::invalid_argument("non-finite value at (" + std::to_string(t.row) + ", " +
                                  std::to_string(t.col) + ")");
    }
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  SparseMatrix m(rows, cols);
  m.row_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      throw std::invalid_argument("duplicate entry at (" + std::to_string(t.row) + ", " +
                                  std::to_string(t.col) + ")");
    }
    if (t.value == 0.0) continue;
    m.row_idx_.push_back(t.row);
    m.values_.push_back(t.value);
    ++m.col_ptr_[t.col + 1];
  }
  std::partial_sum(m.col_ptr_.begin(), m.col_ptr_.end(), m.col_ptr_.begin());
  return m;
}

SparseMatrix SparseMatrix::from_csc(std::size_t rows, std::size_t cols,
                                    std::vector<std::size_t> col_ptr, std::vector<Index> row_idx,
                                    std::vector<double> values) {
  if (col_ptr.size() != cols + 1 || col_ptr.front() != 0 || col_ptr.back() != row_idx.size() ||
      row_idx.size() != values.size()) {
    throw DimensionError("inconsistent CSC arrays for " + shape_string(rows, cols));
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (col_ptr[c] > col_ptr[c + 1]) throw DimensionError("column pointers not monotone");
    for (std::size_t p = col_ptr[c]; p < col_ptr[c + 1]; ++p) {
      if (row_idx[p] >= rows) throw DimensionError("row index out of range");
      if (p > col_ptr[c] && row_idx[p] <= row_idx[p - 1]) {
        throw std::invalid_argument("row indices not strictly increasing in column " +
                                    std::to_string(c));
      }
      if (!std::isfinite(values[p])) throw std::invalid_argument("non-finite value");
    }
  }
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.col_ptr_ = std::move(col_ptr);
  m.row_idx_ = std::move(row_idx);
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> ptr(n + 1);
  std::iota(ptr.begin(), ptr.end(), std::size_t{0});
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  return from_csc(n, n, std::move(ptr), std::move(idx), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d) {
  SparseMatrix m(d.rows(), d.cols());
  for (std::size_t c = 0; c < d.cols(); ++c) {
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (d(r, c) != 0.0) {
        m.row_idx_.push_back(static_cast<Index>(r));
        m.values_.push_back(d(r, c));
      }
    }
    m.col_ptr_[c + 1] = m.values_.size();
  }
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) {
    throw DimensionError("index (" + std::to_string(r) + ", " + std::to_string(c) + ") outside " +
                         shape_string(rows_, cols_));
  }
  auto idx = col_indices(c);
  auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(r));
  if (it == idx.end() || *it != r) return 0.0;
  return col_values(c)[static_cast<std::size_t>(it - idx.begin())];
}

double SparseMatrix::col_norm(std::size_t c) const noexcept {
  double s = 0.0;
  for (double v : col_values(c)) s += v * v;
  return std::sqrt(s);
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(cols_, rows_);
  std::vector<std::size_t> counts(rows_ + 1, 0);
  for (Index r : row_idx_) ++counts[r + 1];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  t.col_ptr_ = counts;
  t.row_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> next(counts.begin(), counts.end() - 1);
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::size_t p = col_ptr_[c]; p < col_ptr_[c + 1]; ++p) {
      const std::size_t dst = next[row_idx_[p]]++;
      t.row_idx_[dst] = static_cast<Index>(c);
      t.values_[dst] = values_[p];
    }
  }
  return t;
}

SparseMatrix SparseMatrix::select_cols(std::span<const std::size_t> cols) const {
  SparseMatrix m(rows_, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= cols_) throw DimensionError("column index out of range");
    auto idx = col_indices(cols[j]);
    auto val = col_values(cols[j]);
    m.row_idx_.insert(m.row_idx_.end(), idx.begin(), idx.end());
    m.values_.insert(m.values_.end(), val.begin(), val.end());
    m.col_ptr_[j + 1] = m.values_.size();
  }
  return m;
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  constexpr auto kDropped = static_cast<Index>(-1);
  std::vector<Index> remap(rows_, kDropped);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw DimensionError("row index out of range");
    remap[rows[i]] = static_cast<Index>(i);
  }
  std::vector<Triplet> kept;
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::size_t p = col_ptr_[c]; p < col_ptr_[c + 1]; ++p) {
      if (remap[row_idx_[p]] != kDropped) {
        kept.push_back({remap[row_idx_[p]], static_cast<Index>(c), values_[p]});
      }
    }
  }
  return from_triplets(rows.size(), cols_, std::move(kept));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t c = 0; c < cols_; ++c)
    for (std::size_t p = col_ptr_[c]; p < col_ptr_[c + 1]; ++p) d(row_idx_[p], c) = values_[p];
  return d;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t c = 0; c < cols_; ++c)
    for (std::size_t p = col_ptr_[c]; p < col_ptr_[c + 1]; ++p)
      out.push_back({row_idx_[p], static_cast<Index>(c), values_[p]});
  return out;
}

// ---------------------------------------------------------------------------
// Products

double sparse_col_dot(const SparseMatrix& a, std::size_t i, const SparseMatrix& b, std::size_t j) {
  auto ai = a.col_indices(i);
  auto av = a.col_values(i);
  auto bi = b.col_indices(j);
  auto bv = b.col_values(j);
  double s = 0.0;
  std::size_t p = 0, q = 0;
  while (p < ai.size() && q < bi.size()) {
    if (ai[p] < bi[q]) {
      ++p;
    } else if (bi[q] < ai[p]) {
      ++q;
    } else {
      s += av[p++] * bv[q++];
    }
  }
  return s;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("spmm: cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
                         shape_string(b.rows(), b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t k = 0; k < a.cols(); ++k) {
    auto idx = a.col_indices(k);
    auto val = a.col_values(k);
    auto brow = b.row(k);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      auto orow = out.row(idx[p]);
      for (std::size_t j = 0; j < brow.size(); ++j) orow[j] += val[p] * brow[j];
    }
  }
  return out;
}

DenseMatrix spmm(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("spmm: cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
                         shape_string(b.rows(), b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto bidx = b.col_indices(j);
    auto bval = b.col_values(j);
    for (std::size_t q = 0; q < bidx.size(); ++q) {
      auto aidx = a.col_indices(bidx[q]);
      auto aval = a.col_values(bidx[q]);
      for (std::size_t p = 0; p < aidx.size(); ++p) out(aidx[p], j) += aval[p] * bval[q];
    }
  }
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
                         shape_string(b.rows(), b.cols()));
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cholesky

DenseMatrix cholesky(const DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("cholesky: matrix " + shape_string(a.rows(), a.cols()) + " is not square");
  }
  const std::size_t n = a.rows();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw NotPositiveDefinite(j, d);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

void cholesky_solve(const DenseMatrix& lower, std::span<double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) {
    throw DimensionError("cholesky_solve: factor " + shape_string(n, n) + ", rhs length " +
                         std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * b[k];
    b[i] = s / lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * b[k];
    b[i] = s / lower(i, i);
  }
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

SymEigs sym_eigs_topk(const DenseMatrix& a, std::size_t k) {
  const std::size_t n = a.rows();
  if (a.cols() != n) {
    throw DimensionError("sym_eigs_topk: matrix " + shape_string(n, a.cols()) + " is not square");
  }
  if (k > n) {
    throw DimensionError("sym_eigs_topk: k = " + std::to_string(k) + " exceeds order " +
                         std::to_string(n));
  }
  double scale = 1.0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * scale) {
        throw std::invalid_argument("sym_eigs_topk: matrix is not symmetric at (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> view(a.values().data(), static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(view);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eigs_topk: eigensolver did not converge");
  }
  // Eigen returns ascending order.
  const auto& evals = solver.eigenvalues();
  const auto& evecs = solver.eigenvectors();
  SymEigs out;
  out.values.resize(k);
  out.vectors = DenseMatrix(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto src = static_cast<Eigen::Index>(n - 1 - j);
    out.values[j] = evals(src);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = evecs(static_cast<Eigen::Index>(i), src);
  }
  return out;
}

}  // namespace dtm
