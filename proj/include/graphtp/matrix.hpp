#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "graphtp/error.hpp"

namespace graphtp {

/// Dense row-major matrix of doubles.
class DenseMatrix {
public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw InvalidParameter("DenseMatrix: data length does not match shape");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const DenseMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Compressed sparse row matrix; column indices sorted within each row.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;  // rows + 1
  std::vector<std::size_t> indices;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return indices.size(); }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) d(i, indices[p]) += values[p];
    return d;
  }
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(what);
}
}  // namespace detail

/// C = A * B. Zero entries of A are skipped, which makes sparse bag-of-words
/// feature matrices cheap.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// C = A^T * B.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

/// C = A * B^T.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  DenseMatrix c(a.rows(), b.rows());
  const std::size_t d = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// C = S * B for sparse S.
inline DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& b) {
  detail::require(s.cols == b.rows(), "spmm: inner dimensions differ");
  DenseMatrix c(s.rows, b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < s.rows; ++i) {
    double* ci = c.row(i).data();
    for (std::size_t p = s.offsets[i]; p < s.offsets[i + 1]; ++p) {
      const double v = s.values[p];
      const double* bk = b.row(s.indices[p]).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += v * bk[j];
    }
  }
  return c;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const DenseMatrix& a) { return l2_norm(a.data()); }

inline double trace(const DenseMatrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

/// Scales each row to unit L2 norm; zero rows stay zero. Returns the norms
/// that were divided out.
inline std::vector<double> row_l2_normalize(DenseMatrix& a) {
  std::vector<double> norms(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    const double n = l2_norm(r);
    norms[i] = n;
    if (n > 0.0)
      for (double& v : r) v /= n;
  }
  return norms;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "add: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] += b.data()[k];
  return c;
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "subtract: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] -= b.data()[k];
  return c;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "hadamard: shape mismatch");
  DenseMatrix c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c.data()[k] *= b.data()[k];
  return c;
}

inline DenseMatrix scale(const DenseMatrix& a, double s) {
  DenseMatrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

}  // namespace graphtp
