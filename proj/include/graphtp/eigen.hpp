#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"

namespace graphtp {

/// Eigenpairs of a symmetric matrix. Eigenvalues ascend; column i of
/// `vectors` pairs with values[i] and has its first non-negligible entry
/// positive.
struct EigenDecomposition {
  std::vector<double> values;
  DenseMatrix vectors;
  int sweeps = 0;
};

/// U * diag(f(lambda)) * U^T.
template <typename F>
DenseMatrix spectral_reconstruct(const EigenDecomposition& eig, F&& f) {
  const std::size_t n = eig.values.size();
  DenseMatrix scaled = eig.vectors;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = f(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) scaled(i, k) *= w;
  }
  return matmul_nt(scaled, eig.vectors);
}

inline DenseMatrix reconstruct(const EigenDecomposition& eig) {
  return spectral_reconstruct(eig, [](double l) { return l; });
}

/// Cyclic Jacobi eigensolver. The input is symmetrized by averaging first.
/// Converges when the off-diagonal Frobenius norm drops below tol * ||M||_F;
/// throws NumericalFailure after `max_sweeps` sweeps.
inline EigenDecomposition sym_eig(const DenseMatrix& m, double tol = 1e-10, int max_sweeps = 100) {
  if (m.rows() != m.cols()) throw InvalidParameter("sym_eig: matrix is not square");
  const std::size_t n = m.rows();

  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  if (!a.all_finite()) throw NumericalFailure("sym_eig: non-finite input");

  // Rows of vt are eigenvectors; kept transposed so rotations touch
  // contiguous memory.
  DenseMatrix vt = DenseMatrix::identity(n);

  const double norm = frobenius_norm(a);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  double off = off_norm();
  while (norm > 0.0 && off >= tol * norm) {
    if (sweep == max_sweeps)
      throw NumericalFailure("sym_eig: Jacobi iteration did not converge", off);
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        double* rp = a.row(p).data();
        double* rq = a.row(q).data();
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = rp[k];
          const double akq = rq[k];
          rp[k] = c * akp - s * akq;
          rq[k] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          a(k, p) = rp[k];
          a(k, q) = rq[k];
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        double* vp = vt.row(p).data();
        double* vq = vt.row(q).data();
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vp[k];
          const double y = vq[k];
          vp[k] = c * x - s * y;
          vq[k] = s * x + c * y;
        }
      }
    }
    off = off_norm();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.values[col] = a(src, src);
    auto v = vt.row(src);
    double sign = 1.0;
    for (double x : v) {
      if (std::abs(x) > 1e-12) {
        sign = x > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, col) = sign * v[i];
  }
  return out;
}

}  // namespace graphtp
