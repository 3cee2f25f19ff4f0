#pragma once

// Two-layer GCN, Z = rownorm( A_hat * act(A_hat * X * W1) * W2 ), with
// A_hat = D~^{-1/2} (A + I) D~^{-1/2}. Forward and backward are written out
// by hand; backward includes the Jacobian of the row normalization.

#include <cmath>
#include <string>
#include <string_view>

#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/rng.hpp"

namespace graphtp {

enum class Activation { ReLU, Identity };

inline std::string_view to_string(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw InvalidParameter("unknown activation '" + std::string(s) + "'");
}

struct EncoderParams {
  DenseMatrix w1;  // d x h
  DenseMatrix w2;  // h x d'
  Activation activation = Activation::ReLU;

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t output_dim() const { return w2.cols(); }

  /// Glorot-uniform weights drawn from rng (W1 first, row-major).
  static EncoderParams init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng,
                            Activation act = Activation::ReLU) {
    if (in == 0 || hidden == 0 || out == 0) throw InvalidParameter("encoder: dimensions must be >= 1");
    auto glorot = [&](std::size_t r, std::size_t c) {
      DenseMatrix w(r, c);
      const double lim = std::sqrt(6.0 / static_cast<double>(r + c));
      for (double& v : w.data()) v = rng.uniform(-lim, lim);
      return w;
    };
    EncoderParams p;
    p.w1 = glorot(in, hidden);
    p.w2 = glorot(hidden, out);
    p.activation = act;
    return p;
  }
};

using NormalizedAdjacency = SparseMatrix;

/// Symmetric normalization of A + I (weights kept). Every row includes its
/// diagonal, so isolated nodes map to a 1 on the diagonal.
inline NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t p = 0; p < g.degree(i); ++p) d += g.weight(i, p);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  NormalizedAdjacency a;
  a.rows = a.cols = n;
  a.offsets.assign(n + 1, 0);
  a.indices.reserve(g.adjacency().size() + n);
  a.values.reserve(g.adjacency().size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = g.neighbors(i);
    bool self_done = false;
    for (std::size_t p = 0; p <= nb.size(); ++p) {
      if (!self_done && (p == nb.size() || nb[p] > i)) {
        a.indices.push_back(i);
        a.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        self_done = true;
      }
      if (p == nb.size()) break;
      a.indices.push_back(nb[p]);
      a.values.push_back(g.weight(i, p) * inv_sqrt[i] * inv_sqrt[nb[p]]);
    }
    a.offsets[i + 1] = a.indices.size();
  }
  return a;
}

/// Nonzeros of a dense matrix in CSR form.
inline SparseMatrix to_sparse(const DenseMatrix& m) {
  SparseMatrix s;
  s.rows = m.rows();
  s.cols = m.cols();
  s.offsets.assign(m.rows() + 1, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j)
      if (r[j] != 0.0) {
        s.indices.push_back(j);
        s.values.push_back(r[j]);
      }
    s.offsets[i + 1] = s.indices.size();
  }
  return s;
}

/// S^T * B for sparse S.
inline DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& b) {
  detail::require(s.rows == b.rows(), "spmm_tn: row counts differ");
  DenseMatrix c(s.cols, b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < s.rows; ++i) {
    const double* bi = b.row(i).data();
    for (std::size_t p = s.offsets[i]; p < s.offsets[i + 1]; ++p) {
      double* ck = c.row(s.indices[p]).data();
      const double v = s.values[p];
      for (std::size_t j = 0; j < n; ++j) ck[j] += v * bi[j];
    }
  }
  return c;
}

/// Everything backward needs from one forward pass.
struct EncoderCache {
  NormalizedAdjacency adj;
  SparseMatrix x;
  DenseMatrix pre1;       // A_hat X W1
  DenseMatrix agg2;       // A_hat act(pre1)
  DenseMatrix w2;
  std::vector<double> norms;  // row norms of agg2 * W2
  DenseMatrix z;          // normalized output
  Activation activation = Activation::ReLU;
};

struct EncoderOutput {
  DenseMatrix z;
  EncoderCache cache;
};

struct EncoderGrads {
  DenseMatrix w1;
  DenseMatrix w2;
};

inline EncoderOutput forward(const EncoderParams& params, const NormalizedAdjacency& adj,
                             const DenseMatrix& x) {
  if (x.cols() != params.input_dim())
    throw InvalidParameter("encoder forward: feature dim " + std::to_string(x.cols()) +
                           " != W1 rows " + std::to_string(params.input_dim()));
  if (adj.rows != x.rows()) throw InvalidParameter("encoder forward: adjacency/feature row mismatch");
  if (params.w1.cols() != params.w2.rows()) throw InvalidParameter("encoder forward: W1/W2 mismatch");

  EncoderCache c;
  c.adj = adj;
  c.x = to_sparse(x);
  c.activation = params.activation;
  c.pre1 = spmm(adj, spmm(c.x, params.w1));
  DenseMatrix h1 = c.pre1;
  if (params.activation == Activation::ReLU)
    for (double& v : h1.data()) v = v > 0.0 ? v : 0.0;
  c.agg2 = spmm(adj, h1);
  c.w2 = params.w2;
  DenseMatrix z = matmul(c.agg2, params.w2);
  c.norms = row_l2_normalize(z);
  c.z = z;
  return {std::move(z), std::move(c)};
}

/// Gradients of a scalar loss w.r.t. W1 and W2 given dLoss/dZ.
inline EncoderGrads backward(const EncoderCache& c, const DenseMatrix& grad_z) {
  if (!grad_z.same_shape(c.z)) throw InvalidParameter("encoder backward: gradient shape does not match cache");

  // Row normalization z = u / |u|: du = (dz - z (z . dz)) / |u|.
  DenseMatrix du(grad_z.rows(), grad_z.cols());
  for (std::size_t i = 0; i < du.rows(); ++i) {
    if (c.norms[i] == 0.0) continue;
    auto zi = c.z.row(i);
    auto gi = grad_z.row(i);
    const double proj = dot(zi, gi);
    auto out = du.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (gi[j] - zi[j] * proj) / c.norms[i];
  }

  EncoderGrads g;
  g.w2 = matmul_tn(c.agg2, du);
  DenseMatrix d_pre1 = spmm(c.adj, matmul_nt(du, c.w2));  // A_hat is symmetric
  if (c.activation == Activation::ReLU)
    for (std::size_t k = 0; k < d_pre1.size(); ++k)
      if (!(c.pre1.data()[k] > 0.0)) d_pre1.data()[k] = 0.0;
  g.w1 = spmm_tn(c.x, spmm(c.adj, d_pre1));
  return g;
}

}  // namespace graphtp
