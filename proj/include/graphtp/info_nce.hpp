#pragma once

// Symmetric InfoNCE over two views with optional per-anchor negative
// filters. For an anchor i in view a (other view b):
//
//   l_i = s(a_i, b_i) - log( e^{s(a_i, b_i)} + sum_{kept j != i} e^{s(a_i, b_j)}
//                                          + sum_{kept j != i} e^{s(a_i, a_j)} )
//
// with s(x, y) = x . y / tau, and the loss is -(1/2N) sum_i (l_i^{(1)} + l_i^{(2)}).
// Filter candidate layout per anchor: [0, N) inter-view, [N, 2N) intra-view;
// slot i of each block (the positive / the anchor itself) is ignored.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/prototypes.hpp"

namespace graphtp {

struct InfoNceOptions {
  double tau = 0.4;
  bool intra_view_negatives = true;
};

struct InfoNceResult {
  double loss = 0.0;
  DenseMatrix grad_z1;
  DenseMatrix grad_z2;
  std::size_t negatives_total = 0;  // candidate negatives over both directions
  std::size_t negatives_kept = 0;

  double filtered_fraction() const {
    return negatives_total == 0 ? 0.0
                                : 1.0 - static_cast<double>(negatives_kept) / static_cast<double>(negatives_total);
  }
};

namespace detail {

// One direction: anchors from `a`, positives and inter-view negatives from
// `b`. Accumulates loss and gradients in place.
inline void info_nce_direction(const DenseMatrix& a, const DenseMatrix& b, const NegativeFilter* filter,
                               const InfoNceOptions& opt, double weight, double& loss, DenseMatrix& ga,
                               DenseMatrix& gb, std::size_t& total, std::size_t& kept) {
  const std::size_t n = a.rows();
  const std::size_t dim = a.cols();
  const double inv_tau = 1.0 / opt.tau;
  std::vector<double> inter(n), intra(n);
  std::vector<char> use_inter(n), use_intra(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto ai = a.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      use_inter[j] = j == i || !filter || filter->kept(i, j);
      if (j != i) ++total;
      if (!use_inter[j]) continue;
      if (j != i) ++kept;
      inter[j] = dot(ai, b.row(j)) * inv_tau;
      mx = std::max(mx, inter[j]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      use_intra[j] = opt.intra_view_negatives && j != i && (!filter || filter->kept(i, n + j));
      if (opt.intra_view_negatives && j != i) ++total;
      if (!use_intra[j]) continue;
      ++kept;
      intra[j] = dot(ai, a.row(j)) * inv_tau;
      mx = std::max(mx, intra[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (use_inter[j]) sum += std::exp(inter[j] - mx);
      if (use_intra[j]) sum += std::exp(intra[j] - mx);
    }
    const double lse = mx + std::log(sum);
    loss -= weight * (inter[i] - lse);

    // d loss / d logit = -weight * (1[positive] - softmax); logits are
    // x . y / tau, so each term feeds both endpoints.
    auto gai = ga.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (use_inter[j]) {
        const double p = std::exp(inter[j] - lse);
        const double coef = -weight * ((j == i ? 1.0 : 0.0) - p) * inv_tau;
        auto bj = b.row(j);
        auto gbj = gb.row(j);
        for (std::size_t k = 0; k < dim; ++k) {
          gai[k] += coef * bj[k];
          gbj[k] += coef * ai[k];
        }
      }
      if (use_intra[j]) {
        const double coef = weight * std::exp(intra[j] - lse) * inv_tau;
        auto aj = a.row(j);
        auto gaj = ga.row(j);
        for (std::size_t k = 0; k < dim; ++k) {
          gai[k] += coef * aj[k];
          gaj[k] += coef * ai[k];
        }
      }
    }
  }
}

}  // namespace detail

/// Loss and exact gradients. `filter12` filters negatives of view-1 anchors,
/// `filter21` those of view-2 anchors; null means all candidates are used.
inline InfoNceResult info_nce(const DenseMatrix& z1, const DenseMatrix& z2, const NegativeFilter* filter12,
                              const NegativeFilter* filter21, const InfoNceOptions& opt) {
  if (!(opt.tau > 0.0)) throw InvalidParameter("info_nce: tau must be > 0");
  if (!z1.same_shape(z2)) throw InvalidParameter("info_nce: view embeddings differ in shape");
  const std::size_t n = z1.rows();
  for (const NegativeFilter* f : {filter12, filter21})
    if (f && (f->anchors != n || f->candidates != 2 * n))
      throw InvalidParameter("info_nce: filter shape must be N x 2N");

  InfoNceResult r;
  r.grad_z1 = DenseMatrix(n, z1.cols());
  r.grad_z2 = DenseMatrix(n, z1.cols());
  if (n == 0) return r;
  const double weight = 1.0 / (2.0 * static_cast<double>(n));
  detail::info_nce_direction(z1, z2, filter12, opt, weight, r.loss, r.grad_z1, r.grad_z2, r.negatives_total,
                             r.negatives_kept);
  detail::info_nce_direction(z2, z1, filter21, opt, weight, r.loss, r.grad_z2, r.grad_z1, r.negatives_total,
                             r.negatives_kept);
  return r;
}

/// Per-anchor first-order check of the exp-sum in the triplet reading of
/// the filtered loss: sum_j exp(d_j) against sum_j (1 + d_j), where
/// d_j = (theta(a, n_j) - theta(a, p)) / tau. With one negative this is the
/// familiar 1 + d form.
struct TaylorDiagnostic {
  double exact = 0.0;
  double first_order = 0.0;
  double relative_error() const { return std::abs(first_order - exact) / std::abs(exact); }
};

inline TaylorDiagnostic taylor_diagnostic(std::span<const double> anchor, std::span<const double> positive,
                                          const DenseMatrix& negatives, double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("taylor_diagnostic: tau must be > 0");
  TaylorDiagnostic t;
  const double pos = dot(anchor, positive);
  for (std::size_t j = 0; j < negatives.rows(); ++j) {
    const double d = (dot(anchor, negatives.row(j)) - pos) / tau;
    t.exact += std::exp(d);
    t.first_order += 1.0 + d;
  }
  return t;
}

}  // namespace graphtp
