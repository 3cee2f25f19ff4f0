#pragma once

// Topology reorganization: a second graph over the same nodes whose edges
// come from feature-space nearest neighbors (FeatureSpace) or from the
// largest entries of an eigenvalue-powered normalized Laplacian
// (SpectralPower).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include "graphtp/eigen.hpp"
#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/matrix.hpp"

namespace graphtp {

struct FeatureSpaceScheme {
  std::size_t k = 1;
};

struct SpectralPowerScheme {
  std::size_t k = 1;
  double alpha = 1.0;
};

using TopoScheme = std::variant<FeatureSpaceScheme, SpectralPowerScheme>;

/// Dense N x N importance weights; entry (i, j) scores j as a neighbor of
/// i. The diagonal is never a candidate.
struct WeightedCandidateMatrix {
  DenseMatrix weights;

  std::size_t size() const noexcept { return weights.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return weights(i, j); }
};

/// Cosine similarity between feature rows. Zero rows are similar to nothing.
inline WeightedCandidateMatrix cosine_similarity_matrix(const Graph& g) {
  DenseMatrix xn = g.features();
  row_l2_normalize(xn);
  // X X^T through the zero-skipping kernel: feature rows are usually sparse.
  WeightedCandidateMatrix s{matmul(xn, transpose(xn))};
  for (std::size_t i = 0; i < s.size(); ++i) s.weights(i, i) = 0.0;
  return s;
}

/// I - D^{-1/2} A D^{-1/2} using weighted degrees; isolated nodes get a zero
/// row and column.
inline DenseMatrix normalized_laplacian(const Graph& g) {
  const std::size_t n = g.num_nodes();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t p = 0; p < g.degree(i); ++p) d += g.weight(i, p);
    inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  DenseMatrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (inv_sqrt[i] > 0.0) lap(i, i) = 1.0;
    auto nb = g.neighbors(i);
    for (std::size_t p = 0; p < nb.size(); ++p)
      lap(i, nb[p]) = -g.weight(i, p) * inv_sqrt[i] * inv_sqrt[nb[p]];
  }
  return lap;
}

/// B = U diag(mu^alpha) U^T where L = U diag(lambda) U^T and
/// mu = lambda / lambda_max when `normalize` (the default), else lambda.
/// Roundoff negatives in the spectrum are clamped to 0. An all-zero
/// spectrum yields the zero matrix.
inline DenseMatrix spectral_power_transform(const DenseMatrix& lap, double alpha, bool normalize = true) {
  if (!(alpha > 0.0)) throw InvalidParameter("spectral power: alpha must be > 0");
  const auto eig = sym_eig(lap);
  const double lmax = eig.values.empty() ? 0.0 : eig.values.back();
  if (lmax <= 0.0) return DenseMatrix(lap.rows(), lap.cols());
  const double div = normalize ? lmax : 1.0;
  return spectral_reconstruct(eig, [&](double l) { return std::pow(std::max(l, 0.0) / div, alpha); });
}

/// Turns |B| into candidate weights. Entries below 1e-10 * sqrt(B_ii B_jj)
/// (the Cauchy-Schwarz scale of a PSD entry) are treated as roundoff and
/// zeroed. Within a row, weights closer than kTieTolerance * row max to the
/// next larger one join its group and take its value, so entries equal in
/// exact arithmetic stay tied and fall to the index tie-break.
inline constexpr double kTieTolerance = 1e-9;

inline WeightedCandidateMatrix candidates_from_power_matrix(const DenseMatrix& b) {
  const std::size_t n = b.rows();
  WeightedCandidateMatrix c{DenseMatrix(n, n)};
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double floor = 1e-10 * std::sqrt(std::abs(b(i, i)) * std::abs(b(j, j)));
      const double w = std::abs(b(i, j));
      if (w > floor) {
        c.weights(i, j) = w;
        order.push_back(j);
      }
    }
    if (order.empty()) continue;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return c.weights(i, x) != c.weights(i, y) ? c.weights(i, x) > c.weights(i, y) : x < y;
    });
    const double gap = kTieTolerance * c.weights(i, order.front());
    double prev = c.weights(i, order.front()), group = prev;
    for (std::size_t t = 1; t < order.size(); ++t) {
      const double w = c.weights(i, order[t]);
      if (prev - w > gap) group = w;
      prev = w;
      c.weights(i, order[t]) = group;
    }
  }
  return c;
}

inline WeightedCandidateMatrix spectral_power_matrix(const DenseMatrix& lap, double alpha,
                                                     bool normalize = true) {
  return candidates_from_power_matrix(spectral_power_transform(lap, alpha, normalize));
}

/// Keeps each node's k best candidates with positive weight (ties to the
/// smaller index), symmetrizes by union, and copies nodes, features and
/// labels from `base`. Kept edges have weight 1.
inline Graph topk_graph(const WeightedCandidateMatrix& cands, std::size_t k, const Graph& base) {
  const std::size_t n = cands.size();
  if (n != base.num_nodes()) throw InvalidParameter("topk_graph: candidate matrix size mismatch");
  if (k < 1 || k >= n) throw InvalidParameter("topk_graph: need 1 <= k < N");
  std::vector<WeightedEdge> edges;
  std::vector<NodeId> pool;
  for (std::size_t i = 0; i < n; ++i) {
    pool.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && cands(i, j) > 0.0) pool.push_back(static_cast<NodeId>(j));
    const std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                      [&](NodeId a, NodeId b) {
                        const double wa = cands(i, a), wb = cands(i, b);
                        return wa != wb ? wa > wb : a < b;
                      });
    for (std::size_t t = 0; t < take; ++t) edges.push_back({static_cast<NodeId>(i), pool[t], 1.0});
  }
  return Graph::from_edges(n, edges, base.features(), base.labels());
}

inline Graph build_topology_view(const Graph& g, const TopoScheme& scheme) {
  return std::visit(
      [&](const auto& s) -> Graph {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FeatureSpaceScheme>) {
          return topk_graph(cosine_similarity_matrix(g), s.k, g);
        } else {
          if (!(s.alpha > 0.0)) throw InvalidParameter("spectral scheme: alpha must be > 0");
          return topk_graph(spectral_power_matrix(normalized_laplacian(g), s.alpha), s.k, g);
        }
      },
      scheme);
}

}  // namespace graphtp
