#pragma once

// Prototype-based negative selection: K-means prototypes over embeddings,
// per-cluster concentration, prototype assignment of an anchor, and the
// Bernoulli keep probability of each negative candidate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/rng.hpp"

namespace graphtp {

/// Lower bound applied to a concentration before dividing by it.
inline constexpr double kConcentrationFloor = 1e-6;

struct PrototypeModel {
  DenseMatrix centroids;               // K x d'
  std::vector<double> concentration;   // xi_c; +inf for empty clusters, empty until filled
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> cluster_sizes;
  double epsilon = 10.0;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after every assignment step

  std::size_t num_clusters() const { return centroids.rows(); }
  bool is_empty_cluster(std::size_t c) const { return cluster_sizes[c] == 0; }
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// Nearest centroid (ties to the smaller id); returns total inertia.
inline double assign_points(const DenseMatrix& points, const DenseMatrix& centroids,
                            std::vector<std::size_t>& assign, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assign[i] = best;
    dist[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

}  // namespace detail

/// k-means++ seeding then Lloyd iterations until the assignment stops
/// changing or `iters` updates have run. An empty cluster is re-seeded at
/// the point farthest from its current centroid. Concentrations are left
/// unfilled.
inline PrototypeModel kmeans(const DenseMatrix& points, std::size_t k, std::size_t iters, Rng& rng) {
  const std::size_t m = points.rows();
  if (k == 0) throw InvalidParameter("kmeans: K must be >= 1");
  if (m < k) throw InvalidParameter("kmeans: fewer points than clusters");
  const std::size_t d = points.cols();

  PrototypeModel model;
  model.centroids = DenseMatrix(k, d);
  std::vector<char> chosen(m, 0);
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = 1;
    std::copy(points.row(idx).begin(), points.row(idx).end(), model.centroids.row(c).begin());
    for (std::size_t i = 0; i < m; ++i)
      d2[i] = std::min(d2[i], detail::squared_distance(points.row(i), points.row(idx)));
  };
  take(0, static_cast<std::size_t>(rng.below(m)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = m;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < m; ++i) {
        if (chosen[i] || d2[i] <= 0.0) continue;
        pick = i;
        r -= d2[i];
        if (r < 0.0) break;
      }
    }
    if (pick == m) {
      // Every remaining point coincides with a chosen center.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    take(c, pick);
  }

  std::vector<std::size_t> assign(m, 0), prev;
  std::vector<double> dist(m, 0.0);
  for (std::size_t it = 0; it <= iters; ++it) {
    model.inertia = detail::assign_points(points, model.centroids, assign, dist);
    model.inertia_history.push_back(model.inertia);
    if (assign == prev) {
      break;
    }
    prev = assign;
    if (it == iters) break;

    DenseMatrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[assign[i]];
      auto dst = sums.row(assign[i]);
      auto src = points.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto dst = model.centroids.row(c);
      auto src = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
    }
    // Distances to the updated centroids decide which points to donate.
    for (std::size_t i = 0; i < m; ++i)
      dist[i] = detail::squared_distance(points.row(i), model.centroids.row(assign[i]));
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      std::copy(points.row(far).begin(), points.row(far).end(), model.centroids.row(c).begin());
      dist[far] = -1.0;
    }
  }

  model.assignments = std::move(assign);
  model.cluster_sizes.assign(k, 0);
  for (auto a : model.assignments) ++model.cluster_sizes[a];
  return model;
}

/// xi_c = sum_{z in c} |z - c| / (|c| log(|c| + epsilon)); empty clusters
/// get +inf and take no part in similarity.
inline void fill_concentration(PrototypeModel& model, const DenseMatrix& points, double epsilon) {
  if (!(epsilon > 1.0)) throw InvalidParameter("concentration: epsilon must exceed 1");
  if (points.rows() != model.assignments.size())
    throw InvalidParameter("concentration: point count differs from assignments");
  const std::size_t k = model.num_clusters();
  std::vector<double> radius_sum(k, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = model.assignments[i];
    radius_sum[c] += std::sqrt(detail::squared_distance(points.row(i), model.centroids.row(c)));
    ++sizes[c];
  }
  model.epsilon = epsilon;
  model.cluster_sizes = sizes;
  model.concentration.assign(k, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    const double n = static_cast<double>(sizes[c]);
    model.concentration[c] = radius_sum[c] / (n * std::log(n + epsilon));
  }
}

inline PrototypeModel concentration(PrototypeModel model, const DenseMatrix& points, double epsilon = 10.0) {
  fill_concentration(model, points, epsilon);
  return model;
}

/// s(z, c) = z . c / xi_c, with xi floored at kConcentrationFloor.
inline double semantic_similarity(std::span<const double> z, const PrototypeModel& model, std::size_t c) {
  return dot(z, model.centroids.row(c)) / std::max(model.concentration[c], kConcentrationFloor);
}

namespace detail {
inline void require_concentration(const PrototypeModel& model) {
  if (model.concentration.size() != model.num_clusters())
    throw InvalidParameter("prototype model: concentrations not filled");
}
}  // namespace detail

/// argmax_c s(z, c) over non-empty clusters; ties go to the smaller id.
inline std::size_t prototype_of(std::span<const double> z, const PrototypeModel& model) {
  detail::require_concentration(model);
  std::size_t best = model.num_clusters();
  double best_s = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < model.num_clusters(); ++c) {
    if (!std::isfinite(model.concentration[c])) continue;
    const double s = semantic_similarity(z, model, c);
    if (best == model.num_clusters() || s > best_s) {
      best_s = s;
      best = c;
    }
  }
  if (best == model.num_clusters()) throw NumericalFailure("prototype_of: every cluster is empty");
  return best;
}

/// Softmax over non-empty clusters of s(z, c_i); empty clusters get 0.
inline std::vector<double> prototype_softmax(std::span<const double> z, const PrototypeModel& model) {
  detail::require_concentration(model);
  const std::size_t k = model.num_clusters();
  std::vector<double> s(k, 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (!std::isfinite(model.concentration[c])) continue;
    s[c] = semantic_similarity(z, model, c);
    mx = std::max(mx, s[c]);
    any = true;
  }
  if (!any) throw NumericalFailure("prototype softmax: every cluster is empty");
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!std::isfinite(model.concentration[c])) continue;
    s[c] = std::exp(s[c] - mx);
    total += s[c];
  }
  for (double& v : s) v /= total;
  return s;
}

/// p(z, z_j) = 1 - softmax_j[c(z)] for every candidate row z_j.
inline std::vector<double> negative_keep_probs(std::span<const double> anchor, const DenseMatrix& candidates,
                                               const PrototypeModel& model) {
  const std::size_t proto = prototype_of(anchor, model);
  std::vector<double> p(candidates.rows());
  for (std::size_t j = 0; j < candidates.rows(); ++j)
    p[j] = 1.0 - prototype_softmax(candidates.row(j), model)[proto];
  return p;
}

/// Keep mask over negative candidates, anchors x candidates, plus the
/// probabilities that produced it.
struct NegativeFilter {
  std::size_t anchors = 0;
  std::size_t candidates = 0;
  std::vector<std::uint8_t> keep;
  std::vector<float> probs;

  bool kept(std::size_t a, std::size_t c) const { return keep[a * candidates + c] != 0; }
  float prob(std::size_t a, std::size_t c) const { return probs[a * candidates + c]; }

  std::size_t kept_count() const {
    std::size_t n = 0;
    for (auto k : keep) n += k;
    return n;
  }
};

/// Independent Bernoulli(p) keep decision per entry, row-major draw order.
inline NegativeFilter sample_filter(const DenseMatrix& probs, Rng& rng) {
  NegativeFilter f;
  f.anchors = probs.rows();
  f.candidates = probs.cols();
  f.keep.resize(probs.size());
  f.probs.resize(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double p = probs.data()[k];
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("sample_filter: probability outside [0,1]");
    f.probs[k] = static_cast<float>(p);
    f.keep[k] = rng.bernoulli(p) ? 1 : 0;
  }
  return f;
}

}  // namespace graphtp
