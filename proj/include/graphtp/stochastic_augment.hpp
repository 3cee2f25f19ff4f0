#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/rng.hpp"

namespace graphtp {

struct PerturbConfig {
  double p_f = 0.2;    // base feature-mask probability
  double p_e = 0.3;    // base edge-drop probability
  double p_tau = 0.7;  // cap on any single probability

  void validate() const {
    if (!(p_f >= 0.0 && p_f < 1.0)) throw InvalidParameter("perturb: p_f must lie in [0,1)");
    if (!(p_e >= 0.0 && p_e < 1.0)) throw InvalidParameter("perturb: p_e must lie in [0,1)");
    if (!(p_tau > 0.0 && p_tau <= 1.0)) throw InvalidParameter("perturb: p_tau must lie in (0,1]");
  }
};

/// Drop probabilities per feature dimension and per undirected edge. Edge
/// probabilities follow Graph::edge_list() order.
struct AdaptiveWeights {
  std::vector<double> feature_probs;
  std::vector<double> edge_probs;
};

/// p = min((w_max - w) / (w_max - w_mean + 1e-12) * p_base, p_tau): the most
/// important entry is never dropped, average ones at roughly p_base.
inline std::vector<double> importance_to_probs(const std::vector<double>& w, double p_base, double p_tau) {
  std::vector<double> p(w.size(), 0.0);
  if (w.empty()) return p;
  const double w_max = *std::max_element(w.begin(), w.end());
  double w_mean = 0.0;
  for (double x : w) w_mean += x;
  w_mean /= static_cast<double>(w.size());
  const double denom = w_max - w_mean + 1e-12;
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = std::min((w_max - w[i]) / denom * p_base, p_tau);
  return p;
}

/// Degree-centrality importance: edges score log(1 + min(deg u, deg v)),
/// feature dimension i scores sum_u |x_ui| log(1 + deg u).
inline AdaptiveWeights adaptive_weights(const Graph& g, const PerturbConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.num_nodes();
  std::vector<double> log_deg(n);
  for (std::size_t u = 0; u < n; ++u) log_deg[u] = std::log1p(static_cast<double>(g.degree(u)));

  std::vector<double> ew;
  ew.reserve(g.num_edges());
  for (const auto& e : g.edge_list())
    ew.push_back(std::log1p(static_cast<double>(std::min(g.degree(e.u), g.degree(e.v)))));

  const auto& x = g.features();
  std::vector<double> fw(x.cols(), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    auto row = x.row(u);
    for (std::size_t i = 0; i < row.size(); ++i) fw[i] += std::abs(row[i]) * log_deg[u];
  }

  return {importance_to_probs(fw, cfg.p_f, cfg.p_tau), importance_to_probs(ew, cfg.p_e, cfg.p_tau)};
}

/// One shared feature mask (m_i kept with probability 1 - p_i, applied to
/// every row) and one keep/drop draw per undirected edge. Draw order:
/// feature dimensions, then edges in edge_list() order.
inline Graph perturb(const Graph& g, const AdaptiveWeights& w, Rng& rng) {
  const auto edges = g.edge_list();
  if (w.feature_probs.size() != g.feature_dim() || w.edge_probs.size() != edges.size())
    throw InvalidParameter("perturb: weights were computed for a different graph shape");

  std::vector<char> keep_dim(g.feature_dim());
  for (std::size_t i = 0; i < keep_dim.size(); ++i) keep_dim[i] = !rng.bernoulli(w.feature_probs[i]);

  std::vector<WeightedEdge> kept;
  kept.reserve(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (!rng.bernoulli(w.edge_probs[e])) kept.push_back(edges[e]);

  DenseMatrix x = g.features();
  for (std::size_t u = 0; u < x.rows(); ++u) {
    auto row = x.row(u);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (!keep_dim[i]) row[i] = 0.0;
  }
  return Graph::from_edges(g.num_nodes(), kept, std::move(x), g.labels(), g.weighted());
}

}  // namespace graphtp
