#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/rng.hpp"

namespace graphtp {

using NodeId = std::uint32_t;

struct WeightedEdge {
  NodeId u = 0;
  NodeId v = 0;
  double weight = 1.0;
};

/// Counts reported while canonicalizing an edge list.
struct EdgeBuildStats {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_merged = 0;
};

/// Immutable attributed undirected graph. Adjacency is CSR with both
/// directions stored, neighbor lists sorted and duplicate free, no self
/// loops. Weights are optional (absent means 1). Labels are optional; a
/// negative label marks an unlabeled node.
class Graph {
public:
  Graph() = default;

  /// Canonicalizes `edges` (drops self loops, merges duplicates and reversed
  /// pairs keeping the larger weight) and validates everything else.
  static Graph from_edges(std::size_t num_nodes, std::span<const WeightedEdge> edges,
                          DenseMatrix features, std::optional<std::vector<int>> labels = {},
                          bool weighted = false, EdgeBuildStats* stats = nullptr) {
    if (num_nodes == 0) throw InvalidParameter("Graph: at least one node required");
    if (features.rows() != num_nodes)
      throw MalformedInput("Graph: feature row count differs from node count");

    EdgeBuildStats st;
    std::vector<WeightedEdge> canon;
    canon.reserve(edges.size());
    for (const auto& e : edges) {
      if (e.u >= num_nodes || e.v >= num_nodes)
        throw IndexOutOfRange("Graph: edge endpoint " + std::to_string(std::max(e.u, e.v)) +
                              " >= node count " + std::to_string(num_nodes));
      if (e.u == e.v) {
        ++st.self_loops_dropped;
        continue;
      }
      if (weighted && !(e.weight >= 0.0 && std::isfinite(e.weight)))
        throw MalformedInput("Graph: edge weights must be finite and nonnegative");
      canon.push_back({std::min(e.u, e.v), std::max(e.u, e.v), weighted ? e.weight : 1.0});
    }
    std::sort(canon.begin(), canon.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::vector<WeightedEdge> uniq;
    uniq.reserve(canon.size());
    for (const auto& e : canon) {
      if (!uniq.empty() && uniq.back().u == e.u && uniq.back().v == e.v) {
        uniq.back().weight = std::max(uniq.back().weight, e.weight);
        ++st.duplicates_merged;
      } else {
        uniq.push_back(e);
      }
    }

    Graph g;
    g.num_nodes_ = num_nodes;
    g.offsets_.assign(num_nodes + 1, 0);
    for (const auto& e : uniq) {
      ++g.offsets_[e.u + 1];
      ++g.offsets_[e.v + 1];
    }
    for (std::size_t i = 0; i < num_nodes; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.neighbors_.resize(2 * uniq.size());
    if (weighted) g.weights_.resize(2 * uniq.size());
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    // Edges sorted by (u, v) fill every list in ascending order: a node's
    // smaller neighbors arrive while it is the v endpoint, before any edge
    // where it is the u endpoint.
    for (const auto& e : uniq) {
      const std::size_t pu = cursor[e.u]++;
      const std::size_t pv = cursor[e.v]++;
      g.neighbors_[pu] = e.v;
      g.neighbors_[pv] = e.u;
      if (weighted) g.weights_[pu] = g.weights_[pv] = e.weight;
    }
    g.features_ = std::move(features);
    g.labels_ = std::move(labels);
    g.validate();
    if (stats) *stats = st;
    return g;
  }

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }
  std::size_t feature_dim() const noexcept { return features_.cols(); }

  std::span<const NodeId> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  bool weighted() const noexcept { return !weights_.empty(); }
  /// Weight of the p-th entry of node i's neighbor list.
  double weight(std::size_t i, std::size_t p) const {
    return weights_.empty() ? 1.0 : weights_[offsets_[i] + p];
  }

  bool has_edge(std::size_t u, std::size_t v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), static_cast<NodeId>(v));
  }

  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }
  const std::vector<NodeId>& adjacency() const noexcept { return neighbors_; }

  const DenseMatrix& features() const noexcept { return features_; }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }

  int num_classes() const {
    if (!labels_) return 0;
    int c = -1;
    for (int l : *labels_) c = std::max(c, l);
    return c + 1;
  }

  /// Undirected edges with u < v, in CSR order.
  std::vector<WeightedEdge> edge_list() const {
    std::vector<WeightedEdge> out;
    out.reserve(num_edges());
    for (std::size_t u = 0; u < num_nodes_; ++u) {
      auto nb = neighbors(u);
      for (std::size_t p = 0; p < nb.size(); ++p)
        if (nb[p] > u) out.push_back({static_cast<NodeId>(u), nb[p], weight(u, p)});
    }
    return out;
  }

  /// Same topology, different features (row count must match).
  Graph with_features(DenseMatrix features) const {
    if (features.rows() != num_nodes_)
      throw InvalidParameter("Graph::with_features: row count mismatch");
    Graph g = *this;
    g.features_ = std::move(features);
    g.validate_features();
    return g;
  }

  /// Same nodes, features and labels, new edge set.
  Graph with_edges(std::span<const WeightedEdge> edges, bool weighted) const {
    return from_edges(num_nodes_, edges, features_, labels_, weighted);
  }

  /// Throws MalformedInput if any structural invariant fails.
  void validate() const {
    if (offsets_.size() != num_nodes_ + 1 || offsets_.front() != 0 ||
        offsets_.back() != neighbors_.size())
      throw MalformedInput("Graph: corrupt CSR offsets");
    for (std::size_t u = 0; u < num_nodes_; ++u) {
      auto nb = neighbors(u);
      for (std::size_t p = 0; p < nb.size(); ++p) {
        const NodeId v = nb[p];
        if (v >= num_nodes_) throw MalformedInput("Graph: neighbor index out of range");
        if (v == u) throw MalformedInput("Graph: self loop stored");
        if (p > 0 && nb[p - 1] >= v) throw MalformedInput("Graph: neighbor list unsorted");
        auto back = neighbors(v);
        auto it = std::lower_bound(back.begin(), back.end(), static_cast<NodeId>(u));
        if (it == back.end() || *it != u) throw MalformedInput("Graph: adjacency not symmetric");
        if (weighted() && weight(v, static_cast<std::size_t>(it - back.begin())) != weight(u, p))
          throw MalformedInput("Graph: asymmetric edge weight");
      }
    }
    validate_features();
    if (labels_ && labels_->size() != num_nodes_)
      throw MalformedInput("Graph: label count differs from node count");
  }

private:
  void validate_features() const {
    if (!features_.all_finite()) throw MalformedInput("Graph: non-finite feature value");
  }

  std::size_t num_nodes_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
  DenseMatrix features_;
  std::optional<std::vector<int>> labels_;
};

struct DegreeInfo {
  std::vector<std::size_t> degrees;
};

inline DegreeInfo degree_info(const Graph& g) {
  DegreeInfo d;
  d.degrees.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) d.degrees[i] = g.degree(i);
  return d;
}

/// Adjacency as a sparse matrix (weights or 1).
inline SparseMatrix adjacency_matrix(const Graph& g) {
  SparseMatrix s;
  s.rows = s.cols = g.num_nodes();
  s.offsets = g.offsets();
  s.indices.assign(g.adjacency().begin(), g.adjacency().end());
  s.values.resize(s.indices.size());
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    for (std::size_t p = 0; p < g.degree(i); ++p) s.values[g.offsets()[i] + p] = g.weight(i, p);
  return s;
}

/// A * B with A the graph adjacency.
inline DenseMatrix spmm(const Graph& g, const DenseMatrix& b) { return spmm(adjacency_matrix(g), b); }

struct SbmParams {
  std::size_t num_nodes = 0;
  std::size_t num_blocks = 1;
  double p_in = 0.0;
  double p_out = 0.0;
  std::size_t feature_dim = 0;
  double feature_noise = 0.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model. Blocks are contiguous node ranges; the first
/// N % B blocks get one extra node. Features are the block's one-hot vector
/// plus N(0, noise^2) per entry; labels are block ids.
inline Graph generate_sbm(const SbmParams& p) {
  auto is_prob = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!is_prob(p.p_in) || !is_prob(p.p_out)) throw InvalidParameter("sbm: probabilities must lie in [0,1]");
  if (p.num_nodes == 0 || p.num_blocks == 0 || p.num_blocks > p.num_nodes)
    throw InvalidParameter("sbm: need 1 <= num_blocks <= num_nodes");
  if (p.feature_dim < p.num_blocks) throw InvalidParameter("sbm: feature_dim must be >= num_blocks");
  if (!(p.feature_noise >= 0.0)) throw InvalidParameter("sbm: feature_noise must be >= 0");

  std::vector<int> labels(p.num_nodes);
  const std::size_t base = p.num_nodes / p.num_blocks;
  const std::size_t extra = p.num_nodes % p.num_blocks;
  std::size_t node = 0;
  for (std::size_t b = 0; b < p.num_blocks; ++b) {
    const std::size_t sz = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < sz; ++k) labels[node++] = static_cast<int>(b);
  }

  Rng rng(p.seed ^ rng_tag::kSbm);
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < p.num_nodes; ++i)
    for (std::size_t j = i + 1; j < p.num_nodes; ++j) {
      const double prob = labels[i] == labels[j] ? p.p_in : p.p_out;
      if (rng.bernoulli(prob)) edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});
    }

  DenseMatrix x(p.num_nodes, p.feature_dim);
  for (std::size_t i = 0; i < p.num_nodes; ++i) {
    for (std::size_t k = 0; k < p.feature_dim; ++k) x(i, k) = p.feature_noise * rng.normal();
    x(i, static_cast<std::size_t>(labels[i])) += 1.0;
  }
  return Graph::from_edges(p.num_nodes, edges, std::move(x), std::move(labels));
}

}  // namespace graphtp
