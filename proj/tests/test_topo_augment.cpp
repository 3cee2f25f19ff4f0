#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "graphtp/graph.hpp"
#include "graphtp/topo_augment.hpp"

using namespace graphtp;

namespace {

Graph from(std::size_t n, std::vector<WeightedEdge> e, DenseMatrix x = {}) {
  if (x.empty()) x = DenseMatrix(n, 1, 1.0);
  return Graph::from_edges(n, e, std::move(x));
}

Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<WeightedEdge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) e.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
  return from(n, e);
}

std::set<std::pair<NodeId, NodeId>> edge_set(const Graph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const auto& e : g.edge_list()) s.insert({e.u, e.v});
  return s;
}

// Independent top-k: full sort of each row, ties to the smaller index.
std::set<std::pair<NodeId, NodeId>> reference_topk(const DenseMatrix& w, std::size_t k) {
  std::set<std::pair<NodeId, NodeId>> s;
  const std::size_t n = w.rows();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && w(i, j) > 0.0) idx.push_back(j);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return w(i, a) > w(i, b); });
    for (std::size_t t = 0; t < std::min(k, idx.size()); ++t)
      s.insert({static_cast<NodeId>(std::min(i, idx[t])), static_cast<NodeId>(std::max(i, idx[t]))});
  }
  return s;
}

}  // namespace

TEST(Cosine, HandExamples) {
  auto s2 = [](double a, double b, double c, double d) {
    DenseMatrix x(2, 2, std::vector<double>{a, b, c, d});
    return cosine_similarity_matrix(from(2, {}, x))(0, 1);
  };
  EXPECT_EQ(s2(1, 0, 0, 1), 0.0);
  EXPECT_NEAR(s2(2, 0, 5, 0), 1.0, 1e-15);
  EXPECT_NEAR(s2(1, 1, 1, 0), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cosine, ZeroRowSimilarToNothingAndDiagonalExcluded) {
  DenseMatrix x(3, 2, std::vector<double>{1, 0, 0, 0, 1, 1});
  auto s = cosine_similarity_matrix(from(3, {}, x));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(s(1, j), 0.0);
    EXPECT_EQ(s(j, 1), 0.0);
    EXPECT_EQ(s(j, j), 0.0);
  }
  Graph g = topk_graph(s, 1, from(3, {}, x));
  EXPECT_EQ(g.degree(1), 0u);
}

TEST(Laplacian, HandExamples) {
  auto p3 = normalized_laplacian(from(3, {{0, 1}, {1, 2}}));
  EXPECT_NEAR(p3(0, 1), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(p3(1, 2), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(p3(0, 2), 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(p3(i, i), 1.0);

  EXPECT_EQ(normalized_laplacian(from(4, {})), DenseMatrix(4, 4));
  EXPECT_EQ(normalized_laplacian(from(2, {{0, 1}})), DenseMatrix(2, 2, std::vector<double>{1, -1, -1, 1}));

  // Isolated node 2 gets a zero row and column.
  auto iso = normalized_laplacian(from(3, {{0, 1}}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(iso(2, j), 0.0);
}

TEST(Laplacian, SpectrumInZeroTwo) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    auto lap = normalized_laplacian(random_graph(3 + rng.below(25), 0.3, rng));
    for (std::size_t i = 0; i < lap.rows(); ++i)
      for (std::size_t j = 0; j < lap.cols(); ++j) ASSERT_EQ(lap(i, j), lap(j, i));
    auto e = sym_eig(lap);
    EXPECT_GE(e.values.front(), -1e-10);
    EXPECT_LE(e.values.back(), 2.0 + 1e-10);
  }
  // Bipartite components reach 2.
  auto e = sym_eig(normalized_laplacian(from(4, {{0, 1}, {1, 2}, {2, 3}})));
  EXPECT_NEAR(e.values.back(), 2.0, 1e-10);
}

TEST(SpectralPower, AlphaTwoEqualsMatrixSquare) {
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    Graph g = random_graph(6, 0.5, rng);
    if (g.num_edges() == 0) continue;
    auto lap = normalized_laplacian(g);
    const double lmax = sym_eig(lap).values.back();
    auto scaled = scale(lap, 1.0 / lmax);
    EXPECT_LE(max_abs_diff(spectral_power_transform(lap, 2.0), matmul(scaled, scaled)), 1e-10);
    // Unnormalized: plain L^2.
    EXPECT_LE(max_abs_diff(spectral_power_transform(lap, 2.0, false), matmul(lap, lap)), 1e-10);
  }
}

TEST(SpectralPower, AlphaOneRanksLikeLaplacian) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    Graph g = random_graph(5 + rng.below(20), 0.25, rng);
    if (g.num_edges() == 0) continue;
    auto lap = normalized_laplacian(g);
    // |L_ij| = 1 / sqrt(d_i d_j) on edges; the integer product keeps exact
    // ties exact.
    DenseMatrix absl(lap.rows(), lap.cols());
    for (const auto& e : g.edge_list())
      absl(e.u, e.v) = absl(e.v, e.u) = 1.0 / std::sqrt(static_cast<double>(g.degree(e.u) * g.degree(e.v)));
    for (std::size_t k : {1u, 2u, 3u}) {
      Graph via_b = topk_graph(spectral_power_matrix(lap, 1.0), k, g);
      EXPECT_EQ(edge_set(via_b), reference_topk(absl, k)) << "trial " << t << " k " << k;
    }
  }
}

TEST(SpectralPower, LargeAlphaFollowsTopEigenvector) {
  Graph p3 = from(3, {{0, 1}, {1, 2}});
  auto b = spectral_power_transform(normalized_laplacian(p3), 180.0);
  // Top eigenvector of this Laplacian: (1/2, -1/sqrt2, 1/2).
  const std::vector<double> u{0.5, -std::sqrt(0.5), 0.5};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(b(i, j), u[i] * u[j], 1e-12);
  // |u0 u1| = 0.354 > |u0 u2| = 0.25, so node 0 picks node 1.
  Graph top1 = topk_graph(spectral_power_matrix(normalized_laplacian(p3), 180.0), 1, p3);
  EXPECT_TRUE(top1.has_edge(0, 1));
  EXPECT_FALSE(top1.has_edge(0, 2));
}

TEST(SpectralPower, NormalizationDoesNotChangeSelection) {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    Graph g = random_graph(12, 0.3, rng);
    if (g.num_edges() == 0) continue;
    auto lap = normalized_laplacian(g);
    for (double alpha : {0.5, 1.0, 3.0, 8.0}) {
      EXPECT_EQ(edge_set(topk_graph(spectral_power_matrix(lap, alpha, true), 2, g)),
                edge_set(topk_graph(spectral_power_matrix(lap, alpha, false), 2, g)))
          << "alpha " << alpha;
    }
  }
}

TEST(SpectralPower, EdgelessAndHugeAlpha) {
  Graph g = from(4, {});
  auto c = spectral_power_matrix(normalized_laplacian(g), 3.0);
  EXPECT_EQ(c.weights, DenseMatrix(4, 4));
  EXPECT_EQ(topk_graph(c, 2, g).num_edges(), 0u);
  Rng rng(5);
  Graph r = random_graph(20, 0.2, rng);
  auto big = spectral_power_matrix(normalized_laplacian(r), 180.0);
  EXPECT_TRUE(big.weights.all_finite());
  EXPECT_THROW(spectral_power_transform(normalized_laplacian(r), 0.0), InvalidParameter);
}

TEST(TopK, UnionSymmetrization) {
  DenseMatrix w(6, 6);
  w(0, 3) = 0.9;
  w(0, 1) = 0.1;
  w(3, 5) = 0.8;
  w(3, 0) = 0.2;
  w(5, 4) = 0.5;
  Graph g = topk_graph({w}, 1, from(6, {}));
  EXPECT_TRUE(g.has_edge(0, 3));
  EXPECT_TRUE(g.has_edge(3, 5));
  EXPECT_TRUE(g.has_edge(5, 4));
  EXPECT_EQ(g.num_edges(), 3u);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t p = 0; p < g.degree(i); ++p) EXPECT_EQ(g.weight(i, p), 1.0);
}

TEST(TopK, TiesGoToSmallerIndex) {
  DenseMatrix w(4, 4, 1.0);
  Graph g = topk_graph({w}, 2, from(4, {}));
  auto nb = g.neighbors(0);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_TRUE(g.has_edge(0, 2));
  // Node 3 picks {0, 1}, so 0 also ends up adjacent to 3 by union.
  EXPECT_EQ(std::vector<NodeId>(nb.begin(), nb.end()), (std::vector<NodeId>{1, 2, 3}));
}

TEST(TopK, NonPositiveNeverSelectedAndBounds) {
  DenseMatrix w(3, 3);
  w(0, 1) = -0.5;
  w(0, 2) = 0.0;
  Graph g = topk_graph({w}, 2, from(3, {}));
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_THROW(topk_graph({w}, 3, from(3, {})), InvalidParameter);
  EXPECT_THROW(topk_graph({w}, 0, from(3, {})), InvalidParameter);
}

TEST(TopK, DegreeBoundsOnRandomCandidates) {
  Rng rng(6);
  const std::size_t n = 30, k = 3;
  DenseMatrix w(n, n);
  for (auto& v : w.data()) v = rng.uniform(0.01, 1.0);
  Graph g = topk_graph({w}, k, from(n, {}));
  EXPECT_EQ(edge_set(g), reference_topk(w, k));
  EXPECT_LE(g.num_edges(), n * k);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_GE(g.degree(i), k);
    EXPECT_FALSE(g.has_edge(i, i));
  }
}

TEST(FeatureScheme, TwoCliqueSbmSelectsIntraBlock) {
  Graph g = generate_sbm({40, 2, 1.0, 0.0, 2, 0.0, 7});
  for (std::size_t k : {1u, 5u, 19u}) {
    Graph v = build_topology_view(g, FeatureSpaceScheme{k});
    const auto& y = *g.labels();
    for (const auto& e : v.edge_list()) EXPECT_EQ(y[e.u], y[e.v]);
    EXPECT_EQ(v.features(), g.features());
    EXPECT_EQ(*v.labels(), y);
  }
}

TEST(FeatureScheme, InvariantToPositiveRowScaling) {
  Rng rng(8);
  Graph g = generate_sbm({30, 3, 0.2, 0.05, 6, 0.8, 3});
  DenseMatrix x = g.features();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = std::exp(rng.uniform(-3.0, 3.0));
    for (auto& v : x.row(i)) v *= s;
  }
  EXPECT_EQ(edge_set(build_topology_view(g, FeatureSpaceScheme{3})),
            edge_set(build_topology_view(g.with_features(x), FeatureSpaceScheme{3})));
}

TEST(SpectralScheme, ViewIsCanonicalGraph) {
  Graph g = generate_sbm({40, 2, 0.3, 0.05, 4, 0.5, 9});
  Graph v = build_topology_view(g, SpectralPowerScheme{2, 50.0});
  EXPECT_EQ(v.num_nodes(), g.num_nodes());
  EXPECT_EQ(v.features(), g.features());
  for (std::size_t i = 0; i < v.num_nodes(); ++i)
    for (auto j : v.neighbors(i)) EXPECT_TRUE(v.has_edge(j, i));
  EXPECT_THROW(build_topology_view(g, SpectralPowerScheme{2, -1.0}), InvalidParameter);
}
