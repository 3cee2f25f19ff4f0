#include <gtest/gtest.h>

#include <cmath>

#include "graphtp/graph.hpp"
#include "graphtp/hash.hpp"
#include "graphtp/stochastic_augment.hpp"

using namespace graphtp;

namespace {

Graph star4() {
  return Graph::from_edges(4, std::vector<WeightedEdge>{{0, 1}, {0, 2}, {0, 3}}, DenseMatrix::identity(4));
}

Graph cycle(std::size_t n, std::size_t d = 3) {
  std::vector<WeightedEdge> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n)});
  return Graph::from_edges(n, e, DenseMatrix(n, d, 1.0));
}

}  // namespace

TEST(AdaptiveWeights, StarGraphHandValues) {
  const double p_f = 0.3;
  auto w = adaptive_weights(star4(), {p_f, 0.3, 0.7});
  // Hub dimension scores log 4, leaves log 2; mean (5/4) log 2.
  const double w_hub = std::log(4.0), w_leaf = std::log(2.0), mean = (w_hub + 3 * w_leaf) / 4;
  const double leaf_p = std::min((w_hub - w_leaf) / (w_hub - mean + 1e-12) * p_f, 0.7);
  EXPECT_NEAR(leaf_p, 0.4, 1e-10);
  EXPECT_EQ(w.feature_probs[0], 0.0);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(w.feature_probs[i], leaf_p, 1e-15);
  // Every edge touches a degree-1 leaf: equal importance, no adaptive signal.
  for (double p : w.edge_probs) EXPECT_EQ(p, 0.0);
}

TEST(AdaptiveWeights, RegularGraphHasNoSignal) {
  auto w = adaptive_weights(cycle(10), {0.2, 0.5, 0.7});
  for (double p : w.edge_probs) EXPECT_EQ(p, 0.0);
  for (double p : w.feature_probs) EXPECT_EQ(p, 0.0);
}

TEST(AdaptiveWeights, ZeroBaseAndCapAndMonotone) {
  Graph g = generate_sbm({60, 3, 0.3, 0.05, 6, 0.5, 4});
  auto z = adaptive_weights(g, {0.0, 0.0, 0.7});
  for (double p : z.edge_probs) EXPECT_EQ(p, 0.0);
  for (double p : z.feature_probs) EXPECT_EQ(p, 0.0);

  auto w = adaptive_weights(g, {0.5, 0.9, 0.6});
  const auto edges = g.edge_list();
  for (std::size_t a = 0; a < edges.size(); ++a) {
    EXPECT_GE(w.edge_probs[a], 0.0);
    EXPECT_LE(w.edge_probs[a], 0.6);
  }
  // Higher importance never yields a higher drop probability.
  for (std::size_t a = 0; a + 1 < edges.size(); ++a) {
    const auto imp = [&](std::size_t e) { return std::min(g.degree(edges[e].u), g.degree(edges[e].v)); };
    if (imp(a) > imp(a + 1)) EXPECT_LE(w.edge_probs[a], w.edge_probs[a + 1]);
  }
}

TEST(AdaptiveWeights, ConfigValidation) {
  EXPECT_THROW(adaptive_weights(star4(), {1.0, 0.1, 0.7}), InvalidParameter);
  EXPECT_THROW(adaptive_weights(star4(), {0.1, -0.1, 0.7}), InvalidParameter);
  EXPECT_THROW(adaptive_weights(star4(), {0.1, 0.1, 0.0}), InvalidParameter);
}

TEST(Perturb, ZeroProbabilitiesAreIdentity) {
  Graph g = generate_sbm({50, 2, 0.3, 0.05, 4, 0.5, 6});
  AdaptiveWeights w{std::vector<double>(4, 0.0), std::vector<double>(g.num_edges(), 0.0)};
  Rng rng(1);
  Graph h = perturb(g, w, rng);
  EXPECT_EQ(graph_hash(h), graph_hash(g));
  EXPECT_EQ(*h.labels(), *g.labels());
}

TEST(Perturb, SharedColumnMaskAndEdgeSubset) {
  Graph g = generate_sbm({80, 4, 0.3, 0.05, 12, 0.5, 7});
  AdaptiveWeights w{std::vector<double>(12, 0.5), std::vector<double>(g.num_edges(), 0.4)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Graph h = perturb(g, w, rng);
    for (std::size_t i = 0; i < 12; ++i) {
      const bool masked = h.features()(0, i) == 0.0 && g.features()(0, i) != 0.0;
      for (std::size_t u = 0; u < 80; ++u)
        EXPECT_EQ(h.features()(u, i), masked ? 0.0 : g.features()(u, i));
    }
    for (const auto& e : h.edge_list()) EXPECT_TRUE(g.has_edge(e.u, e.v));
    EXPECT_LE(h.num_edges(), g.num_edges());
  }
}

TEST(Perturb, KeptEdgeCountWithinBinomialBound) {
  // 1000-edge cycle, every drop probability at the 0.7 cap.
  Graph g = cycle(1000);
  AdaptiveWeights w{std::vector<double>(3, 0.0), std::vector<double>(1000, 0.7)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const double kept = static_cast<double>(perturb(g, w, rng).num_edges());
    EXPECT_NEAR(kept, 300.0, 4 * std::sqrt(1000 * 0.3 * 0.7));
  }
}

TEST(Perturb, PerEdgeKeepFrequencyMatches) {
  Graph g = star4();
  AdaptiveWeights w{std::vector<double>(4, 0.0), {0.1, 0.5, 0.9}};
  const int draws = 10000;
  std::vector<int> kept(3, 0);
  Rng rng(11);
  for (int t = 0; t < draws; ++t) {
    Graph h = perturb(g, w, rng);
    for (int leaf = 1; leaf <= 3; ++leaf) kept[leaf - 1] += h.has_edge(0, leaf);
  }
  for (int e = 0; e < 3; ++e) {
    const double q = 1.0 - w.edge_probs[e];
    EXPECT_NEAR(kept[e], draws * q, 3 * std::sqrt(draws * q * (1 - q))) << "edge " << e;
  }
}

TEST(Perturb, DeterministicAndShapeChecked) {
  Graph g = generate_sbm({40, 2, 0.4, 0.1, 4, 0.5, 8});
  auto w = adaptive_weights(g, {});
  Rng a(5), b(5);
  EXPECT_EQ(graph_hash(perturb(g, w, a)), graph_hash(perturb(g, w, b)));
  AdaptiveWeights bad{std::vector<double>(3, 0.0), w.edge_probs};
  EXPECT_THROW(perturb(g, bad, a), InvalidParameter);
}
