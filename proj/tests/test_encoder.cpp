#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "graphtp/encoder.hpp"
#include "graphtp/gradcheck.hpp"
#include "graphtp/graph.hpp"

using namespace graphtp;

namespace {

Graph random_graph(std::size_t n, std::size_t d, double p, Rng& rng) {
  std::vector<WeightedEdge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) e.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j)});
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = rng.bernoulli(0.5) ? rng.uniform(-1.0, 1.0) : 0.0;
  return Graph::from_edges(n, e, x);
}

double linear_loss(const DenseMatrix& z, const DenseMatrix& r) { return dot(z.data(), r.data()); }

}  // namespace

TEST(NormalizeAdjacency, HandExamples) {
  auto one = normalize_adjacency(Graph::from_edges(1, std::vector<WeightedEdge>{}, DenseMatrix(1, 1)));
  EXPECT_EQ(one.to_dense(), DenseMatrix(1, 1, 1.0));

  auto k2 = normalize_adjacency(Graph::from_edges(2, std::vector<WeightedEdge>{{0, 1}}, DenseMatrix(2, 1)));
  EXPECT_LE(max_abs_diff(k2.to_dense(), DenseMatrix(2, 2, 0.5)), 1e-15);

  auto p3 = normalize_adjacency(Graph::from_edges(3, std::vector<WeightedEdge>{{0, 1}, {1, 2}}, DenseMatrix(3, 1)))
                .to_dense();
  EXPECT_NEAR(p3(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(p3(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(p3(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p3(0, 2), 0.0);
}

TEST(NormalizeAdjacency, MatchesDenseFormulaOnRandomGraphs) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    Graph g = random_graph(3 + rng.below(20), 2, 0.3, rng);
    const std::size_t n = g.num_nodes();
    DenseMatrix a = adjacency_matrix(g).to_dense();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
    DenseMatrix expect(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) expect(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
    auto got = normalize_adjacency(g);
    EXPECT_LE(max_abs_diff(got.to_dense(), expect), 1e-15);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = got.offsets[i]; p < got.offsets[i + 1]; ++p) {
        EXPECT_GT(got.values[p], 0.0);
        EXPECT_LE(got.values[p], 1.0);
        if (p > got.offsets[i]) EXPECT_LT(got.indices[p - 1], got.indices[p]);
      }
  }
}

TEST(Forward, PassThroughOnEdgelessGraph) {
  Rng rng(2);
  const std::size_t n = 6, d = 4;
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);
  Graph g = Graph::from_edges(n, std::vector<WeightedEdge>{}, x);
  EncoderParams p{DenseMatrix::identity(d), DenseMatrix::identity(d), Activation::Identity};
  auto out = forward(p, normalize_adjacency(g), x);
  DenseMatrix expect = x;
  row_l2_normalize(expect);
  EXPECT_LE(max_abs_diff(out.z, expect), 1e-15);
}

TEST(Forward, UnitRowsAndDeterminism) {
  Rng rng(3);
  Graph g = random_graph(30, 8, 0.2, rng);
  auto p = EncoderParams::init(8, 16, 5, rng);
  auto a = forward(p, normalize_adjacency(g), g.features());
  auto b = forward(p, normalize_adjacency(g), g.features());
  EXPECT_EQ(a.z, b.z);
  for (std::size_t i = 0; i < 30; ++i) {
    if (a.cache.norms[i] == 0.0) continue;
    EXPECT_NEAR(l2_norm(a.z.row(i)), 1.0, 1e-12);
  }
}

TEST(Forward, ShapeErrors) {
  Rng rng(4);
  Graph g = random_graph(5, 3, 0.5, rng);
  auto p = EncoderParams::init(4, 6, 2, rng);
  EXPECT_THROW(forward(p, normalize_adjacency(g), g.features()), InvalidParameter);
  auto q = EncoderParams::init(3, 6, 2, rng);
  EXPECT_THROW(forward(q, normalize_adjacency(g), DenseMatrix(4, 3)), InvalidParameter);
  auto out = forward(q, normalize_adjacency(g), g.features());
  EXPECT_THROW(backward(out.cache, DenseMatrix(5, 3)), InvalidParameter);
  EXPECT_THROW(EncoderParams::init(0, 1, 1, rng), InvalidParameter);
}

TEST(Init, GlorotRange) {
  Rng rng(5);
  auto p = EncoderParams::init(20, 40, 10, rng);
  const double l1 = std::sqrt(6.0 / 60), l2 = std::sqrt(6.0 / 50);
  for (double v : p.w1.data()) EXPECT_LE(std::abs(v), l1);
  for (double v : p.w2.data()) EXPECT_LE(std::abs(v), l2);
  EXPECT_EQ(p.w1.rows(), 20u);
  EXPECT_EQ(p.w2.cols(), 10u);
}

TEST(Backward, ZeroAndLinearity) {
  Rng rng(6);
  Graph g = random_graph(10, 5, 0.3, rng);
  auto p = EncoderParams::init(5, 8, 4, rng);
  auto out = forward(p, normalize_adjacency(g), g.features());
  auto zero = backward(out.cache, DenseMatrix(10, 4));
  EXPECT_EQ(max_abs(zero.w1), 0.0);
  EXPECT_EQ(max_abs(zero.w2), 0.0);
  DenseMatrix r(10, 4);
  for (auto& v : r.data()) v = rng.uniform(-1.0, 1.0);
  auto g1 = backward(out.cache, r), g2 = backward(out.cache, scale(r, 2.0));
  EXPECT_LE(max_abs_diff(g2.w1, scale(g1.w1, 2.0)), 1e-14);
  EXPECT_LE(max_abs_diff(g2.w2, scale(g1.w2, 2.0)), 1e-14);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (Activation act : {Activation::ReLU, Activation::Identity}) {
    Rng rng(7);
    Graph g = random_graph(10, 6, 0.3, rng);
    auto p = EncoderParams::init(6, 8, 4, rng, act);
    DenseMatrix r(10, 4);
    for (auto& v : r.data()) v = rng.uniform(-1.0, 1.0);
    const auto adj = normalize_adjacency(g);
    ScalarFunction f = [&](const std::vector<DenseMatrix>& w) {
      return linear_loss(forward({w[0], w[1], act}, adj, g.features()).z, r);
    };
    auto out = forward(p, adj, g.features());
    auto grads = backward(out.cache, r);
    for (std::size_t group = 0; group < 2; ++group) {
      // Probe each block separately so both get at least 20 coordinates.
      std::vector<DenseMatrix> an{grads.w1, grads.w2};
      an[1 - group].fill(0.0);
      Rng probe(100 + group);
      ScalarFunction only = [&](const std::vector<DenseMatrix>& w) {
        std::vector<DenseMatrix> full{p.w1, p.w2};
        full[group] = w[0];
        return f(full);
      };
      auto res = finite_diff_check(only, {group == 0 ? p.w1 : p.w2}, {an[group]}, 25, 1e-5, probe);
      EXPECT_LE(res.max_rel_error, 1e-4) << to_string(act) << " block " << group;
    }
  }
}

TEST(Forward, PermutationEquivariance) {
  Rng rng(8);
  Graph g = random_graph(8, 4, 0.4, rng);
  auto p = EncoderParams::init(4, 6, 3, rng);
  std::vector<std::size_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);  // node i becomes perm[i]
  std::vector<WeightedEdge> e;
  for (const auto& x : g.edge_list()) e.push_back({static_cast<NodeId>(perm[x.u]), static_cast<NodeId>(perm[x.v])});
  DenseMatrix xp(8, 4);
  for (std::size_t i = 0; i < 8; ++i)
    std::copy(g.features().row(i).begin(), g.features().row(i).end(), xp.row(perm[i]).begin());
  Graph gp = Graph::from_edges(8, e, xp);
  auto z = forward(p, normalize_adjacency(g), g.features()).z;
  auto zp = forward(p, normalize_adjacency(gp), xp).z;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(zp(perm[i], k), z(i, k), 1e-12);
}
