#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "graphtp/eval.hpp"

using namespace graphtp;

namespace {

std::vector<int> balanced_labels(std::size_t n, int classes) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  return y;
}

// Class c sits around 5 * e_c with unit noise.
DenseMatrix blobs(const std::vector<int>& y, std::size_t d, Rng& rng, double sep = 5.0) {
  DenseMatrix x(y.size(), d);
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) x(i, k) = 0.3 * rng.normal();
    x(i, static_cast<std::size_t>(y[i])) += sep;
  }
  return x;
}

DenseMatrix noise(std::size_t n, std::size_t d, Rng& rng) {
  DenseMatrix x(n, d);
  for (auto& v : x.data()) v = rng.normal();
  return x;
}

}  // namespace

TEST(Split, StratificationArithmetic) {
  auto y = balanced_labels(100, 2);
  auto s = make_split(y, 0.1, 0.1, 3);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(s.test.size(), 80u);
  std::size_t class0 = 0;
  for (auto i : s.train) class0 += y[i] == 0;
  EXPECT_EQ(class0, 5u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(Split, ReproducibleSkipsUnlabeledAndValidates) {
  auto y = balanced_labels(60, 3);
  y[0] = -1;
  auto a = make_split(y, 0.2, 0.2, 7), b = make_split(y, 0.2, 0.2, 7), c = make_split(y, 0.2, 0.2, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (auto i : *part) EXPECT_NE(i, 0u);
  EXPECT_THROW(make_split(y, 0.5, 0.6, 1), InvalidParameter);
  EXPECT_THROW(make_split(y, 0.0, 0.1, 1), InvalidParameter);
  EXPECT_THROW(make_split({0, 0, 0, 1, 1}, 0.3, 0.3, 1), InvalidParameter);
}

TEST(Probe, SeparableBlobsAreSolved) {
  Rng rng(1);
  auto y = balanced_labels(200, 2);
  DenseMatrix x = blobs(y, 4, rng);
  ProbeConfig cfg;
  cfg.reps = 3;
  auto r = logistic_probe(x, y, cfg);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.std, 0.0);
  EXPECT_EQ(r.test_accuracies.size(), 3u);
}

TEST(Probe, PermutedLabelsGiveChance) {
  Rng rng(2);
  auto y = balanced_labels(1000, 2);
  DenseMatrix x = blobs(y, 8, rng);
  rng.shuffle(y);
  ProbeConfig cfg;
  cfg.reps = 4;
  auto r = logistic_probe(x, y, cfg);
  const double test_n = 800.0;
  EXPECT_NEAR(r.mean, 0.5, 4 * std::sqrt(0.25 / test_n));
  double train_mean = 0.0;
  for (double a : r.train_accuracies) train_mean += a / 4;
  EXPECT_GE(train_mean, r.mean - 0.02);
}

TEST(Probe, Validation) {
  Rng rng(3);
  DenseMatrix x = noise(10, 2, rng);
  auto y = balanced_labels(10, 2);
  EXPECT_THROW(logistic_probe(x, std::vector<int>(9, 0), {}), InvalidParameter);
  Split one_class{{0, 2}, {4}, {1, 3}};
  EXPECT_THROW(fit_probe(x, y, one_class, {}), InvalidParameter);
  ProbeConfig zero;
  zero.reps = 0;
  EXPECT_THROW(logistic_probe(x, y, zero), InvalidParameter);
}

TEST(Probe, ThreadCountDoesNotChangeResults) {
  Rng rng(4);
  auto y = balanced_labels(150, 3);
  DenseMatrix x = blobs(y, 5, rng, 1.0);
  ProbeConfig a;
  a.reps = 4;
  ProbeConfig b = a;
  b.threads = 3;
  EXPECT_EQ(logistic_probe(x, y, a).test_accuracies, logistic_probe(x, y, b).test_accuracies);
}

TEST(ClusterAgreement, HandContingencyTable) {
  // Class 0: 3 in cluster A; class 1: 1 in A, 2 in B.
  const std::vector<int> truth{0, 0, 0, 1, 1, 1};
  const std::vector<int> pred{0, 0, 0, 0, 1, 1};
  const double hy = std::log(2.0);
  const double hc = -(4.0 / 6 * std::log(4.0 / 6) + 2.0 / 6 * std::log(2.0 / 6));
  const double mi = 0.5 * std::log(1.5) + (1.0 / 6) * std::log(0.5) + (1.0 / 3) * std::log(2.0);
  const double hy_c = -(0.5 * std::log(0.75) + (1.0 / 6) * std::log(0.25));
  auto g = cluster_agreement(truth, pred);
  EXPECT_NEAR(g.nmi, mi / std::sqrt(hy * hc), 1e-14);
  EXPECT_NEAR(g.homogeneity, 1.0 - hy_c / hy, 1e-14);
  auto a = cluster_agreement(truth, pred, NmiNormalization::Arithmetic);
  EXPECT_NEAR(a.nmi, mi / (0.5 * (hy + hc)), 1e-14);
}

TEST(ClusterAgreement, DegenerateAndPermutationInvariant) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2, -1};
  auto same = cluster_agreement(truth, {5, 5, 7, 7, 9, 9, 0});
  EXPECT_EQ(same.nmi, 1.0);
  EXPECT_EQ(same.homogeneity, 1.0);
  auto single = cluster_agreement(truth, std::vector<int>(7, 0));
  EXPECT_EQ(single.homogeneity, 0.0);
  EXPECT_EQ(single.nmi, 0.0);

  Rng rng(5);
  std::vector<int> t(300), p(300);
  for (std::size_t i = 0; i < 300; ++i) {
    t[i] = static_cast<int>(rng.below(4));
    p[i] = rng.bernoulli(0.7) ? t[i] : static_cast<int>(rng.below(5));
  }
  const std::vector<int> relabel{3, 0, 4, 1, 2};
  std::vector<int> q(300);
  for (std::size_t i = 0; i < 300; ++i) q[i] = relabel[static_cast<std::size_t>(p[i])];
  auto x = cluster_agreement(t, p), y = cluster_agreement(t, q);
  EXPECT_NEAR(x.nmi, y.nmi, 1e-14);
  EXPECT_NEAR(x.homogeneity, y.homogeneity, 1e-14);
  EXPECT_GT(x.nmi, 0.0);
  EXPECT_LT(x.nmi, 1.0);
  EXPECT_THROW(cluster_agreement(t, std::vector<int>(3, 0)), InvalidParameter);
}

TEST(ClusteringScores, RecoversBlobs) {
  Rng rng(6);
  auto y = balanced_labels(120, 3);
  ClusteringConfig cfg;
  cfg.reps = 5;
  auto s = clustering_scores(blobs(y, 6, rng), y, cfg);
  EXPECT_EQ(s.nmi, 1.0);
  EXPECT_EQ(s.homogeneity, 1.0);
}

TEST(SimAtN, PerfectSeparation) {
  DenseMatrix x(10, 2);
  std::vector<int> y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    y[i] = i < 5 ? 0 : 1;
    x(i, static_cast<std::size_t>(y[i])) = 1.0;
  }
  auto s = sim_at_n(x, y, {4});
  EXPECT_EQ(s.at(4), 1.0);
  // Ties go to smaller indices: node 0 ranks 1..4, then 5; sim@5 is 4/5 for every query.
  EXPECT_DOUBLE_EQ(sim_at_n(x, y, {5}).at(5), 0.8);
  EXPECT_THROW(sim_at_n(x, y, {10}), InvalidParameter);
  EXPECT_THROW(sim_at_n(x, y, {0}), InvalidParameter);
}

TEST(SimAtN, RotationInvariant) {
  Rng rng(7);
  const std::size_t n = 80, d = 6;
  DenseMatrix x = noise(n, d, rng);
  auto y = balanced_labels(n, 3);
  DenseMatrix r = x;
  for (std::size_t k = 0; k + 1 < d; k += 2) {
    const double th = rng.uniform(0.0, 6.283185307179586);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = x(i, k), b = x(i, k + 1);
      r(i, k) = std::cos(th) * a - std::sin(th) * b;
      r(i, k + 1) = std::sin(th) * a + std::cos(th) * b;
    }
  }
  auto s1 = sim_at_n(x, y, {5, 10}), s2 = sim_at_n(r, y, {5, 10});
  EXPECT_NEAR(s1.at(5), s2.at(5), 1e-12);
  EXPECT_NEAR(s1.at(10), s2.at(10), 1e-12);
}

TEST(SimAtN, RandomEmbeddingsAtChance) {
  Rng rng(8);
  const std::size_t n = 400;
  auto s = sim_at_n(noise(n, 16, rng), balanced_labels(n, 2), {5});
  // Each query averages 5 near-independent coin flips.
  EXPECT_NEAR(s.at(5), 0.5, 5 * std::sqrt(0.25 / (5.0 * n)));
}

TEST(EvalReport, Json) {
  EvalReport r;
  r.probe.mean = 0.75;
  r.probe.std = 0.01;
  r.probe.test_accuracies = {0.74, 0.76};
  r.clustering = {0.5, 0.6};
  r.sim_at = {{5, 0.9}, {10, 0.8}};
  auto j = to_json(r);
  EXPECT_EQ(j["accuracy"]["mean"], 0.75);
  EXPECT_EQ(j["accuracy"]["per_rep"].size(), 2u);
  EXPECT_EQ(j["nmi"], 0.5);
  EXPECT_EQ(j["homogeneity"], 0.6);
  EXPECT_EQ(j["sim_at"]["10"], 0.8);
}
