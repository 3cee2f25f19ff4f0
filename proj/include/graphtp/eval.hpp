#pragma once

// Frozen-embedding evaluation: stratified splits, a multinomial logistic
// probe, K-means clustering scored by NMI / homogeneity, and sim@n search.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "graphtp/adam.hpp"
#include "graphtp/error.hpp"
#include "graphtp/matrix.hpp"
#include "graphtp/prototypes.hpp"
#include "graphtp/rng.hpp"
#include "json.hpp"

namespace graphtp {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Stratified random split over labeled nodes (label >= 0). Per class,
/// round(frac * size) nodes go to train and to validation (at least one
/// each), the rest to test.
inline Split make_split(const std::vector<int>& labels, double train_frac, double val_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0))
    throw InvalidParameter("make_split: fractions must be positive and sum below 1");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) by_class[labels[i]].push_back(i);
  if (by_class.empty()) throw InvalidParameter("make_split: no labeled nodes");

  Rng rng = Rng::derive(seed, rng_tag::kSplit);
  Split s;
  for (auto& [cls, idx] : by_class) {
    const std::size_t n = idx.size();
    if (n < 3)
      throw InvalidParameter("make_split: class " + std::to_string(cls) + " has fewer than 3 labeled nodes");
    rng.shuffle(idx);
    auto count = [&](double f) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
    };
    std::size_t n_tr = count(train_frac), n_va = count(val_frac);
    while (n_tr + n_va >= n) (n_tr >= n_va ? n_tr : n_va) -= 1;
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_tr));
    s.val.insert(s.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_tr),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_tr + n_va));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_tr + n_va), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct ProbeConfig {
  double l2 = 1e-4;
  std::size_t reps = 20;
  double train_frac = 0.1;
  double val_frac = 0.1;
  std::uint64_t seed = 0;
  double lr = 0.01;
  std::size_t max_steps = 3000;
  std::size_t check_every = 10;
  std::size_t patience = 20;  // checks without validation improvement
  std::size_t threads = 1;
};

struct ProbeFit {
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t steps = 0;
};

namespace detail {

struct SoftmaxModel {
  DenseMatrix w;  // d x C
  DenseMatrix b;  // 1 x C
};

inline DenseMatrix gather_rows(const DenseMatrix& m, const std::vector<std::size_t>& idx) {
  DenseMatrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(m.row(idx[r]).begin(), m.row(idx[r]).end(), out.row(r).begin());
  return out;
}

inline DenseMatrix logits(const SoftmaxModel& model, const DenseMatrix& x) {
  DenseMatrix z = matmul(x, model.w);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t c = 0; c < z.cols(); ++c) z(i, c) += model.b(0, c);
  return z;
}

inline std::size_t argmax_row(const DenseMatrix& z, std::size_t i) {
  auto r = z.row(i);
  return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

inline double accuracy(const SoftmaxModel& model, const DenseMatrix& x, const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  const DenseMatrix z = logits(model, x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += argmax_row(z, i) == static_cast<std::size_t>(y[i]);
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

inline double cross_entropy(const SoftmaxModel& model, const DenseMatrix& x, const std::vector<int>& y) {
  const DenseMatrix z = logits(model, x);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto r = z.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (double v : r) s += std::exp(v - mx);
    loss += mx + std::log(s) - r[static_cast<std::size_t>(y[i])];
  }
  return y.empty() ? 0.0 : loss / static_cast<double>(y.size());
}

template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Trains a softmax classifier on the frozen embeddings of split.train with
/// full-batch Adam and L2 penalty l2 * |W|^2; keeps the parameters with the
/// best validation accuracy (ties to lower validation loss).
inline ProbeFit fit_probe(const DenseMatrix& emb, const std::vector<int>& labels, const Split& split,
                          const ProbeConfig& cfg) {
  if (labels.size() != emb.rows()) throw InvalidParameter("probe: label count differs from embedding rows");
  auto labels_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> y;
    for (auto i : idx) y.push_back(labels[i]);
    return y;
  };
  const std::vector<int> ytr = labels_of(split.train), yva = labels_of(split.val), yte = labels_of(split.test);
  if (ytr.empty()) throw InvalidParameter("probe: empty training split");
  if (std::all_of(ytr.begin(), ytr.end(), [&](int y) { return y == ytr.front(); }))
    throw InvalidParameter("probe: training split contains a single class");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const auto c = static_cast<std::size_t>(num_classes);
  const DenseMatrix xtr = detail::gather_rows(emb, split.train);
  const DenseMatrix xva = detail::gather_rows(emb, split.val);
  const DenseMatrix xte = detail::gather_rows(emb, split.test);

  detail::SoftmaxModel model{DenseMatrix(emb.cols(), c), DenseMatrix(1, c)};
  std::vector<DenseMatrix> params{model.w, model.b};
  AdamState adam(AdamHyper{.lr = cfg.lr}, params);
  detail::SoftmaxModel best = model;
  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0, step = 0;
  const double inv_n = 1.0 / static_cast<double>(ytr.size());

  for (step = 1; step <= cfg.max_steps; ++step) {
    DenseMatrix z = detail::logits(model, xtr);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      const double mx = *std::max_element(r.begin(), r.end());
      double s = 0.0;
      for (double& v : r) s += (v = std::exp(v - mx));
      for (double& v : r) v = v / s * inv_n;
      r[static_cast<std::size_t>(ytr[i])] -= inv_n;
    }
    DenseMatrix gw = matmul_tn(xtr, z);
    for (std::size_t k = 0; k < gw.size(); ++k) gw.data()[k] += 2.0 * cfg.l2 * model.w.data()[k];
    DenseMatrix gb(1, c);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < c; ++j) gb(0, j) += z(i, j);
    params = {std::move(model.w), std::move(model.b)};
    const std::vector<DenseMatrix> grads{std::move(gw), std::move(gb)};
    adam_step(params, grads, adam);
    model.w = std::move(params[0]);
    model.b = std::move(params[1]);

    if (step % cfg.check_every == 0) {
      const double acc = detail::accuracy(model, xva, yva);
      const double loss = detail::cross_entropy(model, xva, yva);
      if (acc > best_acc || (acc == best_acc && loss < best_loss)) {
        best_acc = acc;
        best_loss = loss;
        best = model;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (best_acc < 0.0) best = model;
  return {detail::accuracy(best, xtr, ytr), detail::accuracy(best, xva, yva), detail::accuracy(best, xte, yte),
          std::min(step, cfg.max_steps)};
}

struct ProbeResult {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repetitions
  std::vector<double> test_accuracies;
  std::vector<double> train_accuracies;
};

/// `reps` fits over fresh stratified splits; repetition r uses split seed
/// derive(seed, probe, r).
inline ProbeResult logistic_probe(const DenseMatrix& emb, const std::vector<int>& labels, const ProbeConfig& cfg) {
  if (cfg.reps == 0) throw InvalidParameter("probe: reps must be >= 1");
  std::vector<ProbeFit> fits(cfg.reps);
  std::vector<Split> splits;
  for (std::size_t r = 0; r < cfg.reps; ++r)
    splits.push_back(make_split(labels, cfg.train_frac, cfg.val_frac, Rng::derive(cfg.seed, rng_tag::kProbe, r).next_u64()));
  detail::parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) { fits[r] = fit_probe(emb, labels, splits[r], cfg); });

  ProbeResult res;
  for (const auto& f : fits) {
    res.test_accuracies.push_back(f.test_accuracy);
    res.train_accuracies.push_back(f.train_accuracy);
  }
  const double n = static_cast<double>(fits.size());
  res.mean = std::accumulate(res.test_accuracies.begin(), res.test_accuracies.end(), 0.0) / n;
  double var = 0.0;
  for (double a : res.test_accuracies) var += (a - res.mean) * (a - res.mean);
  res.std = std::sqrt(var / n);
  return res;
}

enum class NmiNormalization { Geometric, Arithmetic };

struct ClusterAgreement {
  double nmi = 0.0;
  double homogeneity = 0.0;
};

/// NMI and homogeneity of `predicted` against `truth`; entries with a
/// negative truth label are skipped.
inline ClusterAgreement cluster_agreement(const std::vector<int>& truth, const std::vector<int>& predicted,
                                          NmiNormalization norm = NmiNormalization::Geometric) {
  if (truth.size() != predicted.size()) throw InvalidParameter("cluster_agreement: length mismatch");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ny, nc;
  double n = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0) continue;
    joint[{truth[i], predicted[i]}] += 1.0;
    ny[truth[i]] += 1.0;
    nc[predicted[i]] += 1.0;
    n += 1.0;
  }
  if (n == 0.0) throw InvalidParameter("cluster_agreement: no labeled entries");
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) h -= c / n * std::log(c / n);
    return h;
  };
  const double hy = entropy(ny), hc = entropy(nc);
  double mi = 0.0, hy_given_c = 0.0;
  for (const auto& [key, nyc] : joint) {
    const double py = ny[key.first], pc = nc[key.second];
    mi += nyc / n * std::log(n * nyc / (py * pc));
    hy_given_c -= nyc / n * std::log(nyc / pc);
  }
  mi = std::max(mi, 0.0);
  ClusterAgreement out;
  const double denom = norm == NmiNormalization::Geometric ? std::sqrt(hy * hc) : 0.5 * (hy + hc);
  if (hy == 0.0 || hc == 0.0)
    out.nmi = (hy == 0.0 && hc == 0.0) ? 1.0 : 0.0;
  else
    out.nmi = std::clamp(mi / denom, 0.0, 1.0);
  out.homogeneity = hy == 0.0 ? 1.0 : std::clamp(1.0 - hy_given_c / hy, 0.0, 1.0);
  return out;
}

struct ClusteringConfig {
  std::size_t k = 0;  // 0 means number of classes
  std::size_t reps = 10;
  std::size_t iters = 300;
  std::uint64_t seed = 0;
  NmiNormalization normalization = NmiNormalization::Geometric;
};

/// K-means on the embeddings (best of `reps` runs by inertia), scored
/// against the labels.
inline ClusterAgreement clustering_scores(const DenseMatrix& emb, const std::vector<int>& labels,
                                          const ClusteringConfig& cfg) {
  if (labels.size() != emb.rows()) throw InvalidParameter("clustering: label count differs from rows");
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const std::size_t k = cfg.k ? cfg.k : static_cast<std::size_t>(std::max(classes, 1));
  std::optional<PrototypeModel> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(cfg.reps, 1); ++r) {
    Rng rng = Rng::derive(cfg.seed, rng_tag::kClustering, r);
    auto m = kmeans(emb, k, cfg.iters, rng);
    if (!best || m.inertia < best->inertia) best = std::move(m);
  }
  std::vector<int> pred(best->assignments.begin(), best->assignments.end());
  return cluster_agreement(labels, pred, cfg.normalization);
}

/// For every labeled query, the fraction of its n most cosine-similar other
/// nodes (ties to the smaller index) that share its label, averaged.
inline std::map<std::size_t, double> sim_at_n(const DenseMatrix& emb, const std::vector<int>& labels,
                                              const std::vector<std::size_t>& n_list) {
  const std::size_t n = emb.rows();
  if (labels.size() != n) throw InvalidParameter("sim@n: label count differs from rows");
  std::size_t labeled = 0;
  for (int l : labels) labeled += l >= 0;
  for (auto k : n_list) {
    if (k == 0 || k >= n) throw InvalidParameter("sim@n: need 1 <= n < N");
    if (labeled < k + 1) throw InvalidParameter("sim@n: fewer than n+1 labeled nodes");
  }
  std::map<std::size_t, double> out;
  if (n_list.empty()) return out;
  const std::size_t max_n = *std::max_element(n_list.begin(), n_list.end());

  DenseMatrix unit = emb;
  row_l2_normalize(unit);
  std::vector<double> sims(n);
  std::vector<std::size_t> order;
  std::map<std::size_t, double> sum;
  for (std::size_t q = 0; q < n; ++q) {
    if (labels[q] < 0) continue;
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      sims[j] = dot(unit.row(q), unit.row(j));
      order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(max_n), order.end(),
                      [&](std::size_t a, std::size_t b) { return sims[a] != sims[b] ? sims[a] > sims[b] : a < b; });
    for (auto k : n_list) {
      std::size_t same = 0;
      for (std::size_t t = 0; t < k; ++t) same += labels[order[t]] == labels[q];
      sum[k] += static_cast<double>(same) / static_cast<double>(k);
    }
  }
  for (auto k : n_list) out[k] = sum[k] / static_cast<double>(labeled);
  return out;
}

struct EvalReport {
  ProbeResult probe;
  ClusterAgreement clustering;
  std::map<std::size_t, double> sim_at;
  double runtime_ms = 0.0;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json sim = nlohmann::json::object();
  for (const auto& [k, v] : r.sim_at) sim[std::to_string(k)] = v;
  return {
      {"accuracy", {{"mean", r.probe.mean}, {"std", r.probe.std}, {"per_rep", r.probe.test_accuracies}}},
      {"train_accuracy", r.probe.train_accuracies},
      {"nmi", r.clustering.nmi},
      {"homogeneity", r.clustering.homogeneity},
      {"sim_at", sim},
      {"runtime_ms", r.runtime_ms},
  };
}

}  // namespace graphtp
