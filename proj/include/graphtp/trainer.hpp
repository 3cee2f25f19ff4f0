#pragma once

// Contrastive training loop. Each epoch perturbs the input graph and the
// topology view independently, encodes both with the shared GCN, and
// minimizes InfoNCE: unfiltered during warm-up, afterwards with negatives
// filtered through prototypes fitted to that epoch's embeddings.

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "graphtp/adam.hpp"
#include "graphtp/encoder.hpp"
#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/info_nce.hpp"
#include "graphtp/prototypes.hpp"
#include "graphtp/rng.hpp"
#include "graphtp/stochastic_augment.hpp"

namespace graphtp {

struct TrainConfig {
  double tau = 0.4;
  std::size_t epochs = 1000;
  std::size_t warmup = 200;  // epochs [0, warmup) use unfiltered negatives
  std::size_t num_prototypes = 100;
  std::size_t kmeans_iters = 50;
  double epsilon = 10.0;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t embed_dim = 256;
  std::size_t hidden_dim = 0;  // 0 means 2 * embed_dim
  Activation activation = Activation::ReLU;
  bool intra_view_negatives = true;

  std::size_t resolved_hidden() const { return hidden_dim ? hidden_dim : 2 * embed_dim; }

  void validate() const {
    if (!(tau > 0.0)) throw InvalidParameter("train: tau must be > 0");
    if (epochs == 0) throw InvalidParameter("train: epochs must be >= 1");
    if (warmup < 1 || warmup > epochs) throw InvalidParameter("train: need 1 <= warmup <= epochs");
    if (num_prototypes == 0) throw InvalidParameter("train: K must be >= 1");
    if (!(epsilon > 1.0)) throw InvalidParameter("train: epsilon must exceed 1");
    if (!(lr > 0.0)) throw InvalidParameter("train: learning rate must be > 0");
    if (embed_dim == 0) throw InvalidParameter("train: embedding dim must be >= 1");
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double filtered_fraction = 0.0;
  std::optional<double> kmeans_inertia;  // set only when prototypes were built
  double wall_ms = 0.0;
  double max_param_delta = 0.0;
};

/// Parameters plus optimizer state; enough to continue a run exactly.
struct TrainState {
  EncoderParams params;
  AdamState adam;
  std::size_t next_epoch = 0;
};

struct TrainResult {
  TrainState state;
  DenseMatrix embeddings;  // clean forward on the input graph, unit rows
  std::vector<EpochLog> log;
};

inline TrainState initial_state(const TrainConfig& cfg, std::size_t feature_dim) {
  Rng rng = Rng::derive(cfg.seed, rng_tag::kInit);
  TrainState s;
  s.params = EncoderParams::init(feature_dim, cfg.resolved_hidden(), cfg.embed_dim, rng, cfg.activation);
  std::vector<DenseMatrix> shapes{s.params.w1, s.params.w2};
  s.adam = AdamState(AdamHyper{.lr = cfg.lr}, shapes);
  return s;
}

/// Builds one direction's filter from precomputed prototype data. Anchors
/// are rows [anchor_offset, anchor_offset + N) of the stacked embeddings;
/// inter-view candidates are the other block, intra-view the same block.
inline NegativeFilter prototype_filter(const std::vector<std::size_t>& anchor_proto,
                                       const DenseMatrix& cand_softmax, std::size_t n, bool anchors_first,
                                       bool intra, Rng& rng) {
  NegativeFilter f;
  f.anchors = n;
  f.candidates = 2 * n;
  f.keep.assign(2 * n * n, 0);
  f.probs.assign(2 * n * n, 0.0f);
  const std::size_t self_off = anchors_first ? 0 : n;
  const std::size_t other_off = anchors_first ? n : 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t proto = anchor_proto[self_off + i];
    for (std::size_t blk = 0; blk < 2; ++blk) {
      if (blk == 1 && !intra) break;
      const std::size_t off = blk == 0 ? other_off : self_off;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double p = 1.0 - cand_softmax(off + j, proto);
        const std::size_t slot = i * f.candidates + blk * n + j;
        f.probs[slot] = static_cast<float>(p);
        f.keep[slot] = rng.bernoulli(p) ? 1 : 0;
      }
    }
  }
  return f;
}

using EpochCallback = std::function<void(const EpochLog&, const TrainState&)>;

/// Runs epochs [start.next_epoch, cfg.epochs). Per-epoch randomness is
/// derived from (seed, subsystem, epoch), so a resumed run reproduces an
/// uninterrupted one bit for bit.
inline TrainResult train(const Graph& g, const Graph& g_topo, const TrainConfig& cfg,
                         const PerturbConfig& perturb_view1, const PerturbConfig& perturb_view2,
                         std::optional<TrainState> start = std::nullopt, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (g.num_nodes() != g_topo.num_nodes() || g.feature_dim() != g_topo.feature_dim())
    throw InvalidParameter("train: graph and topology view differ in N or d");
  const std::size_t n = g.num_nodes();
  if (cfg.warmup < cfg.epochs && cfg.num_prototypes > 2 * n)
    throw InvalidParameter("train: K exceeds the 2N embeddings available for prototyping");

  TrainState state = start ? std::move(*start) : initial_state(cfg, g.feature_dim());
  if (state.params.input_dim() != g.feature_dim())
    throw InvalidParameter("train: checkpoint input dim does not match features");
  state.adam.hyper.lr = cfg.lr;

  const AdaptiveWeights w1 = adaptive_weights(g, perturb_view1);
  const AdaptiveWeights w2 = adaptive_weights(g_topo, perturb_view2);
  const InfoNceOptions nce{cfg.tau, cfg.intra_view_negatives};

  TrainResult result;
  for (std::size_t epoch = state.next_epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng r1 = Rng::derive(cfg.seed, rng_tag::kPerturbView1, epoch);
    Rng r2 = Rng::derive(cfg.seed, rng_tag::kPerturbView2, epoch);
    const Graph view1 = perturb(g, w1, r1);
    const Graph view2 = perturb(g_topo, w2, r2);
    auto out1 = forward(state.params, normalize_adjacency(view1), view1.features());
    auto out2 = forward(state.params, normalize_adjacency(view2), view2.features());

    EpochLog entry;
    entry.epoch = epoch;
    InfoNceResult res;
    if (epoch < cfg.warmup) {
      res = info_nce(out1.z, out2.z, nullptr, nullptr, nce);
    } else {
      DenseMatrix stacked(2 * n, out1.z.cols());
      std::copy(out1.z.data().begin(), out1.z.data().end(), stacked.data().begin());
      std::copy(out2.z.data().begin(), out2.z.data().end(),
                stacked.data().begin() + static_cast<std::ptrdiff_t>(out1.z.size()));
      Rng km = Rng::derive(cfg.seed, rng_tag::kKMeans, epoch);
      PrototypeModel model = kmeans(stacked, cfg.num_prototypes, cfg.kmeans_iters, km);
      fill_concentration(model, stacked, cfg.epsilon);
      entry.kmeans_inertia = model.inertia;

      std::vector<std::size_t> proto(2 * n);
      DenseMatrix soft(2 * n, model.num_clusters());
      for (std::size_t r = 0; r < 2 * n; ++r) {
        proto[r] = prototype_of(stacked.row(r), model);
        auto s = prototype_softmax(stacked.row(r), model);
        std::copy(s.begin(), s.end(), soft.row(r).begin());
      }
      Rng fr = Rng::derive(cfg.seed, rng_tag::kFilter, epoch);
      const NegativeFilter f12 = prototype_filter(proto, soft, n, true, cfg.intra_view_negatives, fr);
      const NegativeFilter f21 = prototype_filter(proto, soft, n, false, cfg.intra_view_negatives, fr);
      res = info_nce(out1.z, out2.z, &f12, &f21, nce);
    }
    entry.loss = res.loss;
    entry.filtered_fraction = res.filtered_fraction();

    const EncoderGrads g1 = backward(out1.cache, res.grad_z1);
    const EncoderGrads g2 = backward(out2.cache, res.grad_z2);
    std::vector<DenseMatrix> params{std::move(state.params.w1), std::move(state.params.w2)};
    const std::vector<DenseMatrix> grads{add(g1.w1, g2.w1), add(g1.w2, g2.w2)};
    entry.max_param_delta = adam_step(params, grads, state.adam);
    state.params.w1 = std::move(params[0]);
    state.params.w2 = std::move(params[1]);
    state.next_epoch = epoch + 1;

    entry.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry, state);
  }

  result.embeddings = forward(state.params, normalize_adjacency(g), g.features()).z;
  result.state = std::move(state);
  return result;
}

}  // namespace graphtp
