#pragma once

// Subcommand implementations shared by the command-line tool and the tests:
// topology-view construction with caching, training with checkpoints and a
// JSON-lines log, evaluation of stored embeddings, and the variant ablation.

#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graphtp/artifacts.hpp"
#include "graphtp/config.hpp"
#include "graphtp/eval.hpp"
#include "graphtp/graph_io.hpp"
#include "graphtp/hash.hpp"
#include "graphtp/topo_augment.hpp"
#include "graphtp/trainer.hpp"
#include "json.hpp"

namespace graphtp {

inline Graph load_dataset(const RunConfig& cfg, bool need_labels) {
  validate(cfg, need_labels);
  std::optional<fs::path> labels;
  if (!cfg.labels.empty()) labels = cfg.labels;
  return load_graph(cfg.edges, cfg.features, labels);
}

/// Git-style hashes of the configured input files.
inline nlohmann::json input_hashes(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, p] : {std::pair{"edges", cfg.edges}, {"features", cfg.features}, {"labels", cfg.labels}})
    if (!p.empty() && fs::is_regular_file(p)) j[name] = git_blob_hash(p);
  return j;
}

inline void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j = {{"command", command}, {"config", cfg.to_json()}, {"inputs", input_hashes(cfg)}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(dir / "manifest.json", j);
}

struct TopologyStats {
  std::size_t edges_original = 0;
  std::size_t edges_view = 0;
  std::size_t shared = 0;     // edges present in both graphs
  std::size_t new_edges = 0;  // edges of the view absent from the original
  std::optional<std::size_t> new_intra_class;
  bool cache_hit = false;

  double overlap_fraction() const {
    return edges_view == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(edges_view);
  }
  std::optional<double> new_intra_fraction() const {
    if (!new_intra_class || new_edges == 0) return std::nullopt;
    return static_cast<double>(*new_intra_class) / static_cast<double>(new_edges);
  }
  nlohmann::json to_json() const {
    nlohmann::json j = {{"edges_original", edges_original}, {"edges_view", edges_view},
                        {"shared", shared},                 {"new_edges", new_edges},
                        {"overlap_fraction", overlap_fraction()}, {"cache_hit", cache_hit}};
    if (auto f = new_intra_fraction()) j["new_intra_class_fraction"] = *f;
    return j;
  }
};

inline TopologyStats topology_stats(const Graph& g, const Graph& view) {
  TopologyStats s;
  s.edges_original = g.num_edges();
  s.edges_view = view.num_edges();
  const auto& labels = g.labels();
  if (labels) s.new_intra_class = 0;
  for (const auto& e : view.edge_list()) {
    if (g.has_edge(e.u, e.v)) {
      ++s.shared;
      continue;
    }
    ++s.new_edges;
    if (labels && (*labels)[e.u] >= 0 && (*labels)[e.u] == (*labels)[e.v]) ++*s.new_intra_class;
  }
  return s;
}

/// The second contrastive view: the reorganized topology, read from the
/// cache when a matching entry exists. With scheme "none" it is `g` itself.
inline Graph topology_view(const Graph& g, TopologyKind kind, std::size_t k, double alpha,
                           const std::optional<fs::path>& cache_dir, bool* cache_hit = nullptr) {
  if (cache_hit) *cache_hit = false;
  if (kind == TopologyKind::None) return g;
  TopologyKey key{graph_hash(g), to_string(kind), k, kind == TopologyKind::Spectral ? alpha : 0.0};
  if (cache_dir) {
    if (auto cached = load_topology_cache(*cache_dir, key, g)) {
      if (cache_hit) *cache_hit = true;
      return std::move(*cached);
    }
  }
  TopoScheme scheme = kind == TopologyKind::Feature ? TopoScheme{FeatureSpaceScheme{k}}
                                                     : TopoScheme{SpectralPowerScheme{k, alpha}};
  Graph view = build_topology_view(g, scheme);
  if (cache_dir) save_topology_cache(*cache_dir, key, view);
  return view;
}

inline TopologyStats cmd_augment(const RunConfig& cfg, std::ostream& out) {
  if (cfg.scheme == TopologyKind::None) throw InvalidParameter("augment: topology.scheme is none");
  const Graph g = load_dataset(cfg, false);
  bool hit = false;
  const Graph view = topology_view(g, cfg.scheme, cfg.k, cfg.alpha, cfg.resolved_cache_dir(), &hit);
  TopologyStats s = topology_stats(g, view);
  s.cache_hit = hit;
  write_manifest(cfg.resolved_cache_dir(), cfg, "augment", {{"stats", s.to_json()}});
  out << (hit ? "cache hit" : "built topology view") << ": " << s.edges_view << " edges (original "
      << s.edges_original << "), shared " << s.shared << " (" << std::fixed << std::setprecision(1)
      << 100.0 * s.overlap_fraction() << "%), new " << s.new_edges;
  if (auto f = s.new_intra_fraction()) out << ", new intra-class " << 100.0 * *f << "%";
  out << std::defaultfloat << '\n';
  return s;
}

struct TrainOptions {
  std::optional<fs::path> resume;  // checkpoint directory
  bool warmup_only = false;
  bool quiet = false;
};

/// Trains and writes checkpoint/, embeddings.tgm, train_log.jsonl and
/// manifest.json under the output directory.
inline TrainResult cmd_train(RunConfig cfg, const TrainOptions& opt, std::ostream& out) {
  if (opt.warmup_only) {
    cfg.filtering = false;
    cfg.train.warmup = cfg.train.epochs;
  }
  const Graph g = load_dataset(cfg, false);
  const Graph view = topology_view(g, cfg.scheme, cfg.k, cfg.alpha, cfg.resolved_cache_dir());

  std::optional<TrainState> start;
  if (opt.resume) {
    Checkpoint c = load_checkpoint(*opt.resume);
    if (c.seed != cfg.train.seed)
      throw InvalidParameter("resume: checkpoint seed " + std::to_string(c.seed) + " differs from --seed");
    if (c.state.params.input_dim() != g.feature_dim() || c.state.params.output_dim() != cfg.train.embed_dim ||
        c.state.params.hidden_dim() != cfg.train.resolved_hidden())
      throw InvalidParameter("resume: checkpoint dims differ from the configured encoder");
    if (c.state.next_epoch > cfg.train.epochs)
      throw InvalidParameter("resume: checkpoint is past the configured epoch count");
    start = std::move(c.state);
  }

  fs::create_directories(cfg.output);
  std::ofstream log(cfg.output / "train_log.jsonl", opt.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw InvalidParameter("cannot write " + (cfg.output / "train_log.jsonl").string());
  const auto ckpt_dir = cfg.output / "checkpoint";
  auto on_epoch = [&](const EpochLog& e, const TrainState& s) {
    log << to_json(e).dump() << '\n';
    log.flush();
    if (!opt.quiet && (e.epoch % 50 == 0 || e.epoch + 1 == cfg.train.epochs))
      out << "epoch " << e.epoch << " loss " << e.loss << " filtered " << e.filtered_fraction << '\n';
    if (cfg.checkpoint_every && (e.epoch + 1) % cfg.checkpoint_every == 0) save_checkpoint(ckpt_dir, s, cfg.train.seed);
  };
  TrainResult r = train(g, view, cfg.train, cfg.perturb1, cfg.perturb2, std::move(start), on_epoch);
  if (!r.embeddings.all_finite()) throw NumericalFailure("train: non-finite embeddings");

  save_checkpoint(ckpt_dir, r.state, cfg.train.seed);
  write_matrix(cfg.output / "embeddings.tgm", r.embeddings, DType::F32);
  write_manifest(cfg.output, cfg, "train",
                 {{"resumed_from", opt.resume ? nlohmann::json(opt.resume->string()) : nlohmann::json(nullptr)},
                  {"embeddings", git_blob_hash(cfg.output / "embeddings.tgm")}});
  return r;
}

inline EvalReport evaluate(const DenseMatrix& emb, const std::vector<int>& labels, const RunConfig& cfg) {
  if (emb.rows() != labels.size())
    throw InvalidParameter("eval: " + std::to_string(emb.rows()) + " embedding rows for " +
                           std::to_string(labels.size()) + " labels");
  if (!emb.all_finite()) throw NumericalFailure("eval: non-finite embedding entries");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport r;
  r.probe = logistic_probe(emb, labels, cfg.probe);
  r.clustering = clustering_scores(emb, labels, cfg.clustering);
  r.sim_at = sim_at_n(emb, labels, cfg.sim_n);
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::vector<int> shuffled_labels(std::vector<int> labels, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, rng_tag::kShuffle);
  rng.shuffle(labels);
  return labels;
}

/// Evaluates stored embeddings; writes eval_report.json and manifest.json
/// into <output>/eval.
inline EvalReport cmd_eval(const RunConfig& cfg, const fs::path& embeddings, bool shuffle_labels, std::ostream& out) {
  if (!cfg.seed) throw InvalidParameter("config: seed is required");
  if (cfg.labels.empty()) throw InvalidParameter("config: data.labels path is required");
  if (!fs::is_regular_file(cfg.labels)) throw InvalidParameter("config: labels file not found: " + cfg.labels.string());
  if (!fs::is_regular_file(embeddings)) throw InvalidParameter("eval: embeddings not found: " + embeddings.string());
  const DenseMatrix emb = read_matrix(embeddings);
  std::vector<int> labels = read_labels(cfg.labels);
  if (shuffle_labels) labels = shuffled_labels(std::move(labels), *cfg.seed);
  const EvalReport r = evaluate(emb, labels, cfg);

  const auto dir = cfg.output / "eval";
  auto j = to_json(r);
  j["shuffled_labels"] = shuffle_labels;
  write_json(dir / "eval_report.json", j);
  write_manifest(dir, cfg, "eval", {{"embeddings", git_blob_hash(embeddings)}});
  out << j.dump(2) << '\n';
  return r;
}

struct AblationVariant {
  const char* name;
  TopologyKind topology;
  bool filtering;
};

/// The six variants: topology reorganization (none, feature kNN, spectral)
/// crossed with prototype filtering.
inline constexpr std::array<AblationVariant, 6> kAblationVariants{{
    {"Graph", TopologyKind::None, false},
    {"GraphP", TopologyKind::None, true},
    {"GraphT-F", TopologyKind::Feature, false},
    {"GraphTP-F", TopologyKind::Feature, true},
    {"GraphT-T", TopologyKind::Spectral, false},
    {"GraphTP-T", TopologyKind::Spectral, true},
}};

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  EvalReport report;
};

struct AblationResult {
  std::vector<AblationRow> rows;

  std::vector<const AblationRow*> of(const std::string& variant) const {
    std::vector<const AblationRow*> v;
    for (const auto& r : rows)
      if (r.variant == variant) v.push_back(&r);
    return v;
  }
  const AblationRow* find(const std::string& variant, std::uint64_t seed) const {
    for (const auto& r : rows)
      if (r.variant == variant && r.seed == seed) return &r;
    return nullptr;
  }
  double mean_accuracy(const std::string& variant) const {
    double s = 0.0;
    auto v = of(variant);
    for (auto* r : v) s += r->report.probe.mean;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  double mean_nmi(const std::string& variant) const {
    double s = 0.0;
    auto v = of(variant);
    for (auto* r : v) s += r->report.clustering.nmi;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
};

/// Trains and evaluates every variant for every seed. Topology views are
/// built once per scheme. Variants without filtering use warm-up = epochs.
inline AblationResult run_ablation(const Graph& g, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   const std::optional<fs::path>& cache_dir, std::ostream* progress = nullptr) {
  if (seeds.empty()) throw InvalidParameter("ablate: no seeds");
  if (!g.labels()) throw InvalidParameter("ablate: labels are required");
  std::map<TopologyKind, Graph> views;
  for (const auto& v : kAblationVariants)
    if (!views.contains(v.topology)) views.emplace(v.topology, topology_view(g, v.topology, cfg.k, cfg.alpha, cache_dir));

  AblationResult res;
  for (const auto seed : seeds) {
    for (const auto& v : kAblationVariants) {
      RunConfig c = cfg;
      c.seed = seed;
      c.train.seed = c.probe.seed = c.clustering.seed = seed;
      c.filtering = v.filtering;
      c.train.warmup = v.filtering ? std::min(cfg.train.warmup, cfg.train.epochs) : cfg.train.epochs;
      if (v.filtering && cfg.train.warmup >= cfg.train.epochs)
        throw InvalidParameter("ablate: warmup must be below epochs for the filtered variants");
      const TrainResult t = train(g, views.at(v.topology), c.train, c.perturb1, c.perturb2);
      AblationRow row{v.name, seed, evaluate(t.embeddings, *g.labels(), c)};
      if (progress)
        *progress << "seed " << seed << ' ' << v.name << ": acc " << row.report.probe.mean << " nmi "
                  << row.report.clustering.nmi << '\n';
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

inline nlohmann::json to_json(const AblationResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    auto j = to_json(row.report);
    j["variant"] = row.variant;
    j["seed"] = row.seed;
    rows.push_back(j);
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& v : kAblationVariants) {
    summary.push_back({{"variant", v.name},
                       {"topology", to_string(v.topology)},
                       {"filtering", v.filtering},
                       {"accuracy_mean", r.mean_accuracy(v.name)},
                       {"nmi_mean", r.mean_nmi(v.name)}});
  }
  return {{"rows", rows}, {"summary", summary}};
}

inline std::string to_markdown(const AblationResult& r) {
  std::ostringstream md;
  md << "| Variant | T-1 | T-2 | P | Accuracy | NMI | Homogeneity |";
  std::vector<std::size_t> ns;
  if (!r.rows.empty())
    for (const auto& [n, _] : r.rows.front().report.sim_at) ns.push_back(n);
  for (auto n : ns) md << " Sim@" << n << " |";
  md << "\n|---|:-:|:-:|:-:|---|---|---|";
  for (std::size_t i = 0; i < ns.size(); ++i) md << "---|";
  md << '\n' << std::fixed << std::setprecision(4);
  for (const auto& v : kAblationVariants) {
    const auto rows = r.of(v.name);
    if (rows.empty()) continue;
    double hom = 0.0;
    std::map<std::size_t, double> sim;
    for (auto* row : rows) {
      hom += row->report.clustering.homogeneity;
      for (const auto& [n, s] : row->report.sim_at) sim[n] += s;
    }
    const double cnt = static_cast<double>(rows.size());
    md << "| " << v.name << " | " << (v.topology == TopologyKind::Feature ? "x" : "") << " | "
       << (v.topology == TopologyKind::Spectral ? "x" : "") << " | " << (v.filtering ? "x" : "") << " | "
       << r.mean_accuracy(v.name) << " | " << r.mean_nmi(v.name) << " | " << hom / cnt << " |";
    for (auto n : ns) md << ' ' << sim[n] / cnt << " |";
    md << '\n';
  }
  return md.str();
}

inline AblationResult cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const Graph g = load_dataset(cfg, true);
  const std::vector<std::uint64_t> seeds = cfg.ablate_seeds.empty() ? std::vector{*cfg.seed} : cfg.ablate_seeds;
  AblationResult r = run_ablation(g, cfg, seeds, cfg.resolved_cache_dir(), &out);
  const auto dir = cfg.output / "ablate";
  write_json(dir / "ablation.json", to_json(r));
  {
    auto md = detail::open_out(dir / "ablation.md", false);
    md << to_markdown(r);
  }
  write_manifest(dir, cfg, "ablate");
  out << to_markdown(r);
  return r;
}

}  // namespace graphtp
