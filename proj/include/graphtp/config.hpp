#pragma once

// Run configuration. The text format is line based:
//
//   # comment
//   [train]
//   epochs = 300
//
// Keys are addressed as "section.key". Values given later (for example from
// command-line flags) replace earlier ones.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/eval.hpp"
#include "graphtp/matrix_io.hpp"
#include "graphtp/stochastic_augment.hpp"
#include "graphtp/trainer.hpp"
#include "json.hpp"

namespace graphtp {

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(std::string_view text, const std::string& origin = "<config>") {
  ConfigMap out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw InvalidParameter(where + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InvalidParameter(where + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw InvalidParameter(where + ": empty key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    out[full] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline ConfigMap parse_config_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InvalidParameter("cannot open config " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), p.string());
}

/// Applies "section.key=value" overrides.
inline void apply_overrides(ConfigMap& m, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidParameter("override '" + s + "': expected section.key=value");
    m[std::string(detail::trim(std::string_view(s).substr(0, eq)))] =
        std::string(detail::trim(std::string_view(s).substr(eq + 1)));
  }
}

enum class TopologyKind { None, Feature, Spectral };

inline std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::None: return "none";
    case TopologyKind::Feature: return "feature";
    case TopologyKind::Spectral: return "spectral";
  }
  return "none";
}

struct RunConfig {
  std::filesystem::path edges, features, labels;
  TopologyKind scheme = TopologyKind::Spectral;
  std::size_t k = 1;
  double alpha = 180.0;
  std::filesystem::path cache_dir;  // empty means <output>/cache
  PerturbConfig perturb1{0.2, 0.3, 0.7};
  PerturbConfig perturb2{0.2, 0.3, 0.7};
  TrainConfig train;
  bool filtering = true;  // false trains every epoch with unfiltered negatives
  std::size_t checkpoint_every = 0;
  ProbeConfig probe;
  ClusteringConfig clustering;
  std::vector<std::size_t> sim_n{5, 10};
  std::vector<std::uint64_t> ablate_seeds;
  std::filesystem::path output = "out";
  std::optional<std::uint64_t> seed;

  std::filesystem::path resolved_cache_dir() const { return cache_dir.empty() ? output / "cache" : cache_dir; }

  /// Config after resolution, as flat key/value pairs.
  ConfigMap to_map() const;
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : to_map()) j[k] = v;
    return j;
  }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* b = v.data();
  const auto* e = v.data() + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) throw InvalidParameter("config " + key + ": cannot parse '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidParameter("config " + key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const std::size_t end = std::min(v.find(',', pos), v.size());
    const auto tok = std::string(trim(std::string_view(v).substr(pos, end - pos)));
    if (!tok.empty()) out.push_back(parse_number<T>(key, tok));
    pos = end + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace detail

/// Builds a RunConfig from resolved key/value pairs. Unknown keys are
/// rejected.
inline RunConfig config_from_map(const ConfigMap& m) {
  RunConfig c;
  using detail::parse_bool;
  using detail::parse_number;
  auto sz = [](const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v); };
  auto dbl = [](const std::string& k, const std::string& v) { return parse_number<double>(k, v); };

  for (const auto& [key, v] : m) {
    if (key == "data.edges") c.edges = v;
    else if (key == "data.features") c.features = v;
    else if (key == "data.labels") c.labels = v;
    else if (key == "topology.scheme") {
      if (v == "none") c.scheme = TopologyKind::None;
      else if (v == "feature") c.scheme = TopologyKind::Feature;
      else if (v == "spectral") c.scheme = TopologyKind::Spectral;
      else throw InvalidParameter("config topology.scheme: expected none|feature|spectral, got '" + v + "'");
    }
    else if (key == "topology.k") c.k = sz(key, v);
    else if (key == "topology.alpha") c.alpha = dbl(key, v);
    else if (key == "topology.cache_dir") c.cache_dir = v;
    else if (key == "perturb.p_f1") c.perturb1.p_f = dbl(key, v);
    else if (key == "perturb.p_e1") c.perturb1.p_e = dbl(key, v);
    else if (key == "perturb.p_f2") c.perturb2.p_f = dbl(key, v);
    else if (key == "perturb.p_e2") c.perturb2.p_e = dbl(key, v);
    else if (key == "perturb.p_tau") c.perturb1.p_tau = c.perturb2.p_tau = dbl(key, v);
    else if (key == "encoder.embed_dim") c.train.embed_dim = sz(key, v);
    else if (key == "encoder.hidden_dim") c.train.hidden_dim = sz(key, v);
    else if (key == "encoder.activation") {
      try {
        c.train.activation = activation_from_string(v);
      } catch (const Error&) {
        throw InvalidParameter("config encoder.activation: unknown activation '" + v + "'");
      }
    }
    else if (key == "train.tau") c.train.tau = dbl(key, v);
    else if (key == "train.epochs") c.train.epochs = sz(key, v);
    else if (key == "train.warmup") c.train.warmup = sz(key, v);
    else if (key == "train.prototypes") c.train.num_prototypes = sz(key, v);
    else if (key == "train.kmeans_iters") c.train.kmeans_iters = sz(key, v);
    else if (key == "train.epsilon") c.train.epsilon = dbl(key, v);
    else if (key == "train.lr") c.train.lr = dbl(key, v);
    else if (key == "train.intra_negatives") c.train.intra_view_negatives = parse_bool(key, v);
    else if (key == "train.filtering") c.filtering = parse_bool(key, v);
    else if (key == "train.checkpoint_every") c.checkpoint_every = sz(key, v);
    else if (key == "eval.reps") c.probe.reps = sz(key, v);
    else if (key == "eval.l2") c.probe.l2 = dbl(key, v);
    else if (key == "eval.train_frac") c.probe.train_frac = dbl(key, v);
    else if (key == "eval.val_frac") c.probe.val_frac = dbl(key, v);
    else if (key == "eval.probe_lr") c.probe.lr = dbl(key, v);
    else if (key == "eval.max_steps") c.probe.max_steps = sz(key, v);
    else if (key == "eval.cluster_reps") c.clustering.reps = sz(key, v);
    else if (key == "eval.cluster_k") c.clustering.k = sz(key, v);
    else if (key == "eval.nmi") {
      if (v == "geometric") c.clustering.normalization = NmiNormalization::Geometric;
      else if (v == "arithmetic") c.clustering.normalization = NmiNormalization::Arithmetic;
      else throw InvalidParameter("config eval.nmi: expected geometric|arithmetic");
    }
    else if (key == "eval.sim_n") c.sim_n = detail::parse_list<std::size_t>(key, v);
    else if (key == "ablate.seeds") c.ablate_seeds = detail::parse_list<std::uint64_t>(key, v);
    else if (key == "output.dir") c.output = v;
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else throw InvalidParameter("config: unknown key '" + key + "'");
  }
  if (c.seed) {
    c.train.seed = *c.seed;
    c.probe.seed = *c.seed;
    c.clustering.seed = *c.seed;
  }
  if (!c.filtering) c.train.warmup = c.train.epochs;
  return c;
}

inline ConfigMap RunConfig::to_map() const {
  using detail::format_double;
  ConfigMap m;
  m["data.edges"] = edges.string();
  m["data.features"] = features.string();
  m["data.labels"] = labels.string();
  m["topology.scheme"] = to_string(scheme);
  m["topology.k"] = std::to_string(k);
  m["topology.alpha"] = format_double(alpha);
  m["topology.cache_dir"] = resolved_cache_dir().string();
  m["perturb.p_f1"] = format_double(perturb1.p_f);
  m["perturb.p_e1"] = format_double(perturb1.p_e);
  m["perturb.p_f2"] = format_double(perturb2.p_f);
  m["perturb.p_e2"] = format_double(perturb2.p_e);
  m["perturb.p_tau"] = format_double(perturb1.p_tau);
  m["encoder.embed_dim"] = std::to_string(train.embed_dim);
  m["encoder.hidden_dim"] = std::to_string(train.resolved_hidden());
  m["encoder.activation"] = std::string(graphtp::to_string(train.activation));
  m["train.tau"] = format_double(train.tau);
  m["train.epochs"] = std::to_string(train.epochs);
  m["train.warmup"] = std::to_string(train.warmup);
  m["train.prototypes"] = std::to_string(train.num_prototypes);
  m["train.kmeans_iters"] = std::to_string(train.kmeans_iters);
  m["train.epsilon"] = format_double(train.epsilon);
  m["train.lr"] = format_double(train.lr);
  m["train.intra_negatives"] = train.intra_view_negatives ? "true" : "false";
  m["train.filtering"] = filtering ? "true" : "false";
  m["train.checkpoint_every"] = std::to_string(checkpoint_every);
  m["eval.reps"] = std::to_string(probe.reps);
  m["eval.l2"] = format_double(probe.l2);
  m["eval.train_frac"] = format_double(probe.train_frac);
  m["eval.val_frac"] = format_double(probe.val_frac);
  m["eval.probe_lr"] = format_double(probe.lr);
  m["eval.max_steps"] = std::to_string(probe.max_steps);
  m["eval.cluster_reps"] = std::to_string(clustering.reps);
  m["eval.cluster_k"] = std::to_string(clustering.k);
  m["eval.nmi"] = clustering.normalization == NmiNormalization::Geometric ? "geometric" : "arithmetic";
  m["eval.sim_n"] = detail::join(sim_n);
  m["ablate.seeds"] = detail::join(ablate_seeds);
  m["output.dir"] = output.string();
  m["seed"] = seed ? std::to_string(*seed) : "";
  return m;
}

/// Checks everything a run needs before any work starts. `need_labels`
/// is set by subcommands that evaluate.
inline void validate(const RunConfig& c, bool need_labels) {
  if (!c.seed) throw InvalidParameter("config: seed is required");
  auto need_file = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw InvalidParameter(std::string("config: ") + what + " path is required");
    if (!std::filesystem::is_regular_file(p))
      throw InvalidParameter(std::string("config: ") + what + " file not found: " + p.string());
  };
  need_file(c.edges, "data.edges");
  need_file(c.features, "data.features");
  if (need_labels || !c.labels.empty()) need_file(c.labels, "data.labels");
  if (c.scheme != TopologyKind::None && c.k < 1) throw InvalidParameter("config: topology.k must be >= 1");
  if (c.scheme == TopologyKind::Spectral && !(c.alpha > 0.0))
    throw InvalidParameter("config: topology.alpha must be > 0");
  c.perturb1.validate();
  c.perturb2.validate();
  c.train.validate();
  if (c.probe.reps == 0) throw InvalidParameter("config: eval.reps must be >= 1");
  if (!(c.probe.l2 >= 0.0)) throw InvalidParameter("config: eval.l2 must be >= 0");
}

}  // namespace graphtp
