#pragma once

// On-disk artifacts: encoder checkpoints, the topology-view cache and the
// JSON-lines training log. Matrices use the TGM1 binary format; each
// artifact has a JSON sidecar.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "graphtp/encoder.hpp"
#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/matrix_io.hpp"
#include "graphtp/trainer.hpp"
#include "json.hpp"

namespace graphtp {

namespace fs = std::filesystem;

inline nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MalformedInput("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput(p.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& p, const nlohmann::json& j) {
  auto out = detail::open_out(p, false);
  out << j.dump(2) << '\n';
}

/// Writes W1, W2, Adam moments and checkpoint.json into `dir`.
inline void save_checkpoint(const fs::path& dir, const TrainState& s, std::uint64_t seed) {
  fs::create_directories(dir);
  write_matrix(dir / "W1.tgm", s.params.w1);
  write_matrix(dir / "W2.tgm", s.params.w2);
  for (std::size_t g = 0; g < s.adam.m.size(); ++g) {
    write_matrix(dir / ("adam_m" + std::to_string(g) + ".tgm"), s.adam.m[g]);
    write_matrix(dir / ("adam_v" + std::to_string(g) + ".tgm"), s.adam.v[g]);
  }
  const auto& h = s.adam.hyper;
  write_json(dir / "checkpoint.json",
             {{"dims", {s.params.input_dim(), s.params.hidden_dim(), s.params.output_dim()}},
              {"activation", std::string(to_string(s.params.activation))},
              {"seed", seed},
              {"epoch", s.next_epoch},
              {"adam", {{"t", s.adam.t}, {"lr", h.lr}, {"beta1", h.beta1}, {"beta2", h.beta2}, {"eps", h.eps}}}});
}

struct Checkpoint {
  TrainState state;
  std::uint64_t seed = 0;
};

inline Checkpoint load_checkpoint(const fs::path& dir) {
  const auto meta = read_json(dir / "checkpoint.json");
  Checkpoint c;
  try {
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.state.next_epoch = meta.at("epoch").get<std::size_t>();
    c.state.params.activation = activation_from_string(meta.at("activation").get<std::string>());
    const auto& a = meta.at("adam");
    c.state.adam.t = a.at("t").get<std::uint64_t>();
    c.state.adam.hyper = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                          a.at("eps").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInput((dir / "checkpoint.json").string() + ": " + e.what());
  }
  c.state.params.w1 = read_matrix(dir / "W1.tgm");
  c.state.params.w2 = read_matrix(dir / "W2.tgm");
  for (std::size_t g = 0; g < 2; ++g) {
    c.state.adam.m.push_back(read_matrix(dir / ("adam_m" + std::to_string(g) + ".tgm")));
    c.state.adam.v.push_back(read_matrix(dir / ("adam_v" + std::to_string(g) + ".tgm")));
  }
  const auto dims = meta.at("dims");
  if (c.state.params.w1.rows() != dims.at(0).get<std::size_t>() ||
      c.state.params.w1.cols() != dims.at(1).get<std::size_t>() ||
      c.state.params.w2.rows() != dims.at(1).get<std::size_t>() ||
      c.state.params.w2.cols() != dims.at(2).get<std::size_t>())
    throw MalformedInput("checkpoint: weight shapes disagree with checkpoint.json dims");
  return c;
}

/// Topology-view cache key.
struct TopologyKey {
  std::string graph_hash;
  std::string scheme;  // "feature" or "spectral"
  std::size_t k = 1;
  double alpha = 0.0;  // 0 for the feature scheme

  nlohmann::json to_json() const {
    return {{"graph_hash", graph_hash}, {"scheme", scheme}, {"k", k}, {"alpha", alpha}};
  }
  std::string file_stem() const {
    std::string s = "topo_" + scheme + "_k" + std::to_string(k);
    if (scheme == "spectral") {
      std::ostringstream a;
      a << alpha;
      s += "_a" + a.str();
    }
    return s + "_" + graph_hash.substr(0, 16);
  }
};

/// Edge list of the topology view as an E x 2 matrix (u < v).
inline void save_topology_cache(const fs::path& dir, const TopologyKey& key, const Graph& g_topo) {
  const auto edges = g_topo.edge_list();
  DenseMatrix m(edges.size(), 2);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    m(e, 0) = edges[e].u;
    m(e, 1) = edges[e].v;
  }
  write_matrix(dir / (key.file_stem() + ".tgm"), m);
  write_json(dir / (key.file_stem() + ".json"), key.to_json());
}

/// The cached view for `key` built over `base`'s nodes, or nullopt on miss.
inline std::optional<Graph> load_topology_cache(const fs::path& dir, const TopologyKey& key, const Graph& base) {
  const auto bin = dir / (key.file_stem() + ".tgm");
  const auto side = dir / (key.file_stem() + ".json");
  if (!fs::exists(bin) || !fs::exists(side)) return std::nullopt;
  if (read_json(side) != key.to_json()) return std::nullopt;
  const DenseMatrix m = read_matrix(bin);
  if (m.cols() != 2) throw MalformedInput(bin.string() + ": expected an E x 2 edge matrix");
  std::vector<WeightedEdge> edges;
  for (std::size_t e = 0; e < m.rows(); ++e)
    edges.push_back({static_cast<NodeId>(m(e, 0)), static_cast<NodeId>(m(e, 1)), 1.0});
  return base.with_edges(edges, false);
}

inline nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j = {{"epoch", e.epoch},
                      {"loss", e.loss},
                      {"filtered_fraction", e.filtered_fraction},
                      {"kmeans_inertia", nullptr},
                      {"prototypes_built", e.kmeans_inertia.has_value()},
                      {"wall_ms", e.wall_ms}};
  if (e.kmeans_inertia) j["kmeans_inertia"] = *e.kmeans_inertia;
  return j;
}

}  // namespace graphtp
