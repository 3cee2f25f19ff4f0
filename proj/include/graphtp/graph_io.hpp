#pragma once

#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "graphtp/error.hpp"
#include "graphtp/graph.hpp"
#include "graphtp/matrix_io.hpp"

namespace graphtp {

namespace detail {

inline long long parse_int(std::string_view tok, const std::string& where) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw MalformedInput(where + ": expected integer, got '" + std::string(tok) + "'");
  return v;
}

}  // namespace detail

/// Whitespace separated "u v" pairs, 0-indexed, '#' comment lines allowed.
inline std::vector<WeightedEdge> read_edge_list(const std::filesystem::path& p, std::size_t num_nodes) {
  auto in = detail::open_in(p, false);
  std::vector<WeightedEdge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::string where = p.string() + ":" + std::to_string(lineno);
    const auto sep = body.find_first_of(" \t,");
    if (sep == std::string_view::npos) throw MalformedInput(where + ": expected 'u v'");
    const auto a = detail::parse_int(detail::trim(body.substr(0, sep)), where);
    const auto b = detail::parse_int(detail::trim(body.substr(sep + 1)), where);
    if (a < 0 || b < 0) throw MalformedInput(where + ": negative node index");
    if (static_cast<std::size_t>(a) >= num_nodes || static_cast<std::size_t>(b) >= num_nodes)
      throw IndexOutOfRange(where + ": node index " + std::to_string(std::max(a, b)) +
                            " >= N = " + std::to_string(num_nodes));
    edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b), 1.0});
  }
  return edges;
}

inline std::vector<int> read_labels(const std::filesystem::path& p) {
  auto in = detail::open_in(p, false);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(line);
    if (body.empty()) continue;
    labels.push_back(static_cast<int>(detail::parse_int(body, p.string() + ":" + std::to_string(lineno))));
  }
  return labels;
}

inline void write_labels(const std::filesystem::path& p, const std::vector<int>& labels) {
  auto out = detail::open_out(p, false);
  for (int l : labels) out << l << '\n';
}

inline void write_edge_list(const std::filesystem::path& p, const Graph& g) {
  auto out = detail::open_out(p, false);
  for (const auto& e : g.edge_list()) out << e.u << ' ' << e.v << '\n';
}

struct GraphLoadReport {
  Graph graph;
  EdgeBuildStats stats;
};

/// N is the feature row count; the edge file may not reference nodes >= N.
inline GraphLoadReport load_graph_report(const std::filesystem::path& edge_path,
                                         const std::filesystem::path& feature_path,
                                         const std::optional<std::filesystem::path>& label_path = {}) {
  DenseMatrix x = read_features(feature_path);
  if (x.rows() == 0) throw MalformedInput(feature_path.string() + ": no feature rows");
  if (!x.all_finite()) throw MalformedInput(feature_path.string() + ": non-finite feature value");
  const std::size_t n = x.rows();
  auto edges = read_edge_list(edge_path, n);
  std::optional<std::vector<int>> labels;
  if (label_path) {
    labels = read_labels(*label_path);
    if (labels->size() != n)
      throw MalformedInput(label_path->string() + ": " + std::to_string(labels->size()) +
                           " labels for " + std::to_string(n) + " nodes");
  }
  GraphLoadReport r;
  r.graph = Graph::from_edges(n, edges, std::move(x), std::move(labels), false, &r.stats);
  return r;
}

inline Graph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                        const std::optional<std::filesystem::path>& label_path = {}) {
  auto r = load_graph_report(edge_path, feature_path, label_path);
  if (r.stats.self_loops_dropped > 0)
    std::cerr << "warning: dropped " << r.stats.self_loops_dropped << " self-loop(s) from "
              << edge_path.string() << '\n';
  return std::move(r.graph);
}

inline void save_graph(const Graph& g, const std::filesystem::path& edge_path,
                       const std::filesystem::path& feature_path,
                       const std::optional<std::filesystem::path>& label_path = {}) {
  write_edge_list(edge_path, g);
  write_features(feature_path, g.features());
  if (label_path && g.labels()) write_labels(*label_path, *g.labels());
}

}  // namespace graphtp
