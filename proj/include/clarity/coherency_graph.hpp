#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clarity/edge_oracle.hpp"
#include "json.hpp"

namespace clarity {

/// Directed graph over retrieved passages; an edge i -> j means passage j is a
/// predicted successor of passage i. Immutable once built.
class CoherencyNetwork {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  /// Throws InvalidArgument on out-of-range endpoints or self-loops. Duplicate edges collapse.
  CoherencyNetwork(std::vector<std::string> nodes, const std::vector<Edge>& edges);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  bool has_edge(std::size_t from, std::size_t to) const { return adj_[from * nodes_.size() + to] != 0; }
  const std::vector<uint32_t>& successors(std::size_t node) const { return out_[node]; }

  /// Edges in row-major (from, to) order.
  std::vector<Edge> edges() const;

  /// Copy with one more edge.
  CoherencyNetwork with_edge(std::size_t from, std::size_t to) const;

  bool strongly_connected() const;

 private:
  std::vector<std::string> nodes_;
  std::vector<uint8_t> adj_;
  std::vector<std::vector<uint32_t>> out_;
  std::size_t edge_count_ = 0;
};

CoherencyNetwork build_network(const EdgeMatrix& edges);

/// Maximum number of internally node-disjoint directed paths from u to v, via
/// unit-capacity max-flow on the node-split digraph. A direct edge u -> v counts as
/// one path. Throws InvalidArgument when u == v or either node is out of range.
std::size_t local_node_connectivity(const CoherencyNetwork& g, std::size_t u, std::size_t v);

/// Minimum local connectivity over all ordered pairs; 0 iff not strongly connected.
/// Throws InvalidArgument for graphs with fewer than 2 nodes.
std::size_t node_connectivity(const CoherencyNetwork& g);

/// Mean local connectivity over the n(n-1) ordered pairs.
/// Throws InvalidArgument for graphs with fewer than 2 nodes.
double average_node_connectivity(const CoherencyNetwork& g);

/// Local connectivity for every ordered pair, row-major n x n, diagonal 0.
std::vector<std::size_t> all_pairs_local_connectivity(const CoherencyNetwork& g);

struct ConnectivityReport {
  std::string query_id;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t nc = 0;
  double anc = 0.0;
  /// (u, v) node indices -> local connectivity, present when requested.
  std::optional<std::map<std::pair<std::size_t, std::size_t>, std::size_t>> per_pair;
};

/// NC and ANC from a single all-pairs pass.
ConnectivityReport connectivity_report(const CoherencyNetwork& g, std::string query_id,
                                       bool keep_per_pair = false);

nlohmann::json to_json(const ConnectivityReport& report, const CoherencyNetwork& g);

/// Graphviz digraph. Nodes are emitted as n0..n{k-1} in node order, labelled with
/// the passage id unless `labels` maps that id to something else.
std::string export_dot(const CoherencyNetwork& g, const std::map<std::string, std::string>& labels = {});

}  // namespace clarity
