#include "clarity/coherency_graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>

#include "clarity/errors.hpp"

namespace clarity {

CoherencyNetwork::CoherencyNetwork(std::vector<std::string> nodes, const std::vector<Edge>& edges)
    : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  adj_.assign(n * n, 0);
  out_.resize(n);
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) throw InvalidArgument("edge references a node outside the graph");
    if (from == to) throw InvalidArgument("self-loops are not allowed in a coherency network");
    auto& cell = adj_[from * n + to];
    if (cell) continue;
    cell = 1;
    ++edge_count_;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj_[i * n + j]) out_[i].push_back(static_cast<uint32_t>(j));
}

std::vector<CoherencyNetwork::Edge> CoherencyNetwork::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (auto j : out_[i]) out.emplace_back(i, j);
  return out;
}

CoherencyNetwork CoherencyNetwork::with_edge(std::size_t from, std::size_t to) const {
  auto e = edges();
  e.emplace_back(from, to);
  return CoherencyNetwork(nodes_, e);
}

bool CoherencyNetwork::strongly_connected() const {
  const std::size_t n = nodes_.size();
  if (n == 0) return false;
  const auto reaches_all = [&](bool forward) {
    std::vector<uint8_t> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto x = stack.back();
      stack.pop_back();
      for (std::size_t y = 0; y < n; ++y) {
        const bool arc = forward ? adj_[x * n + y] : adj_[y * n + x];
        if (arc && !seen[y]) {
          seen[y] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == n;
  };
  return reaches_all(true) && reaches_all(false);
}

CoherencyNetwork build_network(const EdgeMatrix& m) {
  const std::size_t n = m.size();
  if (m.adj.size() != n * n) throw InvalidArgument("edge matrix dimensions do not match its node list");
  std::vector<CoherencyNetwork::Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at(i, i)) throw InvalidArgument("edge matrix has a self-edge at " + m.passages[i]);
    for (std::size_t j = 0; j < n; ++j)
      if (m.at(i, j)) edges.emplace_back(i, j);
  }
  return CoherencyNetwork(m.passages, edges);
}

namespace {

// Node-split flow network: node w becomes in(w) = 2w and out(w) = 2w + 1 joined by a
// unit arc; graph edge a -> b becomes out(a) -> in(b), also unit capacity. With
// source out(u) and sink in(v), each unit of flow is one internally disjoint path,
// and the direct edge u -> v contributes exactly one.
class SplitFlowNetwork {
 public:
  explicit SplitFlowNetwork(const CoherencyNetwork& g) : vertices_(2 * g.node_count()), head_(vertices_) {
    for (std::size_t w = 0; w < g.node_count(); ++w) add_arc(2 * w, 2 * w + 1);
    for (const auto& [a, b] : g.edges()) add_arc(2 * a + 1, 2 * b);
    initial_.reserve(arcs_.size());
    for (const auto& arc : arcs_) initial_.push_back(arc.cap);
  }

  std::size_t max_flow(std::size_t source, std::size_t sink, std::size_t bound) {
    for (std::size_t i = 0; i < arcs_.size(); ++i) arcs_[i].cap = initial_[i];
    std::size_t flow = 0;
    while (flow < bound && build_levels(source, sink)) {
      std::fill(cursor_.begin(), cursor_.end(), 0);
      while (flow < bound && augment(source, sink)) ++flow;
    }
    return flow;
  }

 private:
  struct Arc {
    uint32_t to;
    uint32_t cap;
  };

  void add_arc(std::size_t from, std::size_t to) {
    head_[from].push_back(static_cast<uint32_t>(arcs_.size()));
    arcs_.push_back({static_cast<uint32_t>(to), 1});
    head_[to].push_back(static_cast<uint32_t>(arcs_.size()));
    arcs_.push_back({static_cast<uint32_t>(from), 0});
  }

  bool build_levels(std::size_t source, std::size_t sink) {
    level_.assign(vertices_, -1);
    cursor_.assign(vertices_, 0);
    std::queue<std::size_t> q;
    level_[source] = 0;
    q.push(source);
    while (!q.empty()) {
      const auto x = q.front();
      q.pop();
      for (auto a : head_[x]) {
        const auto& arc = arcs_[a];
        if (arc.cap > 0 && level_[arc.to] < 0) {
          level_[arc.to] = level_[x] + 1;
          q.push(arc.to);
        }
      }
    }
    return level_[sink] >= 0;
  }

  // One unit-capacity augmenting path along the level graph, iteratively.
  bool augment(std::size_t source, std::size_t sink) {
    path_.clear();
    std::size_t x = source;
    while (x != sink) {
      bool advanced = false;
      auto& cur = cursor_[x];
      while (cur < head_[x].size()) {
        const auto a = head_[x][cur];
        const auto& arc = arcs_[a];
        if (arc.cap > 0 && level_[arc.to] == level_[x] + 1) {
          path_.push_back(a);
          x = arc.to;
          advanced = true;
          break;
        }
        ++cur;
      }
      if (advanced) continue;
      if (x == source) return false;
      level_[x] = -1;  // dead end
      const auto back = path_.back();
      path_.pop_back();
      x = arcs_[back ^ 1U].to;
      ++cursor_[x];
    }
    for (auto a : path_) {
      arcs_[a].cap -= 1;
      arcs_[a ^ 1U].cap += 1;
    }
    return true;
  }

  std::size_t vertices_;
  std::vector<std::vector<uint32_t>> head_;
  std::vector<Arc> arcs_;
  std::vector<uint32_t> initial_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
  std::vector<uint32_t> path_;
};

std::vector<std::size_t> in_degrees(const CoherencyNetwork& g) {
  std::vector<std::size_t> deg(g.node_count(), 0);
  for (std::size_t i = 0; i < g.node_count(); ++i)
    for (auto j : g.successors(i)) ++deg[j];
  return deg;
}

void require_scoreable(const CoherencyNetwork& g) {
  if (g.node_count() < 2)
    throw InvalidArgument("connectivity is undefined for graphs with fewer than 2 nodes (got " +
                          std::to_string(g.node_count()) + ")");
}

}  // namespace

std::size_t local_node_connectivity(const CoherencyNetwork& g, std::size_t u, std::size_t v) {
  if (u >= g.node_count() || v >= g.node_count()) throw InvalidArgument("node index out of range");
  if (u == v) throw InvalidArgument("local connectivity needs two distinct nodes");
  SplitFlowNetwork net(g);
  const auto bound = std::min(g.successors(u).size(), in_degrees(g)[v]);
  return net.max_flow(2 * u + 1, 2 * v, bound);
}

std::vector<std::size_t> all_pairs_local_connectivity(const CoherencyNetwork& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> kappa(n * n, 0);
  if (n < 2) return kappa;
  SplitFlowNetwork net(g);
  const auto indeg = in_degrees(g);
  for (std::size_t u = 0; u < n; ++u) {
    const auto outdeg = g.successors(u).size();
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      const auto bound = std::min(outdeg, indeg[v]);
      kappa[u * n + v] = bound == 0 ? 0 : net.max_flow(2 * u + 1, 2 * v, bound);
    }
  }
  return kappa;
}

std::size_t node_connectivity(const CoherencyNetwork& g) {
  require_scoreable(g);
  if (!g.strongly_connected()) return 0;
  const std::size_t n = g.node_count();
  SplitFlowNetwork net(g);
  const auto indeg = in_degrees(g);
  std::size_t best = n - 1;
  for (std::size_t u = 0; u < n && best > 1; ++u) {
    for (std::size_t v = 0; v < n && best > 1; ++v) {
      if (u == v) continue;
      const auto bound = std::min({g.successors(u).size(), indeg[v], best});
      best = std::min(best, net.max_flow(2 * u + 1, 2 * v, bound));
    }
  }
  return best;
}

double average_node_connectivity(const CoherencyNetwork& g) {
  require_scoreable(g);
  const auto kappa = all_pairs_local_connectivity(g);
  std::size_t total = 0;
  for (auto k : kappa) total += k;
  const double n = static_cast<double>(g.node_count());
  return static_cast<double>(total) / (n * (n - 1.0));
}

ConnectivityReport connectivity_report(const CoherencyNetwork& g, std::string query_id, bool keep_per_pair) {
  require_scoreable(g);
  const std::size_t n = g.node_count();
  const auto kappa = all_pairs_local_connectivity(g);

  ConnectivityReport report;
  report.query_id = std::move(query_id);
  report.n_nodes = n;
  report.n_edges = g.edge_count();
  std::size_t total = 0;
  std::size_t min_kappa = std::numeric_limits<std::size_t>::max();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v) continue;
      total += kappa[u * n + v];
      min_kappa = std::min(min_kappa, kappa[u * n + v]);
    }
  }
  report.nc = min_kappa;
  report.anc = static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(n - 1));
  if (keep_per_pair) {
    report.per_pair.emplace();
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        if (u != v) report.per_pair->emplace(std::make_pair(u, v), kappa[u * n + v]);
  }
  return report;
}

nlohmann::json to_json(const ConnectivityReport& report, const CoherencyNetwork& g) {
  nlohmann::json j = {
      {"query_id", report.query_id}, {"n_nodes", report.n_nodes}, {"n_edges", report.n_edges},
      {"nc", report.nc},             {"anc", report.anc},
  };
  if (report.per_pair) {
    auto& pairs = j["per_pair"] = nlohmann::json::array();
    for (const auto& [uv, k] : *report.per_pair)
      pairs.push_back({{"u", g.nodes().at(uv.first)}, {"v", g.nodes().at(uv.second)}, {"kappa", k}});
  }
  return j;
}

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string export_dot(const CoherencyNetwork& g, const std::map<std::string, std::string>& labels) {
  std::ostringstream out;
  out << "digraph coherency {\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto& id = g.nodes()[i];
    const auto it = labels.find(id);
    out << "  n" << i << " [label=" << dot_quote(it == labels.end() ? id : it->second) << "];\n";
  }
  for (const auto& [a, b] : g.edges()) out << "  n" << a << " -> n" << b << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace clarity
