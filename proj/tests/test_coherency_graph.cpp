#include <random>

#include "clarity/coherency_graph.hpp"
#include "clarity/errors.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace clarity;

namespace {

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

CoherencyNetwork from_oracle(const oracle::Digraph& g) {
  std::vector<CoherencyNetwork::Edge> edges;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (g.edge(i, j)) edges.emplace_back(i, j);
  return CoherencyNetwork(names(g.n), edges);
}

CoherencyNetwork complete(std::size_t n) {
  std::vector<CoherencyNetwork::Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) edges.emplace_back(i, j);
  return CoherencyNetwork(names(n), edges);
}

}  // namespace

TEST_CASE("network construction") {
  const CoherencyNetwork g(names(3), {{0, 1}, {1, 2}, {0, 1}});
  CHECK(g.edge_count() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 0));
  CHECK(g.edges() == std::vector<CoherencyNetwork::Edge>{{0, 1}, {1, 2}});
  CHECK_FALSE(g.strongly_connected());
  CHECK(g.with_edge(2, 0).strongly_connected());
  CHECK(g.edge_count() == 2);
  CHECK_THROWS_AS(CoherencyNetwork(names(2), {{0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(CoherencyNetwork(names(2), {{0, 2}}), InvalidArgument);
}

TEST_CASE("build_network follows the edge matrix") {
  EdgeMatrix m{{"x", "y", "z"}, {0, 1, 0, 0, 0, 1, 1, 0, 0}};
  const auto g = build_network(m);
  CHECK(g.nodes() == std::vector<std::string>{"x", "y", "z"});
  CHECK(g.edges() == std::vector<CoherencyNetwork::Edge>{{0, 1}, {1, 2}, {2, 0}});
}

TEST_CASE("local connectivity on small cases") {
  // 0 -> 1 directly and via 2 and via 3
  const CoherencyNetwork g(names(4), {{0, 1}, {0, 2}, {2, 1}, {0, 3}, {3, 1}});
  CHECK(local_node_connectivity(g, 0, 1) == 3);
  CHECK(local_node_connectivity(g, 1, 0) == 0);
  CHECK(local_node_connectivity(g, 0, 2) == 1);
  CHECK_THROWS_AS(local_node_connectivity(g, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(local_node_connectivity(g, 0, 9), InvalidArgument);

  // two paths share node 2, so they are not disjoint
  const CoherencyNetwork h(names(5), {{0, 2}, {2, 3}, {2, 4}, {3, 1}, {4, 1}});
  CHECK(local_node_connectivity(h, 0, 1) == 1);
}

TEST_CASE("analytic cases") {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto g = complete(n);
    CHECK(node_connectivity(g) == n - 1);
    CHECK(average_node_connectivity(g) == doctest::Approx(static_cast<double>(n - 1)));
  }
  const CoherencyNetwork edgeless(names(4), {});
  CHECK(node_connectivity(edgeless) == 0);
  CHECK(average_node_connectivity(edgeless) == 0.0);
  const CoherencyNetwork cycle(names(3), {{0, 1}, {1, 2}, {2, 0}});
  CHECK(node_connectivity(cycle) == 1);
  CHECK(average_node_connectivity(cycle) == 1.0);

  const CoherencyNetwork single(names(1), {});
  CHECK_THROWS_AS(node_connectivity(single), InvalidArgument);
  CHECK_THROWS_AS(average_node_connectivity(single), InvalidArgument);
}

TEST_CASE("matches the exhaustive oracle on random digraphs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const double density = 0.2 + 0.1 * (trial % 7);
    const auto og = oracle::random_digraph(n, density, rng);
    const auto g = from_oracle(og);
    const auto expect = oracle::connectivity(og);
    CHECK(node_connectivity(g) == expect.nc);
    CHECK(average_node_connectivity(g) == doctest::Approx(expect.anc).epsilon(1e-12));
    const auto all = all_pairs_local_connectivity(g);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        if (u != v) CHECK(all[u * n + v] == oracle::disjoint_paths(og, u, v));
  }
}

TEST_CASE("report and exports") {
  const CoherencyNetwork g({"a", "b", "c"}, {{0, 1}, {1, 2}, {2, 0}, {0, 2}});
  const auto r = connectivity_report(g, "q1", true);
  CHECK(r.query_id == "q1");
  CHECK(r.n_nodes == 3);
  CHECK(r.n_edges == 4);
  CHECK(r.nc == node_connectivity(g));
  CHECK(r.anc == doctest::Approx(average_node_connectivity(g)));
  REQUIRE(r.per_pair);
  CHECK(r.per_pair->at({0, 2}) == 2);
  CHECK_FALSE(connectivity_report(g, "q1").per_pair);

  const auto j = to_json(r, g);
  CHECK(j["nc"] == r.nc);
  CHECK(j.size() == 6);
  CHECK(j["per_pair"][0] == nlohmann::json{{"u", "a"}, {"v", "b"}, {"kappa", r.per_pair->at({0, 1})}});

  const auto dot = export_dot(g, {{"b", "passage \"B\""}});
  CHECK(dot.rfind("digraph coherency {", 0) == 0);
  CHECK(dot.find("n0 [label=\"a\"];") != std::string::npos);
  CHECK(dot.find("n1 [label=\"passage \\\"B\\\"\"];") != std::string::npos);
  CHECK(dot.find("n0 -> n2;") != std::string::npos);
  CHECK(dot.back() == '\n');
}
