#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "mvscreen/error.hpp"
#include "mvscreen/view_select.hpp"
#include "../support/naive_select.hpp"

using namespace mvscreen;
using namespace mvscreen::graph;
using namespace mvscreen::select;

namespace {

// Nodes "1".."n" at timestamps 10, 20, ...; edges given 1-based.
SimilarityGraph numbered(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    nodes.push_back({std::to_string(i + 1), "p01", static_cast<std::int64_t>(10 * (i + 1))});
  }
  std::vector<Edge> e;
  for (auto [a, b] : edges) e.push_back({static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1), 0.5});
  return SimilarityGraph(std::move(nodes), std::move(e));
}

std::vector<std::vector<std::string>> ids_of(const SimilarityGraph& g, const std::vector<Candidate>& cs) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : cs) {
    std::vector<std::string> ids;
    for (auto m : c.members) ids.push_back(g.nodes()[m].frame_id);
    out.push_back(ids);
  }
  return out;
}

std::vector<std::vector<std::string>> ids_of(const std::vector<MultiViewGroup>& groups) {
  std::vector<std::vector<std::string>> out;
  for (const auto& g : groups) out.push_back(g.frame_ids);
  return out;
}

using Ids = std::vector<std::vector<std::string>>;

}  // namespace

TEST_CASE("enumerate: path of four") {
  const auto g = numbered(4, {{1, 2}, {2, 3}, {3, 4}});
  const auto cs = enumerate_k_subgraphs(g, 3);
  CHECK(ids_of(g, cs) == Ids{{"1", "2", "3"}, {"2", "3", "4"}});
  CHECK(cs[0].degree_sum == 5);
  CHECK(cs[1].degree_sum == 5);
}

TEST_CASE("enumerate: triangle and empty graph") {
  const auto tri = numbered(3, {{1, 2}, {2, 3}, {1, 3}});
  CHECK(ids_of(tri, enumerate_k_subgraphs(tri, 3)) == Ids{{"1", "2", "3"}});
  const auto empty = numbered(5, {});
  for (std::size_t k : {2u, 3u, 4u}) CHECK(enumerate_k_subgraphs(empty, k).empty());
  CHECK(enumerate_k_subgraphs(SimilarityGraph{}, 3).empty());
}

TEST_CASE("enumerate: star counts every connected triple exactly once") {
  // Centre 1 with leaves 2..5: C(4,2) = 6 triples, all through the centre.
  const auto star = numbered(5, {{1, 2}, {1, 3}, {1, 4}, {1, 5}});
  const auto cs = enumerate_k_subgraphs(star, 3);
  CHECK(cs.size() == 6);
  std::set<std::vector<std::string>> unique;
  for (const auto& ids : ids_of(star, cs)) unique.insert(ids);
  CHECK(unique.size() == 6);
}

TEST_CASE("k below two is rejected") {
  const auto g = numbered(2, {{1, 2}});
  CHECK_THROWS_AS(enumerate_k_subgraphs(g, 1), Error);
  CHECK_THROWS_AS(select_views(g, {1}), Error);
}

TEST_CASE("select: path of six picks both ends") {
  const auto g = numbered(6, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}});
  const auto groups = select_views(g, {3});
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].frame_ids == std::vector<std::string>{"1", "2", "3"});
  CHECK(groups[1].frame_ids == std::vector<std::string>{"4", "5", "6"});
  CHECK(groups[0].degree_sum == 5);
  CHECK(groups[0].group_id == "p01-g001");
  CHECK(groups[1].group_id == "p01-g002");
}

TEST_CASE("select: triangle and empty graph") {
  const auto tri = numbered(3, {{1, 2}, {2, 3}, {1, 3}});
  CHECK(ids_of(select_views(tri, {3})) == Ids{{"1", "2", "3"}});
  CHECK(select_views(numbered(4, {}), {3}).empty());
}

TEST_CASE("select: lowest degree sum wins over earlier timestamp") {
  // Every triple through hub 2 has degree sum 6; the later path 6-7-8 has 4.
  const auto g = numbered(8, {{1, 2}, {2, 3}, {2, 4}, {2, 5}, {6, 7}, {7, 8}});
  const auto groups = select_views(g, {3});
  REQUIRE_FALSE(groups.empty());
  CHECK(groups[0].frame_ids == std::vector<std::string>{"6", "7", "8"});
}

TEST_CASE("group ids are numbered per participant") {
  std::vector<GraphNode> nodes = {{"a1", "p01", 0}, {"a2", "p01", 10}, {"b1", "p02", 0}, {"b2", "p02", 10}};
  const SimilarityGraph g(nodes, {{0, 1, 0.5}, {2, 3, 0.5}});
  const auto groups = select_views(g, {2});
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].group_id == "p01-g001");
  CHECK(groups[1].group_id == "p02-g001");
  CHECK(make_group_id("p07", 12) == "p07-g012");
  CHECK(make_group_id("p07", 1234) == "p07-g1234");
}

TEST_CASE("members are ordered by timestamp, not node index") {
  std::vector<GraphNode> nodes = {{"late", "p", 30}, {"early", "p", 10}, {"mid", "p", 20}};
  const SimilarityGraph g(nodes, {{0, 1, 0.5}, {1, 2, 0.5}});
  const auto groups = select_views(g, {3});
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].frame_ids == std::vector<std::string>{"early", "mid", "late"});
}

TEST_CASE("property: oracle equivalence, disjointness and maximality on random graphs") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const std::size_t k = 2 + trial % 3;
    std::vector<GraphNode> nodes;
    std::vector<testing::NaiveNode> naive_nodes;
    std::int64_t ts = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ts += static_cast<std::int64_t>(rng() % 3) * 10;  // repeated timestamps on purpose
      const auto id = "n" + std::to_string(rng() % 1000) + "_" + std::to_string(i);
      nodes.push_back({id, "p", ts});
      naive_nodes.push_back({id, ts});
    }
    std::vector<Edge> edges;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (coin(rng) < 0.3) {
          edges.push_back({i, j, 0.5});
          adj[i][j] = adj[j][i] = true;
        }
      }
    }
    const SimilarityGraph g(nodes, edges);
    const testing::NaiveSelector naive(naive_nodes, adj);

    const auto cs = enumerate_k_subgraphs(g, k);
    const auto naive_cs = naive.candidates(k);
    REQUIRE(cs.size() == naive_cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
      REQUIRE(ids_of(g, {cs[i]})[0] == naive_cs[i].ids);
      REQUIRE(cs[i].degree_sum == naive_cs[i].degree_sum);
    }

    const auto groups = select_views(g, {k});
    const auto expected = naive.select(k);
    REQUIRE(groups.size() == expected.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
      REQUIRE(groups[i].frame_ids == expected[i].ids);
      REQUIRE(groups[i].degree_sum == expected[i].degree_sum);
    }
    CHECK_NOTHROW(check_disjoint(groups));

    // Maximality: the graph minus selected nodes has no connected k-subgraph.
    std::set<std::string> used;
    for (const auto& grp : groups) used.insert(grp.frame_ids.begin(), grp.frame_ids.end());
    std::vector<GraphNode> rest_nodes;
    std::vector<std::size_t> remap(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
      if (!used.contains(nodes[i].frame_id)) {
        remap[i] = rest_nodes.size();
        rest_nodes.push_back(nodes[i]);
      }
    }
    std::vector<Edge> rest_edges;
    for (const auto& e : g.edges()) {
      if (remap[e.i] != SIZE_MAX && remap[e.j] != SIZE_MAX) rest_edges.push_back({remap[e.i], remap[e.j], e.weight});
    }
    CHECK(enumerate_k_subgraphs(SimilarityGraph(rest_nodes, rest_edges), k).empty());

    for (unsigned threads : {2u, 5u}) REQUIRE(select_views(g, {k}, threads) == groups);
  }
}

TEST_CASE("groups export round-trips") {
  const std::vector<MultiViewGroup> groups = {{"p01-g001", "p01", {"a", "b", "c"}, 6},
                                              {"sub-group-p2-g001", "sub-group-p2", {"d", "e", "f"}, 7}};
  std::stringstream buf;
  write_groups(buf, groups);
  CHECK(buf.str().substr(0, buf.str().find('\n')) ==
        R"({"group_id":"p01-g001","frame_ids":["a","b","c"],"degree_sum":6})");
  CHECK(read_groups(buf) == groups);
}

TEST_CASE("read_groups rejects overlapping groups") {
  std::istringstream in(R"({"group_id":"p-g001","frame_ids":["a","b"],"degree_sum":2})"
                        "\n"
                        R"({"group_id":"p-g002","frame_ids":["b","c"],"degree_sum":2})");
  CHECK_THROWS_AS(read_groups(in), Error);
}
