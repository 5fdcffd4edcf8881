#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "boxchain/fixture.hpp"
#include "boxchain/poset.hpp"
#include "test_support.hpp"

using namespace boxchain;
namespace ts = testsupport;

namespace {
std::vector<ElementId> iota_ids(std::uint64_t n) {
  std::vector<ElementId> v;
  for (std::uint64_t i = 1; i <= n; ++i) v.push_back(i);
  return v;
}
}  // namespace

TEST_CASE("a five-element chain has full height and unit width") {
  EdgeList edges{{2, 1}, {3, 2}, {4, 3}, {5, 4}};
  Poset p(iota_ids(5), edges);
  CHECK(p.height() == 5);
  CHECK(p.width().value == 1);
  CHECK(p.width().exact);
  for (std::uint64_t e = 1; e <= 5; ++e) CHECK(p.rank(e) == e - 1);
  CHECK(p.comparable(1, 5));
  CHECK(p.comparable(5, 1));
  CHECK(p.comparable(3, 3));
  CHECK(p.reverse_rank(1) == 1);  // the single maximal element covers everything
  CHECK(p.minimal_elements() == std::vector<ElementId>{1});
  CHECK(p.maximal_elements() == std::vector<ElementId>{5});
}

TEST_CASE("a bare antichain separates reverse rank from width") {
  Poset p(iota_ids(6), {});
  CHECK(p.height() == 1);
  CHECK(p.width().value == 6);
  CHECK(p.width().exact);
  // Every element is maximal and reaches only itself: reverse rank is 1
  // everywhere, strictly below the width. The two notions agree only on
  // orders whose maximal elements see every chain.
  for (std::uint64_t e = 1; e <= 6; ++e) {
    CHECK(p.reverse_rank(e) == 1);
    CHECK(p.rank(e) == 0);
    CHECK_FALSE(p.comparable(e, e % 6 + 1));
  }
}

TEST_CASE("diamond poset ranks and decomposition") {
  // 1 below 2 and 3, both below 4.
  EdgeList edges{{2, 1}, {3, 1}, {4, 2}, {4, 3}};
  Poset p(iota_ids(4), edges);
  CHECK(p.height() == 3);
  CHECK(p.width().value == 2);
  CHECK(p.rank(4) == 2);
  CHECK(p.reverse_rank(1) == 1);
  CHECK_FALSE(p.comparable(2, 3));
  const auto d = p.mirsky_decompose();
  REQUIRE(d.layers.size() == 3);
  CHECK(d.layers[0] == std::vector<ElementId>{1});
  CHECK(d.layers[1] == std::vector<ElementId>{2, 3});
  CHECK(d.layers[2] == std::vector<ElementId>{4});
}

TEST_CASE("the reference ledger poset reproduces every hand-checked fact") {
  const Poset p(fixture_elements(), fixture_edge_list());
  CHECK(p.rank(9) == 3);
  CHECK(p.reverse_rank(1) == 4);
  CHECK(p.height() == 7);
  CHECK(p.width().value == 4);
  CHECK(p.width().exact);
  const auto d = p.mirsky_decompose();
  REQUIRE(d.layers.size() == 7);
  CHECK(d.layers[0] == std::vector<ElementId>{1});
  CHECK(d.layers[1] == std::vector<ElementId>{2, 3, 4});
  std::size_t total = 0;
  for (const auto& layer : d.layers) total += layer.size();
  CHECK(total == 20);
}

TEST_CASE("redundant approval edges of the reference ledger") {
  const auto redundant = redundant_edges(fixture_elements(), fixture_edge_list());
  CHECK(redundant == EdgeList{{9, 2}, {17, 11}});
  // (8,4) and (20,14) reach far back but are not redundant: no sibling
  // parent already covers them.
  for (const auto& e : redundant) {
    CHECK(e != std::pair<ElementId, ElementId>{8, 4});
    CHECK(e != std::pair<ElementId, ElementId>{20, 14});
  }
}

TEST_CASE("mirsky layers equal longest-chain depths on random posets") {
  RngStream rng(1234, "poset-mirsky");
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.uniform_int(11);  // up to 12 elements
    const double prob = 0.05 + 0.4 * rng.uniform01();
    const auto [elems, edges] = ts::random_dag(rng, n, prob);
    const Poset p(elems, edges);
    const auto depth = ts::chain_depths(elems, edges);
    const auto d = p.mirsky_decompose();
    std::size_t max_depth = 0;
    for (const auto& [e, dep] : depth) {
      CHECK(p.rank(e) == dep);
      REQUIRE(dep < d.layers.size());
      CHECK(std::binary_search(d.layers[dep].begin(), d.layers[dep].end(), e));
      max_depth = std::max(max_depth, dep);
    }
    CHECK(p.height() == max_depth + 1);
    CHECK(d.layers.size() == p.height());
    // Each layer is an antichain under the full reachability relation.
    const auto reach = ts::reachability(elems, edges);
    for (const auto& layer : d.layers)
      for (std::size_t i = 0; i < layer.size(); ++i)
        for (std::size_t j = i + 1; j < layer.size(); ++j) {
          CHECK_FALSE(reach.count({layer[i], layer[j]}));
          CHECK_FALSE(reach.count({layer[j], layer[i]}));
        }
  }
}

TEST_CASE("exact width matches brute-force maximum antichain") {
  RngStream rng(99, "poset-width");
  for (int rep = 0; rep < 120; ++rep) {
    const std::size_t n = 2 + rng.uniform_int(13);  // up to 14 elements
    const double prob = 0.05 + 0.45 * rng.uniform01();
    const auto [elems, edges] = ts::random_dag(rng, n, prob);
    const Poset p(elems, edges);
    const auto w = p.width();
    CHECK(w.exact);
    CHECK(w.value == ts::max_antichain_bruteforce(elems, edges));
  }
}

TEST_CASE("wide posets fall back to the largest-layer estimate") {
  // 25 incomparable elements: beyond the exact-search limit.
  Poset p(iota_ids(25), {});
  const auto w = p.width();
  CHECK_FALSE(w.exact);
  CHECK(w.value == 25);  // the single Mirsky layer is the whole antichain
}

TEST_CASE("maximal reverse rank never exceeds the width") {
  RngStream rng(555, "poset-revrank");
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t n = 2 + rng.uniform_int(11);
    const auto [elems, edges] = ts::random_dag(rng, n, 0.25);
    const Poset p(elems, edges);
    std::size_t max_rr = 0;
    for (ElementId e : elems) max_rr = std::max(max_rr, p.reverse_rank(e));
    // The maximal elements containing e in their closures form an
    // antichain, so no reverse rank can beat the exact width.
    CHECK(max_rr <= p.width().value);
  }
}

TEST_CASE("redundant edges agree with an independent reachability oracle") {
  RngStream rng(777, "poset-redundant");
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t n = 3 + rng.uniform_int(10);
    const auto [elems, edges] = ts::random_dag(rng, n, 0.3);
    const auto got = redundant_edges(elems, edges);
    const auto reach = ts::reachability(elems, edges);
    std::map<ElementId, std::vector<ElementId>> parents;
    std::set<ts::Edge> dedup;
    for (const auto& e : edges)
      if (dedup.insert(e).second) parents[e.first].push_back(e.second);
    EdgeList expect;
    for (const auto& [child, plist] : parents)
      for (ElementId p : plist) {
        bool covered = false;
        for (ElementId q : plist)
          if (q != p && reach.count({q, p})) covered = true;
        if (covered) expect.emplace_back(child, p);
      }
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
  }
}

TEST_CASE("cycles and malformed inputs are rejected") {
  CHECK_THROWS_WITH(Poset({1, 2}, {{1, 2}, {2, 1}}),
                    Catch::Matchers::ContainsSubstring("not acyclic"));
  CHECK_THROWS_AS(Poset({1}, {{1, 1}}), std::invalid_argument);        // self cover
  CHECK_THROWS_AS(Poset({1, 2}, {{1, 3}}), std::invalid_argument);     // unknown element
  CHECK_THROWS_AS(Poset({1, 2, 3}, {{1, 2}, {2, 3}, {3, 1}}), std::invalid_argument);
}

TEST_CASE("edge list parsing reports line numbers") {
  {
    std::istringstream in("edge 2 1\n# comment\nedge 3 1\n");
    const auto g = parse_edge_list(in);
    CHECK(g.elements == std::vector<ElementId>{1, 2, 3});
    CHECK(g.edges == EdgeList{{2, 1}, {3, 1}});
  }
  {
    std::istringstream in("edge 2 1\nnode 5\n");
    CHECK_THROWS_WITH(parse_edge_list(in), Catch::Matchers::ContainsSubstring("line 2"));
  }
  {
    std::istringstream in("edge 2\n");
    CHECK_THROWS_WITH(parse_edge_list(in), Catch::Matchers::ContainsSubstring("line 1"));
  }
  {
    std::istringstream in("edge 2 1 7\n");
    CHECK_THROWS_AS(parse_edge_list(in), std::invalid_argument);
  }
}

TEST_CASE("layer formatting is stable") {
  EdgeList edges{{2, 1}, {3, 1}};
  Poset p(iota_ids(3), edges);
  std::ostringstream out;
  format_layers(p.mirsky_decompose(), out);
  CHECK(out.str() == "layer 0: 1\nlayer 1: 2 3\n");
}
