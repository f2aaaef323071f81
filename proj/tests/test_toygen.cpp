#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "common/fixtures.hpp"
#include "khopfair/metrics.hpp"
#include "khopfair/toygen.hpp"

using namespace khopfair;

TEST_CASE("gen_star structure") {
  auto g = gen_star(12, 2, 3);
  REQUIRE(g.n == 13);
  REQUIRE(g.m() == 12);
  REQUIRE(g.degree(0) == 12);
  REQUIRE(g.group_sizes() == std::vector<int>{9, 4});  // hub plus 8 blue peripherals

  REQUIRE_THROWS_AS(gen_star(4, 1, 3), io_error);   // 4/3 peripherals is not integral
  REQUIRE_THROWS_AS(gen_star(4, 0, 3), io_error);
  REQUIRE_THROWS_AS(gen_star(4, 3, 3), io_error);
}

TEST_CASE("two-bridge families have 4n+2 nodes, 4n+1 edges, balanced groups") {
  for (char v : {'a', 'b', 'c'}) {
    for (int n : {3, 5, 8}) {
      auto g = gen_toy(v, n);
      REQUIRE(g.n == 4 * n + 2);
      REQUIRE(g.m() == 4 * n + 1);
      REQUIRE(g.group_sizes() == std::vector<int>{2 * n + 1, 2 * n + 1});
      REQUIRE(validate(g).connected);
    }
  }
  REQUIRE_THROWS_AS(gen_toy('x', 5), io_error);
  REQUIRE_THROWS_AS(gen_toy('a', 2), io_error);
}

TEST_CASE("generators are deterministic") {
  REQUIRE(gen_toy('b', 6).edges == gen_toy('b', 6).edges);
  REQUIRE(gen_star(10, 1, 2).edges == gen_star(10, 1, 2).edges);
  auto a = gen_sbm({5, 5}, {{0.5, 0.1}, {0.1, 0.5}}, {0, 1}, 42);
  auto b = gen_sbm({5, 5}, {{0.5, 0.1}, {0.1, 0.5}}, {0, 1}, 42);
  REQUIRE(a.edges == b.edges);
  auto c = gen_sbm({5, 5}, {{0.5, 0.1}, {0.1, 0.5}}, {0, 1}, 43);
  REQUIRE(a.edges != c.edges);
}

TEST_CASE("measured bias matches the closed forms on small instances") {
  SECTION("star") {
    auto g = gen_star(12, 2, 3);
    auto o = star_oracle(12, 2, 3);
    REQUIRE(o.nb.at(1).num == 1);
    REQUIRE(o.nb.at(1).den == 27);
    REQUIRE(std::abs(nb(g, 1) - o.nb.at(1).value()) <= 1e-12);
    REQUIRE(std::abs(assortativity(g) - o.assortativity->value()) <= 1e-12);
  }
  SECTION("families a, b, c at n = 5") {
    for (char v : {'a', 'b', 'c'}) {
      auto g = gen_toy(v, 5);
      auto o = toy_oracle(v, 5);
      for (const auto& [k, expect] : o.nb) {
        REQUIRE(std::abs(nb(g, k) - expect.value()) <= 1e-12);
      }
      REQUIRE(std::abs(assortativity(g) - o.assortativity->value()) <= 1e-12);
    }
  }
  SECTION("spot values") {
    auto oa = toy_oracle('a', 5);
    REQUIRE(oa.nb.at(1).str() == "1/121");
    REQUIRE(oa.nb.at(2).str() == "1/11");
    REQUIRE(oa.nb.at(3).value() == 0.0);
    auto ob = toy_oracle('b', 5);
    REQUIRE(ob.nb.at(1).num == 26);
    REQUIRE(ob.nb.at(1).den == 66);
    auto oc = toy_oracle('c', 5);
    REQUIRE(oc.nb.at(3).str() == "3/11");
  }
}

TEST_CASE("sbm respects block probabilities at the extremes") {
  auto bip = gen_sbm({4, 4}, {{0.0, 1.0}, {1.0, 0.0}}, {0, 1}, 7);
  REQUIRE(bip.m() == 16);
  for (auto [i, j] : bip.edges) REQUIRE(bip.groups[i] != bip.groups[j]);

  auto cliques = gen_sbm({3, 3}, {{1.0, 0.0}, {0.0, 1.0}}, {0, 1}, 7);
  REQUIRE(cliques.m() == 6);
  for (auto [i, j] : cliques.edges) REQUIRE(cliques.groups[i] == cliques.groups[j]);
}

TEST_CASE("sbm validates its inputs") {
  REQUIRE_THROWS_AS(gen_sbm({}, {}, {}, 1), io_error);
  REQUIRE_THROWS_AS(gen_sbm({3, 3}, {{0.5, 0.1}}, {0, 1}, 1), io_error);
  REQUIRE_THROWS_AS(gen_sbm({3, 3}, {{0.5, 0.2}, {0.1, 0.5}}, {0, 1}, 1), io_error);
  REQUIRE_THROWS_AS(gen_sbm({3, 3}, {{0.5, 1.5}, {1.5, 0.5}}, {0, 1}, 1), io_error);
  REQUIRE_THROWS_AS(gen_sbm({3, 0}, {{0.5, 0.1}, {0.1, 0.5}}, {0, 1}, 1), io_error);
}
