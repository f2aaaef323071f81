#include <catch2/catch_amalgamated.hpp>

#include "common/fixtures.hpp"
#include "khopfair/khop.hpp"
#include "khopfair/toygen.hpp"

using namespace khopfair;

namespace {

void require_same_index(const KHopIndex& a, const KHopIndex& b) {
  REQUIRE(a.k == b.k);
  REQUIRE(a.n == b.n);
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.v_k == b.v_k);
  REQUIRE(a.pair_count == b.pair_count);
}

}  // namespace

TEST_CASE("khop_bfs on the 3-path") {
  auto g = fixtures::path3();
  auto idx = khop_bfs(g, 2);
  REQUIRE(idx[0].rows[0] == std::vector<int>{1});
  REQUIRE(idx[0].rows[1] == std::vector<int>{0, 2});
  REQUIRE(idx[1].rows[0] == std::vector<int>{2});
  REQUIRE(idx[1].rows[1].empty());
  REQUIRE(idx[1].rows[2] == std::vector<int>{0});
  REQUIRE(idx[1].v_k == std::vector<int>{0, 2});
  REQUIRE(idx[1].pair_count == 2);
}

TEST_CASE("star: the hub has no 2-hop neighbors, peripherals see each other") {
  auto g = gen_star(12, 1, 2);
  auto idx = khop_bfs(g, 3);
  REQUIRE(idx[0].rows[0].size() == 12);
  REQUIRE(idx[1].rows[0].empty());
  for (int v = 1; v <= 12; ++v) REQUIRE(idx[1].rows[v].size() == 11);
  REQUIRE(idx[1].pair_count == 132);
  REQUIRE(idx[2].pair_count == 0);
}

TEST_CASE("cycle of five: two nodes at distance two from everywhere") {
  auto g = fixtures::cycle(5);
  auto idx = khop_bfs(g, 2).back();
  for (int v = 0; v < 5; ++v) REQUIRE(idx.rows[v].size() == 2);
}

TEST_CASE("two-bridge family b: far-side leaves sit three hops from the bridge") {
  const int n = 5;
  auto g = gen_toy('b', n);
  auto idx = khop_bfs(g, 3).back();
  REQUIRE(idx.rows[0] == std::vector<int>{17, 18, 19, 20, 21});
}

TEST_CASE("power and recursive routes match bfs exactly") {
  for (uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto g = fixtures::random_connected_graph(60, 150, 2, seed);
    auto ref = khop_bfs(g, 5);
    auto rec = khop_recursive(g, 5);
    for (int k = 1; k <= 5; ++k) {
      require_same_index(ref[k - 1], rec[k - 1]);
      auto pw = khop_power(g, k);
      require_same_index(ref[k - 1], pw);
    }
  }
}

TEST_CASE("methods agree on disconnected graphs") {
  auto g = make_graph(7, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {5, 6}, {3, 6}}, {}, {0, 0, 1, 1, 0, 1, 0});
  auto ref = khop_bfs(g, 4);
  auto rec = khop_recursive(g, 4);
  for (int k = 1; k <= 4; ++k) {
    require_same_index(ref[k - 1], rec[k - 1]);
    require_same_index(ref[k - 1], khop_power(g, k));
  }
  // no pair crosses the component boundary at any hop
  for (int k = 1; k <= 4; ++k) {
    for (int v = 0; v < 3; ++v) {
      for (int t : ref[k - 1].rows[v]) REQUIRE(t < 3);
    }
  }
}

TEST_CASE("methods agree on directed graphs and rows follow out-edges") {
  auto g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {1, 4}}, {}, {0, 1, 0, 1, 0}, true);
  auto ref = khop_bfs(g, 4);
  REQUIRE(ref[0].rows[0] == std::vector<int>{1});
  REQUIRE(ref[1].rows[0] == std::vector<int>{2, 4});
  auto rec = khop_recursive(g, 4);
  for (int k = 1; k <= 4; ++k) {
    require_same_index(ref[k - 1], rec[k - 1]);
    require_same_index(ref[k - 1], khop_power(g, k));
  }
}

TEST_CASE("bfs result does not depend on the thread count") {
  auto g = fixtures::random_connected_graph(80, 200, 2, 9);
  auto one = khop_bfs(g, 4, 1);
  auto four = khop_bfs(g, 4, 4);
  for (int k = 1; k <= 4; ++k) require_same_index(one[k - 1], four[k - 1]);
}

TEST_CASE("levels beyond the diameter come back empty") {
  auto g = fixtures::path3();
  auto rec = khop_recursive(g, 5);
  auto ref = khop_bfs(g, 5);
  for (int k = 3; k <= 5; ++k) {
    REQUIRE(rec[k - 1].pair_count == 0);
    REQUIRE(ref[k - 1].pair_count == 0);
  }
}

TEST_CASE("meaningful_hops keeps hops covering at least the node fraction") {
  SECTION("star keeps one and two") {
    auto hs = meaningful_hops(gen_star(12, 1, 2));
    REQUIRE(hs.hops == std::vector<int>{1, 2});
    REQUIRE(hs.contains(2));
    REQUIRE_FALSE(hs.contains(3));
  }
  SECTION("odd cycle keeps everything up to its radius") {
    auto hs = meaningful_hops(fixtures::cycle(13));
    REQUIRE(hs.hops == std::vector<int>{1, 2, 3, 4, 5, 6});
  }
  SECTION("threshold is respected") {
    auto g = fixtures::path3();
    REQUIRE(meaningful_hops(g, 0.5).hops == std::vector<int>{1, 2});
    REQUIRE(meaningful_hops(g, 0.9).hops == std::vector<int>{1});
  }
}

TEST_CASE("target_hops ranks by value, ties prefer the smaller hop") {
  std::map<int, double> nb{{1, 0.5}, {2, 0.3}, {3, 0.1}, {4, 0.4}};
  REQUIRE(target_hops(nb, 3) == std::vector<int>{1, 4, 2});
  std::map<int, double> tie{{1, 0.4}, {2, 0.4}};
  REQUIRE(target_hops(tie, 1) == std::vector<int>{1});
  REQUIRE(target_hops(tie, 5) == std::vector<int>{1, 2});
}

TEST_CASE("walk weights multiply along paths and count parallel routes") {
  SECTION("weighted path") {
    auto g = make_graph(3, {{0, 1}, {1, 2}}, {2.0, 3.0}, {0, 1, 0}, false, true);
    auto idx = khop_bfs(g, 2).back();
    auto w = khop_walk_weights(g, idx);
    REQUIRE(idx.rows[0] == std::vector<int>{2});
    REQUIRE(w[0] == std::vector<double>{6.0});
  }
  SECTION("two routes on the 4-cycle") {
    auto g = fixtures::cycle(4);
    auto idx = khop_bfs(g, 2).back();
    auto w = khop_walk_weights(g, idx);
    REQUIRE(idx.rows[0] == std::vector<int>{2});
    REQUIRE(w[0] == std::vector<double>{2.0});
  }
}
