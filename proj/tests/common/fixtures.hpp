#pragma once

#include <set>
#include <utility>
#include <vector>

#include "khopfair/graph.hpp"
#include "khopfair/random.hpp"
#include "khopfair/scores.hpp"

namespace fixtures {

using khopfair::AttributedGraph;
using khopfair::Rng;
using khopfair::ScoreMatrix;

// path 0 - 1 - 2 with groups 0, 1, 0
inline AttributedGraph path3() {
  return khopfair::make_graph(3, {{0, 1}, {1, 2}}, {}, {0, 1, 0});
}

inline AttributedGraph cycle(int n, int num_groups = 2) {
  std::vector<std::pair<int, int>> edges;
  std::vector<int> groups(n);
  for (int v = 0; v < n; ++v) {
    edges.emplace_back(v, (v + 1) % n);
    groups[v] = v % num_groups;
  }
  return khopfair::make_graph(n, std::move(edges), {}, std::move(groups));
}

// random recursive tree plus uniform extra edges; every group nonempty
inline AttributedGraph random_connected_graph(int n, int target_m, int num_groups,
                                              uint64_t seed) {
  Rng rng(seed);
  std::set<std::pair<int, int>> have;
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    const int u = static_cast<int>(rng.below(v));
    edges.emplace_back(u, v);
    have.insert({u, v});
  }
  const long long cap = static_cast<long long>(n) * (n - 1) / 2;
  target_m = static_cast<int>(std::min<long long>(target_m, cap));
  while (static_cast<int>(edges.size()) < target_m) {
    int i = static_cast<int>(rng.below(n));
    int j = static_cast<int>(rng.below(n));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!have.insert({i, j}).second) continue;
    edges.emplace_back(i, j);
  }
  std::vector<int> groups(n);
  for (int v = 0; v < n; ++v) {
    groups[v] = v < num_groups ? v : static_cast<int>(rng.below(num_groups));
  }
  return khopfair::make_graph(n, std::move(edges), {}, std::move(groups));
}

// full symmetric coverage of every node pair
inline ScoreMatrix dense_random_scores(const AttributedGraph& g, uint64_t seed) {
  Rng rng(seed);
  ScoreMatrix sm(g.n, true);
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) sm.set(i, j, rng.unit());
  }
  return sm;
}

}  // namespace fixtures
