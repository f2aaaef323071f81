#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <thread>
#include <vector>

#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"

namespace khopfair {

/// Nodes at shortest-path distance exactly k from each source, over the
/// unweighted support (out-edges when directed). rows[v] is sorted ascending;
/// the diagonal never appears.
struct KHopIndex {
  int k = 0;
  int n = 0;
  std::vector<std::vector<int>> rows;
  std::vector<int> v_k;         // sources with a nonempty row, ascending
  std::size_t pair_count = 0;   // total ordered pairs

  bool in_v_k(int v) const { return !rows[v].empty(); }
};

namespace detail {

inline void finish_index(KHopIndex& idx) {
  idx.v_k.clear();
  idx.pair_count = 0;
  for (int v = 0; v < idx.n; ++v) {
    if (!idx.rows[v].empty()) {
      idx.v_k.push_back(v);
      idx.pair_count += idx.rows[v].size();
    }
  }
}

// BFS from one source, appending each visited node to levels[dist]
inline void bfs_levels(const AttributedGraph& g, int src, int k_max,
                       std::vector<int>& dist, std::vector<int>& queue,
                       std::vector<std::vector<int>>& levels) {
  std::fill(dist.begin(), dist.end(), -1);
  for (auto& l : levels) l.clear();
  queue.clear();
  queue.push_back(src);
  dist[src] = 0;
  std::size_t head = 0;
  while (head < queue.size()) {
    int u = queue[head++];
    if (dist[u] == k_max) break;
    for (const int* t = g.row_begin(u); t != g.row_end(u); ++t) {
      if (dist[*t] < 0) {
        dist[*t] = dist[u] + 1;
        queue.push_back(*t);
        levels[dist[*t]].push_back(*t);
      }
    }
  }
}

}  // namespace detail

/// All-pairs BFS: returns indexes for k = 1..k_max. The reference method.
/// `threads` > 1 splits sources across that many workers; the result does not
/// depend on the thread count.
inline std::vector<KHopIndex> khop_bfs(const AttributedGraph& g, int k_max, int threads = 1) {
  if (k_max < 1) throw io_error("k must be at least 1");
  std::vector<KHopIndex> out(k_max);
  for (int k = 1; k <= k_max; ++k) {
    out[k - 1].k = k;
    out[k - 1].n = g.n;
    out[k - 1].rows.assign(g.n, {});
  }

  auto run = [&](int lo, int hi) {
    std::vector<int> dist(g.n), queue;
    std::vector<std::vector<int>> levels(k_max + 1);
    for (int src = lo; src < hi; ++src) {
      detail::bfs_levels(g, src, k_max, dist, queue, levels);
      for (int k = 1; k <= k_max; ++k) {
        auto& row = out[k - 1].rows[src];
        row = levels[k];
        std::sort(row.begin(), row.end());
      }
    }
  };

  if (threads <= 1 || g.n < 2 * threads) {
    run(0, g.n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (g.n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk, hi = std::min(g.n, lo + chunk);
      if (lo < hi) pool.emplace_back(run, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  for (auto& idx : out) detail::finish_index(idx);
  return out;
}

namespace detail {

// boolean sparse row product: out[i] = union of adj rows over cur[i]
inline std::vector<std::vector<int>> bool_product(const std::vector<std::vector<int>>& cur,
                                                  const AttributedGraph& g) {
  std::vector<std::vector<int>> out(cur.size());
  std::vector<int> mark(g.n, -1);
  for (int i = 0; i < static_cast<int>(cur.size()); ++i) {
    auto& row = out[i];
    for (int mid : cur[i]) {
      for (const int* t = g.row_begin(mid); t != g.row_end(mid); ++t) {
        if (mark[*t] != i) {
          mark[*t] = i;
          row.push_back(*t);
        }
      }
    }
    std::sort(row.begin(), row.end());
  }
  return out;
}

inline std::vector<std::vector<int>> support_rows(const AttributedGraph& g) {
  std::vector<std::vector<int>> rows(g.n);
  for (int v = 0; v < g.n; ++v) rows[v].assign(g.row_begin(v), g.row_end(v));
  return rows;
}

}  // namespace detail

/// Boolean matrix-power route: reachable-in-k minus reachable-in-fewer minus
/// the diagonal, all in the boolean semiring.
inline KHopIndex khop_power(const AttributedGraph& g, int k) {
  if (k < 1) throw io_error("k must be at least 1");
  std::vector<std::vector<int>> walk = detail::support_rows(g);
  // seen[i*n+j] marks support of A^1 + ... + A^(step) as steps accumulate
  std::vector<uint8_t> seen(static_cast<std::size_t>(g.n) * g.n, 0);
  auto mark = [&](const std::vector<std::vector<int>>& rows) {
    for (int i = 0; i < g.n; ++i) {
      const std::size_t base = static_cast<std::size_t>(i) * g.n;
      for (int j : rows[i]) seen[base + j] = 1;
    }
  };
  for (int step = 2; step <= k; ++step) {
    mark(walk);
    walk = detail::bool_product(walk, g);
  }

  KHopIndex idx;
  idx.k = k;
  idx.n = g.n;
  idx.rows.assign(g.n, {});
  for (int i = 0; i < g.n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * g.n;
    for (int j : walk[i]) {
      if (j != i && !seen[base + j]) idx.rows[i].push_back(j);
    }
  }
  detail::finish_index(idx);
  return idx;
}

/// Frontier recursion: expand the exact-(k-1) pairs by one step, then drop
/// anything already reached at a smaller distance and the diagonal. Returns
/// indexes for k = 1..k_max; trailing levels beyond the diameter are empty.
inline std::vector<KHopIndex> khop_recursive(const AttributedGraph& g, int k_max) {
  if (k_max < 1) throw io_error("k must be at least 1");
  std::vector<KHopIndex> out(k_max);
  for (int k = 1; k <= k_max; ++k) {
    out[k - 1].k = k;
    out[k - 1].n = g.n;
    out[k - 1].rows.assign(g.n, {});
  }

  std::vector<uint8_t> reached(static_cast<std::size_t>(g.n) * g.n, 0);
  for (int v = 0; v < g.n; ++v) reached[static_cast<std::size_t>(v) * g.n + v] = 1;

  out[0].rows = detail::support_rows(g);
  for (int i = 0; i < g.n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * g.n;
    for (int j : out[0].rows[i]) reached[base + j] = 1;
  }

  for (int k = 2; k <= k_max; ++k) {
    auto expanded = detail::bool_product(out[k - 2].rows, g);
    bool any = false;
    for (int i = 0; i < g.n; ++i) {
      const std::size_t base = static_cast<std::size_t>(i) * g.n;
      auto& row = out[k - 1].rows[i];
      for (int j : expanded[i]) {
        if (!reached[base + j]) {
          reached[base + j] = 1;
          row.push_back(j);
          any = true;
        }
      }
    }
    if (!any) break;
  }

  for (auto& idx : out) detail::finish_index(idx);
  return out;
}

struct HopSet {
  std::vector<int> hops;  // ascending
  double fraction_threshold = 0.5;

  bool contains(int k) const {
    return std::binary_search(hops.begin(), hops.end(), k);
  }
};

/// Hops where at least threshold * n nodes still have an exact-k neighbor.
/// BFS layers are contiguous per source, so |V^(k)| counts nodes whose
/// eccentricity (within their component) is at least k.
inline HopSet meaningful_hops(const AttributedGraph& g, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw io_error("hop threshold must lie in (0, 1]");
  std::vector<int> ecc(g.n, 0);
  std::vector<int> dist(g.n), queue;
  std::vector<std::vector<int>> levels(g.n + 1);
  int max_ecc = 0;
  for (int src = 0; src < g.n; ++src) {
    detail::bfs_levels(g, src, g.n, dist, queue, levels);
    int e = 0;
    for (int d : dist) e = std::max(e, d);
    ecc[src] = e;
    max_ecc = std::max(max_ecc, e);
  }
  std::vector<int> count(max_ecc + 2, 0);
  for (int e : ecc) count[std::min(e, max_ecc + 1)]++;
  // suffix sum: nodes with eccentricity >= k
  for (int k = max_ecc; k >= 1; --k) count[k] += count[k + 1];

  HopSet hs;
  hs.fraction_threshold = threshold;
  for (int k = 1; k <= max_ecc; ++k) {
    if (static_cast<double>(count[k]) + 1e-9 >= threshold * g.n) hs.hops.push_back(k);
  }
  return hs;
}

/// The `count` hops with the largest bias values, ordered by value descending;
/// ties prefer the smaller hop. Fewer hops than requested returns them all.
inline std::vector<int> target_hops(const std::map<int, double>& nb_values, int count = 3) {
  if (count < 1) throw io_error("target hop count must be at least 1");
  std::vector<std::pair<int, double>> items(nb_values.begin(), nb_values.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> out;
  for (const auto& [k, v] : items) {
    if (static_cast<int>(out.size()) == count) break;
    out.push_back(k);
  }
  return out;
}

namespace detail {

// x = e_src * A^k, dense, using arc weights (1.0 when unweighted)
inline void walk_vector(const AttributedGraph& g, int k, int src,
                        std::vector<double>& x, std::vector<double>& y) {
  x.assign(g.n, 0.0);
  x[src] = 1.0;
  for (int step = 0; step < k; ++step) {
    y.assign(g.n, 0.0);
    for (int u = 0; u < g.n; ++u) {
      if (x[u] == 0.0) continue;
      const int b = g.offsets[u], e = g.offsets[u + 1];
      for (int t = b; t < e; ++t) {
        y[g.neighbors[t]] += x[u] * (g.weighted ? g.arc_weights[t] : 1.0);
      }
    }
    x.swap(y);
  }
}

}  // namespace detail

/// Total k-step walk weight from each source to each of its exact-k targets,
/// for the weighted exposure mode. Entry order matches idx.rows.
inline std::vector<std::vector<double>> khop_walk_weights(const AttributedGraph& g,
                                                          const KHopIndex& idx) {
  std::vector<std::vector<double>> out(g.n);
  std::vector<double> x, y;
  for (int src = 0; src < g.n; ++src) {
    if (idx.rows[src].empty()) continue;
    detail::walk_vector(g, idx.k, src, x, y);
    auto& row = out[src];
    row.reserve(idx.rows[src].size());
    for (int t : idx.rows[src]) row.push_back(x[t]);
  }
  return out;
}

}  // namespace khopfair
