#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"
#include "khopfair/khop.hpp"
#include "khopfair/scores.hpp"

namespace khopfair {

/// Tag selecting structural exposure: every exact-k pair counts 1 (its total
/// k-step walk weight on weighted graphs) instead of carrying a score.
struct IndicatorMode {};

enum class ExposurePath {
  PerNode,    // sparse accumulation over each node's k-hop row
  MatrixOps,  // dense selection-matrix products; audit route, O(n^2) memory
};

enum class NormalizerMode {
  NeighborCount,  // divide by |N^(k)(v)| (total walk weight when weighted)
  GroupPresence,  // divide by the number of groups present in N^(k)(v)
};

struct ExposureOptions {
  ExposurePath path = ExposurePath::PerNode;
  NormalizerMode normalizer = NormalizerMode::NeighborCount;
};

/// Per-node exposures f and group-level averages phi for one hop.
/// per_node_f[v] is empty when v has no exact-k neighbor; phi rows for groups
/// with no member in V^(k) are flagged undefined and must be skipped.
struct ExposureTable {
  int k = 0;
  int num_groups = 0;
  std::vector<std::vector<double>> per_node_f;  // size n
  std::vector<double> phi;                      // row-major num_groups x num_groups
  std::vector<char> row_defined;
  std::vector<int> group_counts;                // |V_s^(k)|

  double phi_at(int s, int t) const { return phi[s * num_groups + t]; }
  int defined_rows() const {
    int c = 0;
    for (char d : row_defined) c += d != 0;
    return c;
  }
};

namespace detail {

// psi[v][s'] = mass node v receives from group s' over its exact-k pairs;
// lambda[v] = the normalizer. Scores pass sm; indicator passes nullptr.
inline void exposure_tallies(const AttributedGraph& g, const KHopIndex& idx,
                             const ScoreMatrix* sm, ExposureOptions opt,
                             std::vector<std::vector<double>>& psi,
                             std::vector<double>& lambda) {
  const int n = g.n, ng = g.num_groups;
  psi.assign(n, {});
  lambda.assign(n, 0.0);

  // weighted graphs weigh each structural pair by its k-step walk weight
  const bool use_walks = (sm == nullptr) && g.weighted;
  std::vector<std::vector<double>> walks;
  if (use_walks) walks = khop_walk_weights(g, idx);

  if (opt.path == ExposurePath::PerNode) {
    for (int v = 0; v < n; ++v) {
      const auto& row = idx.rows[v];
      if (row.empty()) continue;
      auto& pv = psi[v];
      pv.assign(ng, 0.0);
      for (std::size_t t = 0; t < row.size(); ++t) {
        const double val = sm ? sm->at(v, row[t]) : (use_walks ? walks[v][t] : 1.0);
        pv[g.groups[row[t]]] += val;
      }
      if (opt.normalizer == NormalizerMode::NeighborCount) {
        if (sm || !use_walks) {
          lambda[v] = static_cast<double>(row.size());
        } else {
          double tot = 0.0;
          for (double w : walks[v]) tot += w;
          lambda[v] = tot;
        }
      }
    }
  } else {
    // dense route: X holds the pair values, M the 0/1 mask; psi = X * G and
    // lambda = M * 1 as full-length products
    std::vector<double> X(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> M(static_cast<std::size_t>(n) * n, 0.0);
    for (int v = 0; v < n; ++v) {
      const auto& row = idx.rows[v];
      const std::size_t base = static_cast<std::size_t>(v) * n;
      for (std::size_t t = 0; t < row.size(); ++t) {
        const double val = sm ? sm->at(v, row[t]) : (use_walks ? walks[v][t] : 1.0);
        X[base + row[t]] = val;
        M[base + row[t]] = use_walks ? walks[v][t] : 1.0;
      }
    }
    for (int v = 0; v < n; ++v) {
      if (idx.rows[v].empty()) continue;
      const std::size_t base = static_cast<std::size_t>(v) * n;
      auto& pv = psi[v];
      pv.assign(ng, 0.0);
      for (int t = 0; t < n; ++t) pv[g.groups[t]] += X[base + t];
      if (opt.normalizer == NormalizerMode::NeighborCount) {
        double tot = 0.0;
        for (int t = 0; t < n; ++t) tot += M[base + t];
        lambda[v] = tot;
      }
    }
  }

  if (opt.normalizer == NormalizerMode::GroupPresence) {
    for (int v = 0; v < n; ++v) {
      if (psi[v].empty()) continue;
      int present = 0;
      for (double mass : psi[v]) present += mass > 0.0;
      lambda[v] = static_cast<double>(std::max(present, 1));
    }
  }
}

inline ExposureTable exposure_table(const AttributedGraph& g, const KHopIndex& idx,
                                    const ScoreMatrix* sm, ExposureOptions opt) {
  if (sm && sm->n() != g.n) throw io_error("score matrix size does not match the graph");
  ExposureTable tab;
  tab.k = idx.k;
  tab.num_groups = g.num_groups;
  tab.group_counts.assign(g.num_groups, 0);
  tab.row_defined.assign(g.num_groups, 0);
  tab.phi.assign(static_cast<std::size_t>(g.num_groups) * g.num_groups, 0.0);

  std::vector<std::vector<double>> psi;
  std::vector<double> lambda;
  exposure_tallies(g, idx, sm, opt, psi, lambda);

  tab.per_node_f.assign(g.n, {});
  for (int v = 0; v < g.n; ++v) {
    if (psi[v].empty()) continue;
    auto& f = tab.per_node_f[v];
    f.resize(g.num_groups);
    for (int s = 0; s < g.num_groups; ++s) f[s] = psi[v][s] / lambda[v];
    tab.group_counts[g.groups[v]]++;
  }

  for (int v = 0; v < g.n; ++v) {
    if (tab.per_node_f[v].empty()) continue;
    const int s = g.groups[v];
    for (int t = 0; t < g.num_groups; ++t) {
      tab.phi[s * g.num_groups + t] += tab.per_node_f[v][t];
    }
  }
  for (int s = 0; s < g.num_groups; ++s) {
    if (tab.group_counts[s] > 0) {
      tab.row_defined[s] = 1;
      for (int t = 0; t < g.num_groups; ++t) {
        tab.phi[s * g.num_groups + t] /= tab.group_counts[s];
      }
    }
  }
  return tab;
}

}  // namespace detail

/// Exposure of node v to each group across its exact-k neighborhood,
/// normalized by neighborhood size (total walk weight on weighted graphs).
inline std::vector<double> node_exposure(const AttributedGraph& g, const KHopIndex& idx,
                                         const ScoreMatrix& sm, int v) {
  if (v < 0 || v >= g.n) throw io_error("node id out of range");
  if (idx.rows[v].empty()) {
    throw undefined_metric_error("node " + std::to_string(v) + " has an empty " +
                                 std::to_string(idx.k) + "-hop neighborhood");
  }
  std::vector<double> f(g.num_groups, 0.0);
  for (int t : idx.rows[v]) f[g.groups[t]] += sm.at(v, t);
  for (double& x : f) x /= static_cast<double>(idx.rows[v].size());
  return f;
}

inline std::vector<double> node_exposure(const AttributedGraph& g, const KHopIndex& idx,
                                         IndicatorMode, int v) {
  if (v < 0 || v >= g.n) throw io_error("node id out of range");
  if (idx.rows[v].empty()) {
    throw undefined_metric_error("node " + std::to_string(v) + " has an empty " +
                                 std::to_string(idx.k) + "-hop neighborhood");
  }
  std::vector<double> f(g.num_groups, 0.0);
  if (g.weighted) {
    std::vector<double> x, y;
    detail::walk_vector(g, idx.k, v, x, y);
    double tot = 0.0;
    for (int t : idx.rows[v]) {
      f[g.groups[t]] += x[t];
      tot += x[t];
    }
    for (double& e : f) e /= tot;
  } else {
    for (int t : idx.rows[v]) f[g.groups[t]] += 1.0;
    for (double& e : f) e /= static_cast<double>(idx.rows[v].size());
  }
  return f;
}

inline ExposureTable group_exposure(const AttributedGraph& g, const KHopIndex& idx,
                                    const ScoreMatrix& sm, ExposureOptions opt = {}) {
  return detail::exposure_table(g, idx, &sm, opt);
}

inline ExposureTable group_exposure(const AttributedGraph& g, const KHopIndex& idx,
                                    IndicatorMode, ExposureOptions opt = {}) {
  return detail::exposure_table(g, idx, nullptr, opt);
}

namespace detail {

// max over target groups and ordered pairs of defined source rows
inline double max_phi_gap(const ExposureTable& tab) {
  if (tab.defined_rows() < 2) {
    throw undefined_metric_error("fewer than two groups have " + std::to_string(tab.k) +
                                 "-hop members");
  }
  double best = 0.0;
  const int ng = tab.num_groups;
  for (int s1 = 0; s1 < ng; ++s1) {
    if (!tab.row_defined[s1]) continue;
    for (int s2 = 0; s2 < ng; ++s2) {
      if (s2 == s1 || !tab.row_defined[s2]) continue;
      for (int t = 0; t < ng; ++t) {
        best = std::max(best, std::abs(tab.phi_at(s1, t) - tab.phi_at(s2, t)));
      }
    }
  }
  return best;
}

}  // namespace detail

/// Neighborhood fairness of a score matrix at hop k: the largest gap between
/// two groups' average exposure to any target group.
inline double nf(const AttributedGraph& g, const KHopIndex& idx, const ScoreMatrix& sm,
                 ExposureOptions opt = {}) {
  return detail::max_phi_gap(group_exposure(g, idx, sm, opt));
}

inline double nf(const AttributedGraph& g, int k, const ScoreMatrix& sm,
                 ExposureOptions opt = {}) {
  return nf(g, khop_bfs(g, k).back(), sm, opt);
}

/// Structural neighborhood bias at hop k: fairness of the exact-k indicator.
inline double nb(const AttributedGraph& g, const KHopIndex& idx, ExposureOptions opt = {}) {
  return detail::max_phi_gap(group_exposure(g, idx, IndicatorMode{}, opt));
}

inline double nb(const AttributedGraph& g, int k, ExposureOptions opt = {}) {
  return nb(g, khop_bfs(g, k).back(), opt);
}

/// Two-group shortcut |phi_00 + phi_11 - 1|; equals nb on binary graphs.
inline double nb_binary(const AttributedGraph& g, const KHopIndex& idx) {
  if (g.num_groups != 2) {
    throw undefined_metric_error("binary neighborhood bias needs exactly two groups");
  }
  auto tab = group_exposure(g, idx, IndicatorMode{});
  if (tab.defined_rows() < 2) {
    throw undefined_metric_error("fewer than two groups have " + std::to_string(idx.k) +
                                 "-hop members");
  }
  return std::abs(tab.phi_at(0, 0) + tab.phi_at(1, 1) - 1.0);
}

/// Degree-preserving group assortativity of the edge set. +1 is perfectly
/// homophilic, negative values indicate cross-group preference.
inline double assortativity(const AttributedGraph& g) {
  if (g.m() < 1) throw undefined_metric_error("assortativity needs at least one edge");
  if (g.num_groups < 2) {
    throw undefined_metric_error("assortativity undefined for a single group");
  }
  const int ng = g.num_groups;
  std::vector<double> e(static_cast<std::size_t>(ng) * ng, 0.0);
  const double m = static_cast<double>(g.m());
  for (auto [i, j] : g.edges) {
    const int si = g.groups[i], sj = g.groups[j];
    if (g.directed) {
      e[si * ng + sj] += 1.0 / m;
    } else if (si == sj) {
      e[si * ng + sj] += 1.0 / m;
    } else {
      e[si * ng + sj] += 0.5 / m;
      e[sj * ng + si] += 0.5 / m;
    }
  }
  double trace = 0.0, cross = 0.0;
  std::vector<double> row(ng, 0.0), col(ng, 0.0);
  for (int s = 0; s < ng; ++s) {
    trace += e[s * ng + s];
    for (int t = 0; t < ng; ++t) {
      row[s] += e[s * ng + t];
      col[t] += e[s * ng + t];
    }
  }
  for (int s = 0; s < ng; ++s) cross += row[s] * col[s];
  const double denom = 1.0 - cross;
  if (std::abs(denom) < 1e-15) {
    throw undefined_metric_error("assortativity denominator is zero (all edges in one group)");
  }
  return (trace - cross) / denom;
}

struct LabeledPair {
  int i = 0;
  int j = 0;
  int y = 0;  // 1 = positive
};

struct DyadicResult {
  std::optional<double> dp;  // same-group vs cross-group mean score gap
  std::optional<double> eo;  // the same gap restricted to positive pairs
};

/// Classic pair-level parity numbers for comparison against the k-hop view.
/// A stratum with no pairs leaves the corresponding metric unset.
inline DyadicResult dyadic_metrics(const ScoreMatrix& sm, const std::vector<LabeledPair>& pairs,
                                   const AttributedGraph& g) {
  double sum_same = 0.0, sum_diff = 0.0;
  long cnt_same = 0, cnt_diff = 0;
  double pos_same = 0.0, pos_diff = 0.0;
  long pos_cnt_same = 0, pos_cnt_diff = 0;
  for (const auto& p : pairs) {
    if (p.i < 0 || p.i >= g.n || p.j < 0 || p.j >= g.n) throw io_error("pair index out of range");
    const double s = sm.at(p.i, p.j);
    const bool same = g.groups[p.i] == g.groups[p.j];
    (same ? sum_same : sum_diff) += s;
    (same ? cnt_same : cnt_diff)++;
    if (p.y == 1) {
      (same ? pos_same : pos_diff) += s;
      (same ? pos_cnt_same : pos_cnt_diff)++;
    }
  }
  DyadicResult r;
  if (cnt_same > 0 && cnt_diff > 0) {
    r.dp = std::abs(sum_same / cnt_same - sum_diff / cnt_diff);
  }
  if (pos_cnt_same > 0 && pos_cnt_diff > 0) {
    r.eo = std::abs(pos_same / pos_cnt_same - pos_diff / pos_cnt_diff);
  }
  return r;
}

struct DpTerm {
  double omega = 0.0;   // share of ordered pairs at this (k, v)
  double f_same = 0.0;  // mean score toward same-group nodes at hop k
  double f_diff = 0.0;
};

struct DpDecomposition {
  double direct_dp = 0.0;
  double decomposed_dp = 0.0;
  double p_same = 0.0;  // probability a uniform ordered pair shares its group
  std::map<std::pair<int, int>, DpTerm> terms;  // keyed (k, v)
};

/// Splits the pairwise parity gap into contributions from each hop and node.
/// Needs a connected binary-group graph and a score for every ordered pair
/// (missing entries take `fill` when provided).
inline DpDecomposition dp_decomposition(const AttributedGraph& g, const ScoreMatrix& sm,
                                        std::optional<double> fill = std::nullopt) {
  if (g.num_groups != 2) {
    throw undefined_metric_error("dp decomposition needs exactly two groups");
  }
  if (!validate(g).connected) {
    throw undefined_metric_error("dp decomposition needs a connected graph");
  }
  if (fill && !(*fill >= 0.0 && *fill <= 1.0)) throw io_error("fill score out of range");

  auto score = [&](int i, int j) -> double {
    auto v = sm.get(i, j);
    if (v) return *v;
    if (fill) return *fill;
    throw io_error("domain gap at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  };

  DpDecomposition out;
  const double n = static_cast<double>(g.n);
  const auto sizes = g.group_sizes();
  double same_pairs = 0.0;
  for (int s = 0; s < g.num_groups; ++s) {
    same_pairs += static_cast<double>(sizes[s]) * (sizes[s] - 1);
  }
  out.p_same = same_pairs / (n * (n - 1));
  if (!(out.p_same > 0.0 && out.p_same < 1.0)) {
    throw undefined_metric_error("dp decomposition needs both same- and cross-group pairs");
  }

  double sum_same = 0.0, sum_diff = 0.0;
  for (int v = 0; v < g.n; ++v) {
    for (int u = 0; u < g.n; ++u) {
      if (u == v) continue;
      const double s = score(v, u);
      if (g.groups[v] == g.groups[u]) {
        sum_same += s;
      } else {
        sum_diff += s;
      }
    }
  }
  out.direct_dp = std::abs(sum_same / same_pairs - sum_diff / (n * (n - 1) - same_pairs));

  std::vector<int> dist(g.n), queue;
  std::vector<std::vector<int>> levels(g.n + 1);
  double acc = 0.0;
  for (int v = 0; v < g.n; ++v) {
    detail::bfs_levels(g, v, g.n, dist, queue, levels);
    for (int k = 1; k <= g.n; ++k) {
      if (levels[k].empty()) break;
      double same = 0.0, diff = 0.0;
      for (int u : levels[k]) {
        const double s = score(v, u);
        if (g.groups[v] == g.groups[u]) {
          same += s;
        } else {
          diff += s;
        }
      }
      const double cnt = static_cast<double>(levels[k].size());
      DpTerm term;
      term.omega = cnt / (n * (n - 1));
      term.f_same = same / cnt;
      term.f_diff = diff / cnt;
      out.terms[{k, v}] = term;
      acc += term.omega * (term.f_same / out.p_same - term.f_diff / (1.0 - out.p_same));
    }
  }
  out.decomposed_dp = std::abs(acc);
  return out;
}

/// Rank-based AUC with ties counted half. Both pair lists must be nonempty
/// and fully covered by the score matrix.
inline double auc(const ScoreMatrix& sm, const std::vector<std::pair<int, int>>& positives,
                  const std::vector<std::pair<int, int>>& negatives) {
  if (positives.empty() || negatives.empty()) {
    throw undefined_metric_error("auc needs at least one positive and one negative pair");
  }
  std::vector<std::pair<double, int>> all;
  all.reserve(positives.size() + negatives.size());
  for (auto [i, j] : positives) all.emplace_back(sm.at(i, j), 1);
  for (auto [i, j] : negatives) all.emplace_back(sm.at(i, j), 0);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) j++;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].second == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double P = static_cast<double>(positives.size());
  const double N = static_cast<double>(negatives.size());
  return (rank_sum_pos - P * (P + 1) / 2.0) / (P * N);
}

}  // namespace khopfair
