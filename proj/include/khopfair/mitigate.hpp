#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "khopfair/autodiff.hpp"
#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"
#include "khopfair/khop.hpp"
#include "khopfair/losses.hpp"
#include "khopfair/metrics.hpp"
#include "khopfair/scores.hpp"

namespace khopfair {

enum class MitigationMode { Post, PreContinuous, PreAdd };

inline const char* mitigation_mode_name(MitigationMode m) {
  switch (m) {
    case MitigationMode::Post: return "post";
    case MitigationMode::PreContinuous: return "pre-continuous";
    case MitigationMode::PreAdd: return "pre-add";
  }
  return "?";
}

/// Exact metric values taken at one point in time. bias_per_hop holds NF for
/// score-based runs and NB for structural ones; hops whose metric is undefined
/// (or whose scores have gaps) are simply absent.
struct MetricSnapshot {
  std::map<int, double> bias_per_hop;
  std::optional<double> dp;
  std::optional<double> eo;
  std::optional<double> auc_value;
};

struct MitigationResult {
  MitigationMode mode = MitigationMode::Post;
  int k_target = 1;
  double alpha = 0.0;
  double lr = 0.01;
  int epochs = 0;
  RelaxationConfig relax;

  std::vector<double> loss_trajectory;
  std::vector<double> relaxed_trajectory;
  std::vector<int> eval_iterations;
  std::map<int, std::vector<double>> bias_trajectories;

  MetricSnapshot before, after;
  int best_iteration = 0;
  std::string stop_reason;

  Mat perturbation;
  std::optional<ScoreMatrix> final_scores;
  Mat final_adjacency;
  std::optional<AttributedGraph> final_graph;
  std::vector<std::pair<int, int>> added_edges;
};

namespace detail {

inline std::vector<int> default_hops(const AttributedGraph& g, int k) {
  auto hs = meaningful_hops(g);
  auto hops = hs.hops;
  if (std::find(hops.begin(), hops.end(), k) == hops.end()) hops.push_back(k);
  std::sort(hops.begin(), hops.end());
  return hops;
}

inline void snapshot_pairs(MetricSnapshot& snap, const ScoreMatrix& sm,
                           const std::vector<LabeledPair>& pairs, const AttributedGraph& g) {
  if (pairs.empty()) return;
  try {
    auto dy = dyadic_metrics(sm, pairs, g);
    snap.dp = dy.dp;
    snap.eo = dy.eo;
  } catch (const io_error&) {
  }
  std::vector<std::pair<int, int>> pos, neg;
  for (const auto& p : pairs) (p.y ? pos : neg).push_back({p.i, p.j});
  try {
    snap.auc_value = auc(sm, pos, neg);
  } catch (const std::exception&) {
  }
}

}  // namespace detail

/// Exact NF per hop plus optional dyadic metrics for a score matrix.
inline MetricSnapshot score_snapshot(const AttributedGraph& g, const ScoreMatrix& sm,
                                     const std::vector<int>& hops,
                                     const std::vector<LabeledPair>& pairs = {}) {
  MetricSnapshot snap;
  const int k_max = hops.empty() ? 1 : *std::max_element(hops.begin(), hops.end());
  auto idx = khop_bfs(g, k_max);
  for (int k : hops) {
    if (k < 1) continue;
    try {
      snap.bias_per_hop[k] = nf(g, idx[k - 1], sm);
    } catch (const std::exception&) {
    }
  }
  detail::snapshot_pairs(snap, sm, pairs, g);
  return snap;
}

/// Exact NB per hop for a graph.
inline MetricSnapshot graph_snapshot(const AttributedGraph& g, const std::vector<int>& hops) {
  MetricSnapshot snap;
  const int k_max = hops.empty() ? 1 : *std::max_element(hops.begin(), hops.end());
  auto idx = khop_bfs(g, k_max);
  for (int k : hops) {
    if (k < 1) continue;
    try {
      snap.bias_per_hop[k] = nb(g, idx[k - 1]);
    } catch (const std::exception&) {
    }
  }
  return snap;
}

struct PostOptions {
  double alpha = 0.0;
  int epochs = 500;
  double lr = 0.01;
  RelaxationConfig relax;
  int eval_every = 10;
  std::vector<int> snapshot_hops;          // empty: meaningful hops of the graph
  std::vector<LabeledPair> test_pairs;     // optional, for dp/eo/auc snapshots
};

/// Gradient post-processing of link scores: learns an additive perturbation on
/// the exact-k pairs only, keeps the best iterate by its hard NF value, and
/// leaves every off-mask score untouched. Starting from U = 0 the reported
/// result can never be worse than the input.
inline MitigationResult post_process(const AttributedGraph& g, int k, const ScoreMatrix& sm,
                                     const PostOptions& opt = {}) {
  if (opt.epochs < 0) throw io_error("epochs must be non-negative");
  if (!(opt.lr > 0.0)) throw io_error("learning rate must be positive");
  if (opt.eval_every < 1) throw io_error("eval_every must be at least 1");

  auto idx = khop_bfs(g, k).back();
  PostLoss loss(g, idx, sm, opt.alpha, opt.relax);

  MitigationResult res;
  res.mode = MitigationMode::Post;
  res.k_target = k;
  res.alpha = opt.alpha;
  res.lr = opt.lr;
  res.epochs = opt.epochs;
  res.relax = opt.relax;

  const auto hops = opt.snapshot_hops.empty() ? detail::default_hops(g, k) : opt.snapshot_hops;
  res.before = score_snapshot(g, sm, hops, opt.test_pairs);

  Mat u = Mat::Zero(g.n, g.n);
  Mat best_u = u;
  double best_exact = std::numeric_limits<double>::infinity();
  auto adam = AdamState::init(g.n, g.n, opt.lr);

  for (int it = 0; it <= opt.epochs; ++it) {
    Tape t;
    auto e = loss.emit(t, u);
    res.loss_trajectory.push_back(t.value(e.loss)(0, 0));
    res.relaxed_trajectory.push_back(t.value(e.relaxed_nf)(0, 0));

    if (it % opt.eval_every == 0 || it == opt.epochs) {
      const double exact = loss.exact_nf(loss.clipped(u));
      res.eval_iterations.push_back(it);
      res.bias_trajectories[k].push_back(exact);
      if (exact < best_exact) {
        best_exact = exact;
        best_u = u;
        res.best_iteration = it;
      }
    }
    if (it == opt.epochs) break;

    t.backward(e.loss);
    adam_step(u, t.grad(e.u), adam);
    if (sm.symmetric()) u = (0.5 * (u + u.transpose())).eval();
  }

  res.perturbation = best_u.cwiseProduct(loss.mask());
  res.stop_reason = "epochs exhausted";

  ScoreMatrix out = sm;
  Mat fixed = loss.clipped(best_u);
  for (int v = 0; v < idx.n; ++v) {
    for (int t : idx.rows[v]) {
      if (!sm.symmetric() || t > v) out.set(v, t, fixed(v, t));
    }
  }
  res.final_scores = std::move(out);
  res.after = score_snapshot(g, *res.final_scores, hops, opt.test_pairs);
  return res;
}

struct SweepRow {
  double alpha = 0.0;
  double bias_after = 0.0;
  std::optional<double> auc_after;
  double perturbation_norm = 0.0;
};

/// Runs post_process once per alpha (sorted, deduplicated) and reports the
/// fairness/utility frontier.
inline std::vector<SweepRow> alpha_sweep(const AttributedGraph& g, int k, const ScoreMatrix& sm,
                                         std::vector<double> alphas, PostOptions opt = {}) {
  if (alphas.empty()) throw io_error("alpha sweep needs at least one value");
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

  std::vector<SweepRow> rows;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw io_error("alpha must be non-negative");
    opt.alpha = a;
    opt.snapshot_hops = {k};
    auto res = post_process(g, k, sm, opt);
    SweepRow row;
    row.alpha = a;
    row.bias_after = res.after.bias_per_hop.at(k);
    row.auc_after = res.after.auc_value;
    row.perturbation_norm = res.perturbation.norm();
    rows.push_back(row);
  }
  return rows;
}

struct PreContinuousOptions {
  double alpha = 0.1;
  int epochs = 200;
  double lr = 0.01;
  RelaxationConfig relax;
  int eval_every = 10;
  bool box01 = true;
  bool symmetric = true;
  bool support_only = false;
  double threshold = 0.5;  // hard readout of the learned adjacency
  std::vector<int> snapshot_hops;
};

/// Hard graph obtained by keeping entries above the threshold. Symmetrizes by
/// the maximum of the two directions so a one-sided weight still counts.
inline AttributedGraph threshold_graph(const AttributedGraph& g, const Mat& a, double thr) {
  std::vector<std::pair<int, int>> edges;
  if (g.directed) {
    for (int i = 0; i < g.n; ++i) {
      for (int j = 0; j < g.n; ++j) {
        if (i != j && a(i, j) > thr) edges.push_back({i, j});
      }
    }
  } else {
    for (int i = 0; i < g.n; ++i) {
      for (int j = i + 1; j < g.n; ++j) {
        if (std::max(a(i, j), a(j, i)) > thr) edges.push_back({i, j});
      }
    }
  }
  return make_graph(g.n, edges, {}, g.groups, g.directed, false, g.original_ids,
                    g.original_group_ids);
}

/// Continuous relaxation of the adjacency itself: descends the smooth
/// structural objective plus a drift penalty, projecting back to the chosen
/// constraint set after every step. Evaluation thresholds the current matrix
/// and measures the hard graph; the reported iterate is the one whose
/// thresholded NB at the target hop is lowest.
inline MitigationResult pre_process_continuous(const AttributedGraph& g, int k,
                                               const PreContinuousOptions& opt = {}) {
  if (opt.epochs < 0) throw io_error("epochs must be non-negative");
  if (!(opt.lr > 0.0)) throw io_error("learning rate must be positive");
  if (opt.eval_every < 1) throw io_error("eval_every must be at least 1");
  if (opt.symmetric && g.directed) {
    throw io_error("symmetric projection is for undirected graphs");
  }

  PreLoss loss(g, k, opt.alpha, opt.relax);
  MitigationResult res;
  res.mode = MitigationMode::PreContinuous;
  res.k_target = k;
  res.alpha = opt.alpha;
  res.lr = opt.lr;
  res.epochs = opt.epochs;
  res.relax = opt.relax;

  const auto hops = opt.snapshot_hops.empty() ? detail::default_hops(g, k) : opt.snapshot_hops;
  res.before = graph_snapshot(g, hops);

  Mat a = loss.original_adjacency();
  Mat support = (a.array() != 0.0).cast<double>().matrix();
  Mat best_a = a;
  double best_exact = std::numeric_limits<double>::infinity();
  auto adam = AdamState::init(g.n, g.n, opt.lr);

  auto evaluate = [&](const Mat& cur, int it) {
    auto hard = threshold_graph(g, cur, opt.threshold);
    auto snap = graph_snapshot(hard, hops);
    res.eval_iterations.push_back(it);
    for (int h : hops) {
      auto fit = snap.bias_per_hop.find(h);
      res.bias_trajectories[h].push_back(
          fit == snap.bias_per_hop.end() ? std::numeric_limits<double>::quiet_NaN()
                                         : fit->second);
    }
    auto tit = snap.bias_per_hop.find(k);
    const double exact = tit == snap.bias_per_hop.end()
                             ? std::numeric_limits<double>::infinity()
                             : tit->second;
    if (exact < best_exact) {
      best_exact = exact;
      best_a = cur;
      res.best_iteration = it;
    }
  };

  for (int it = 0; it <= opt.epochs; ++it) {
    Tape t;
    auto e = loss.emit(t, a);
    res.loss_trajectory.push_back(t.value(e.loss)(0, 0));
    res.relaxed_trajectory.push_back(t.value(e.relaxed_nb)(0, 0));
    if (it % opt.eval_every == 0 || it == opt.epochs) evaluate(a, it);
    if (it == opt.epochs) break;

    t.backward(e.loss);
    Mat grad = t.grad(e.a);
    if (opt.support_only) grad = grad.cwiseProduct(support);
    adam_step(a, grad, adam);
    if (opt.box01) a = a.array().max(0.0).min(1.0).matrix();
    if (opt.symmetric) a = (0.5 * (a + a.transpose())).eval();
    if (opt.support_only) a = a.cwiseProduct(support);
    a.diagonal().setZero();
  }

  res.stop_reason = "epochs exhausted";
  res.final_adjacency = best_a;
  res.final_graph = threshold_graph(g, best_a, opt.threshold);
  res.after = graph_snapshot(*res.final_graph, hops);
  return res;
}

struct RewireOptions {
  int budget = 100;
  RelaxationConfig relax;
  std::vector<int> track_hops;  // empty: meaningful hops of the input graph
};

namespace detail {

inline AttributedGraph with_extra_edge(const AttributedGraph& g, int i, int j) {
  auto edges = g.edges;
  edges.push_back({i, j});
  std::vector<double> weights;
  if (g.weighted) {
    weights = g.edge_weights;
    weights.push_back(1.0);
  }
  return make_graph(g.n, edges, weights, g.groups, g.directed, g.weighted, g.original_ids,
                    g.original_group_ids);
}

}  // namespace detail

/// Greedy structural rewiring: each round takes the gradient of the smooth
/// structural objective at the current hard adjacency and adds the absent edge
/// with the most negative combined entry, i.e. the one first-order analysis
/// says will cut the bias most. Stops when the budget is spent or no absent
/// edge points downhill. Ties break toward the smallest (i, j).
inline MitigationResult rewire_add_edges(const AttributedGraph& g, int k,
                                         const RewireOptions& opt = {}) {
  if (g.directed) throw io_error("rewiring expects an undirected graph");
  if (opt.budget < 1) throw io_error("budget must be at least 1");

  MitigationResult res;
  res.mode = MitigationMode::PreAdd;
  res.k_target = k;
  res.alpha = 0.0;
  res.epochs = opt.budget;
  res.relax = opt.relax;

  const auto hops = opt.track_hops.empty() ? detail::default_hops(g, k) : opt.track_hops;
  res.before = graph_snapshot(g, hops);

  AttributedGraph cur = g;
  int iteration = 0;
  while (true) {
    PreLoss loss(cur, k, 0.0, opt.relax);
    Tape t;
    auto e = loss.emit(t, loss.original_adjacency());
    const double relaxed = t.value(e.relaxed_nb)(0, 0);
    res.loss_trajectory.push_back(relaxed);
    res.relaxed_trajectory.push_back(relaxed);
    res.eval_iterations.push_back(iteration);
    auto snap = graph_snapshot(cur, hops);
    for (int h : hops) {
      auto fit = snap.bias_per_hop.find(h);
      res.bias_trajectories[h].push_back(
          fit == snap.bias_per_hop.end() ? std::numeric_limits<double>::quiet_NaN()
                                         : fit->second);
    }

    if (iteration == opt.budget) {
      res.stop_reason = "budget exhausted";
      break;
    }

    t.backward(e.relaxed_nb);
    Mat grad = t.grad(e.a);
    int bi = -1, bj = -1;
    double best = 0.0;
    bool found = false, any_absent = false;
    for (int i = 0; i < cur.n; ++i) {
      for (int j = i + 1; j < cur.n; ++j) {
        if (cur.has_edge(i, j)) continue;
        any_absent = true;
        const double s = grad(i, j) + grad(j, i);
        if (!found || s < best) {
          found = true;
          best = s;
          bi = i;
          bj = j;
        }
      }
    }
    if (!any_absent) {
      res.stop_reason = "graph complete";
      break;
    }
    if (best >= 0.0) {
      res.stop_reason = "no reducing edge";
      break;
    }
    cur = detail::with_extra_edge(cur, bi, bj);
    res.added_edges.push_back({bi, bj});
    iteration++;
  }

  res.best_iteration = iteration;
  res.final_graph = cur;
  res.after = graph_snapshot(cur, hops);
  return res;
}

struct CorrelationResult {
  double r = 0.0;
  double p = 1.0;
  bool defined = false;
};

namespace detail {

/// Continued fraction for the regularized incomplete beta (Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14, kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of the no-correlation t-test with m samples.
inline double pearson_p(double r, int m) {
  const int df = m - 2;
  const double denom = 1.0 - r * r;
  if (denom < 1e-15) return 0.0;
  const double t2 = r * r * df / denom;
  return reg_inc_beta(0.5 * df, 0.5, df / (df + t2));
}

}  // namespace detail

/// Pearson correlation; throws when either series is constant.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw io_error("correlation series lengths differ");
  const int m = static_cast<int>(x.size());
  if (m < 3) throw undefined_metric_error("correlation needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < m; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw undefined_metric_error("correlation of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

/// Correlates every tracked hop's bias series against the target hop's.
/// Identical series short-circuit to exactly r = 1. Hops whose overlap with
/// the target (finite entries on both sides) is under 3 points, or whose
/// series is constant, come back with defined = false.
inline std::map<int, CorrelationResult> bias_trajectory_correlation(
    const std::map<int, std::vector<double>>& trajectories, int target_hop) {
  auto it = trajectories.find(target_hop);
  if (it == trajectories.end()) {
    throw undefined_metric_error("no trajectory recorded for hop " + std::to_string(target_hop));
  }
  const auto& target = it->second;
  if (target.size() < 3) {
    throw undefined_metric_error("correlation needs at least 3 iterations");
  }

  std::map<int, CorrelationResult> out;
  for (const auto& [hop, series] : trajectories) {
    CorrelationResult cr;
    if (series.size() == target.size()) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < series.size(); ++i) {
        if (std::isfinite(series[i]) && std::isfinite(target[i])) {
          xs.push_back(series[i]);
          ys.push_back(target[i]);
        }
      }
      if (xs.size() >= 3) {
        if (xs == ys) {
          cr.r = 1.0;
          cr.p = 0.0;
          cr.defined = true;
        } else {
          try {
            cr.r = pearson(xs, ys);
            cr.p = detail::pearson_p(cr.r, static_cast<int>(xs.size()));
            cr.defined = true;
          } catch (const undefined_metric_error&) {
          }
        }
      }
    }
    out[hop] = cr;
  }
  return out;
}

inline std::map<int, CorrelationResult> bias_trajectory_correlation(const MitigationResult& res,
                                                                    int target_hop) {
  return bias_trajectory_correlation(res.bias_trajectories, target_hop);
}

}  // namespace khopfair
