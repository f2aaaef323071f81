// Command line front end: measure structural bias and predictor fairness,
// verify the pairwise-parity decomposition, and run the three mitigation
// modes. Every run writes report.json into --out; all volatile content
// (timestamps, wall times) lives under the single "timing" key so reruns on
// identical inputs are byte-identical after dropping it.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "khopfair/graph.hpp"
#include "khopfair/khop.hpp"
#include "khopfair/metrics.hpp"
#include "khopfair/mitigate.hpp"
#include "khopfair/scores.hpp"
#include "khopfair/toygen.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace khopfair;

namespace {

class Stopwatch {
 public:
  void lap(const std::string& name) {
    const auto now = clock::now();
    laps_.push_back({name, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

  ordered_json to_json() const {
    ordered_json t;
    t["generated_at"] = iso_now();
    double total = 0.0;
    ordered_json stages;
    for (const auto& [name, ms] : laps_) {
      stages[name] = ms;
      total += ms;
    }
    t["stages_ms"] = stages;
    t["total_ms"] = total;
    return t;
  }

 private:
  using clock = std::chrono::steady_clock;

  static std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  clock::time_point last_ = clock::now();
  std::vector<std::pair<std::string, double>> laps_;
};

struct GraphArgs {
  std::string edges;
  std::string attrs;
  bool directed = false;
  bool weighted = false;
};

void add_graph_options(CLI::App* cmd, GraphArgs& a) {
  cmd->add_option("--edges", a.edges, "edge list: one 'i j' (or 'i j w') per line")->required();
  cmd->add_option("--attrs", a.attrs, "node attributes: one 'id group' per line")->required();
  cmd->add_flag("--directed", a.directed, "treat edges as one-directional");
  cmd->add_flag("--weighted", a.weighted, "read the third edge column as a weight");
}

AttributedGraph load(const GraphArgs& a) {
  LoadOptions opt;
  opt.directed = a.directed;
  opt.weighted = a.weighted;
  return load_graph_files(a.edges, a.attrs, opt);
}

ordered_json graph_json(const AttributedGraph& g) {
  const auto v = validate(g);
  ordered_json j;
  j["n"] = g.n;
  j["m"] = g.m();
  j["directed"] = g.directed;
  j["weighted"] = g.weighted;
  j["num_groups"] = g.num_groups;
  j["group_sizes"] = v.group_sizes;
  j["connected"] = v.connected;
  j["components"] = v.components;
  j["density"] = v.density;
  return j;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw io_error("cannot create output directory " + p.parent_path().string());
  }
  std::ofstream out(p);
  if (!out) throw io_error("cannot write " + p.string());
  return out;
}

void write_report(const fs::path& dir, ordered_json rep, Stopwatch& sw) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  rep["timing"] = sw.to_json();
  auto out = open_out(dir / "report.json");
  out << rep.dump(2) << "\n";
}

std::unordered_map<long long, int> dense_id_map(const AttributedGraph& g) {
  std::unordered_map<long long, int> m;
  for (int v = 0; v < g.n; ++v) m[g.original_ids[v]] = v;
  return m;
}

std::vector<LabeledPair> load_pairs_file(const std::string& path, const AttributedGraph& g) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  auto ids = dense_id_map(g);
  std::vector<LabeledPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto toks = detail::tokens(detail::strip_comment(line));
    if (toks.empty()) continue;
    long long i, j, y;
    if (toks.size() != 3 || !detail::parse_ll(toks[0], i) || !detail::parse_ll(toks[1], j) ||
        !detail::parse_ll(toks[2], y) || (y != 0 && y != 1)) {
      throw io_error(path + ":" + std::to_string(lineno) + ": expected 'i j y' with y in {0, 1}");
    }
    auto it_i = ids.find(i), it_j = ids.find(j);
    if (it_i == ids.end() || it_j == ids.end()) {
      throw io_error(path + ":" + std::to_string(lineno) + ": unknown node id");
    }
    pairs.push_back({it_i->second, it_j->second, static_cast<int>(y)});
  }
  return pairs;
}

std::vector<int> resolve_hops(const AttributedGraph& g, const std::vector<int>& requested,
                              double threshold) {
  if (!requested.empty()) {
    for (int k : requested) {
      if (k < 1) throw io_error("hops must be at least 1");
    }
    auto hops = requested;
    std::sort(hops.begin(), hops.end());
    hops.erase(std::unique(hops.begin(), hops.end()), hops.end());
    return hops;
  }
  auto hs = meaningful_hops(g, threshold);
  if (hs.hops.empty()) throw undefined_metric_error("no hop clears the coverage threshold");
  return hs.hops;
}

ordered_json snapshot_json(const MetricSnapshot& s) {
  ordered_json j;
  ordered_json bias;
  for (const auto& [k, v] : s.bias_per_hop) bias[std::to_string(k)] = v;
  j["bias_per_hop"] = bias;
  if (s.dp) j["dp"] = *s.dp;
  if (s.eo) j["eo"] = *s.eo;
  if (s.auc_value) j["auc"] = *s.auc_value;
  return j;
}

ordered_json correlation_json(const std::map<int, CorrelationResult>& by_hop) {
  ordered_json j;
  for (const auto& [hop, cr] : by_hop) {
    ordered_json e;
    e["defined"] = cr.defined;
    if (cr.defined) {
      e["r"] = cr.r;
      e["p"] = cr.p;
    }
    j[std::to_string(hop)] = e;
  }
  return j;
}

std::string num(double x) { return detail::fmt_double(x); }

void write_trajectory_csv(const fs::path& file, const MitigationResult& res) {
  auto out = open_out(file);
  out << "iteration,hop,exact_value,relaxed_value\n";
  for (std::size_t row = 0; row < res.eval_iterations.size(); ++row) {
    const int it = res.eval_iterations[row];
    const double relaxed = res.relaxed_trajectory[static_cast<std::size_t>(it) <
                                                          res.relaxed_trajectory.size()
                                                      ? it
                                                      : res.relaxed_trajectory.size() - 1];
    for (const auto& [hop, series] : res.bias_trajectories) {
      out << it << "," << hop << "," << num(series[row]) << "," << num(relaxed) << "\n";
    }
  }
}

ordered_json relax_json(const RelaxationConfig& cfg) {
  ordered_json j;
  j["beta"] = cfg.beta;
  j["tau"] = cfg.tau;
  j["temp"] = cfg.temp;
  return j;
}

int default_threads() {
  if (const char* env = std::getenv("KHOPFAIR_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

// ---------------------------------------------------------------------------

struct BiasArgs {
  GraphArgs graph;
  std::vector<int> hops;
  double threshold = 0.5;
  std::string normalizer = "count";
  int top = 3;
  std::string out = ".";
};

int run_bias(const BiasArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  sw.lap("load");

  const auto hops = resolve_hops(g, a.hops, a.threshold);
  const int k_max = hops.back();
  auto idx = khop_bfs(g, k_max, default_threads());
  sw.lap("khop");

  ExposureOptions eopt;
  eopt.normalizer = a.normalizer == "presence" ? NormalizerMode::GroupPresence
                                               : NormalizerMode::NeighborCount;

  ordered_json results;
  results["hops"] = hops;
  results["normalizer"] = a.normalizer;
  ordered_json nb_json, detail_json;
  std::map<int, double> nb_values;
  for (int k : hops) {
    const auto& ix = idx[k - 1];
    const double v = nb(g, ix, eopt);
    nb_values[k] = v;
    nb_json[std::to_string(k)] = v;
    ordered_json d;
    d["nodes_with_k_hop"] = static_cast<int>(ix.v_k.size());
    d["ordered_pairs"] = ix.pair_count;
    detail_json[std::to_string(k)] = d;
  }
  results["nb"] = nb_json;
  results["hop_details"] = detail_json;
  if (g.num_groups == 2 && eopt.normalizer == NormalizerMode::NeighborCount) {
    results["nb_binary_shortcut"] = nb_binary(g, idx[hops.front() - 1]);
  }
  results["ranked_hops"] = target_hops(nb_values, a.top);
  results["assortativity"] = assortativity(g);
  sw.lap("metrics");

  ordered_json rep;
  rep["command"] = "bias";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct FairnessArgs {
  GraphArgs graph;
  std::string scores;
  std::string pairs;
  bool asymmetric = false;
  std::vector<int> hops;
  double threshold = 0.5;
  std::string out = ".";
};

int run_fairness(const FairnessArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  auto sm = load_scores_file(a.scores, g, !a.asymmetric);
  sw.lap("load");

  const auto hops = resolve_hops(g, a.hops, a.threshold);
  auto idx = khop_bfs(g, hops.back(), default_threads());
  sw.lap("khop");

  ordered_json results;
  results["hops"] = hops;
  ordered_json nf_json;
  for (int k : hops) nf_json[std::to_string(k)] = nf(g, idx[k - 1], sm);
  results["nf"] = nf_json;

  if (!a.pairs.empty()) {
    auto pairs = load_pairs_file(a.pairs, g);
    auto dy = dyadic_metrics(sm, pairs, g);
    ordered_json dj;
    if (dy.dp) dj["dp"] = *dy.dp;
    if (dy.eo) dj["eo"] = *dy.eo;
    std::vector<std::pair<int, int>> pos, neg;
    for (const auto& p : pairs) (p.y ? pos : neg).push_back({p.i, p.j});
    if (!pos.empty() && !neg.empty()) dj["auc"] = auc(sm, pos, neg);
    dj["pairs"] = static_cast<int>(pairs.size());
    dj["positives"] = static_cast<int>(pos.size());
    results["dyadic"] = dj;
  }
  sw.lap("metrics");

  ordered_json rep;
  rep["command"] = "fairness";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}, {"scores", a.scores}};
  if (!a.pairs.empty()) rep["inputs"]["pairs"] = a.pairs;
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct DecomposeArgs {
  GraphArgs graph;
  std::string scores;
  bool asymmetric = false;
  std::optional<double> fill;
  std::string out = ".";
};

int run_decompose(const DecomposeArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  auto sm = load_scores_file(a.scores, g, !a.asymmetric);
  sw.lap("load");

  auto dec = dp_decomposition(g, sm, a.fill);
  sw.lap("decompose");

  std::map<int, double> per_hop;
  for (const auto& [key, term] : dec.terms) {
    const double p = dec.p_same;
    per_hop[key.first] += term.omega * (term.f_same / p - term.f_diff / (1.0 - p));
  }

  ordered_json results;
  results["direct_dp"] = dec.direct_dp;
  results["decomposed_dp"] = dec.decomposed_dp;
  results["identity_gap"] = std::abs(dec.direct_dp - dec.decomposed_dp);
  results["p_same"] = dec.p_same;
  ordered_json hop_json;
  for (const auto& [k, v] : per_hop) hop_json[std::to_string(k)] = v;
  results["signed_contribution_per_hop"] = hop_json;
  results["terms"] = static_cast<int>(dec.terms.size());
  if (a.fill) results["fill"] = *a.fill;

  ordered_json rep;
  rep["command"] = "decompose-dp";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}, {"scores", a.scores}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct SplitArgs {
  GraphArgs graph;
  double train_fraction = 0.8;
  uint64_t seed = 0;
  std::string out = ".";
};

int run_split(const SplitArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  sw.lap("load");

  auto split = split_edges(g, a.train_fraction, a.seed);
  sw.lap("split");

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  {
    auto eo = open_out(dir / "train_edges.tsv");
    auto ao = open_out(dir / "train_attrs.tsv");
    serialize(split.train_graph, eo, ao);
  }
  auto dump_pairs = [&](const fs::path& p, const std::vector<std::pair<int, int>>& pairs) {
    auto out = open_out(p);
    for (auto [i, j] : pairs) out << g.original_ids[i] << "\t" << g.original_ids[j] << "\n";
  };
  dump_pairs(dir / "test_positives.tsv", split.test_positives);
  dump_pairs(dir / "test_negatives.tsv", split.test_negatives);
  sw.lap("write");

  ordered_json results;
  results["seed"] = split.seed;
  results["train_fraction"] = a.train_fraction;
  results["train_edges"] = split.train_graph.m();
  results["test_positives"] = static_cast<int>(split.test_positives.size());
  results["test_negatives"] = static_cast<int>(split.test_negatives.size());
  results["files"] = {"train_edges.tsv", "train_attrs.tsv", "test_positives.tsv",
                      "test_negatives.tsv"};

  ordered_json rep;
  rep["command"] = "split";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct ToyArgs {
  std::string variant = "star";
  int n = 10;
  std::string p = "1/2";
  std::string out = ".";
};

int run_toygraph(const ToyArgs& a) {
  Stopwatch sw;
  AttributedGraph g;
  ToyOracle oracle;
  if (a.variant == "star") {
    const auto slash = a.p.find('/');
    long long num = 0, den = 0;
    if (slash == std::string::npos || !detail::parse_ll(a.p.substr(0, slash), num) ||
        !detail::parse_ll(a.p.substr(slash + 1), den)) {
      throw io_error("--p expects a fraction like 2/3");
    }
    g = gen_star(a.n, static_cast<int>(num), static_cast<int>(den));
    oracle = star_oracle(a.n, static_cast<int>(num), static_cast<int>(den));
  } else if (a.variant == "a" || a.variant == "b" || a.variant == "c") {
    g = gen_toy(a.variant[0], a.n);
    oracle = toy_oracle(a.variant[0], a.n);
  } else {
    throw io_error("variant must be star, a, b or c");
  }
  sw.lap("generate");

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  {
    auto eo = open_out(dir / "edges.tsv");
    auto ao = open_out(dir / "attrs.tsv");
    serialize(g, eo, ao);
  }
  sw.lap("write");

  ordered_json results;
  results["variant"] = a.variant;
  results["n_parameter"] = a.n;
  if (a.variant == "star") results["p"] = a.p;
  ordered_json oj;
  bool all_match = true;
  if (oracle.assortativity) {
    ordered_json e;
    e["exact"] = oracle.assortativity->str();
    e["value"] = oracle.assortativity->value();
    const double measured = assortativity(g);
    e["measured"] = measured;
    all_match = all_match && std::abs(measured - oracle.assortativity->value()) <= 1e-12;
    oj["assortativity"] = e;
  }
  ordered_json nbs;
  for (const auto& [k, rat] : oracle.nb) {
    ordered_json e;
    e["exact"] = rat.str();
    e["value"] = rat.value();
    const double measured = nb(g, k);
    e["measured"] = measured;
    all_match = all_match && std::abs(measured - rat.value()) <= 1e-12;
    nbs[std::to_string(k)] = e;
  }
  oj["nb"] = nbs;
  results["oracle"] = oj;
  results["measured_matches_oracle"] = all_match;
  results["files"] = {"edges.tsv", "attrs.tsv"};
  sw.lap("verify");

  ordered_json rep;
  rep["command"] = "toygraph";
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct KhopsArgs {
  GraphArgs graph;
  int k = 1;
  std::string method = "bfs";
  int threads = 0;
  double threshold = 0.5;
  bool emit_pairs = false;
  std::string out = ".";
};

int run_khops(const KhopsArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  sw.lap("load");

  const int threads = a.threads > 0 ? a.threads : default_threads();
  std::vector<KHopIndex> idx;
  if (a.method == "bfs") {
    idx = khop_bfs(g, a.k, threads);
  } else if (a.method == "power") {
    for (int k = 1; k <= a.k; ++k) idx.push_back(khop_power(g, k));
  } else if (a.method == "recursive") {
    idx = khop_recursive(g, a.k);
  } else {
    throw io_error("method must be bfs, power or recursive");
  }
  sw.lap("khop");

  ordered_json results;
  results["k"] = a.k;
  results["method"] = a.method;
  results["threads"] = a.method == "bfs" ? threads : 1;
  ordered_json per_hop;
  for (const auto& ix : idx) {
    ordered_json d;
    d["nodes_with_k_hop"] = static_cast<int>(ix.v_k.size());
    d["ordered_pairs"] = ix.pair_count;
    per_hop[std::to_string(ix.k)] = d;
  }
  results["per_hop"] = per_hop;
  auto hs = meaningful_hops(g, a.threshold);
  results["meaningful_hops"] = hs.hops;

  if (a.emit_pairs) {
    auto out = open_out(fs::path(a.out) / "khop_pairs.tsv");
    const auto& ix = idx.back();
    for (int v = 0; v < ix.n; ++v) {
      for (int t : ix.rows[v]) {
        if (g.directed || t > v) {
          out << g.original_ids[v] << "\t" << g.original_ids[t] << "\t1\n";
        }
      }
    }
    results["files"] = {"khop_pairs.tsv"};
    sw.lap("write");
  }

  ordered_json rep;
  rep["command"] = "khops";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct MitPostArgs {
  GraphArgs graph;
  std::string scores;
  std::string pairs;
  bool asymmetric = false;
  int k = 1;
  double alpha = 0.0;
  std::vector<double> sweep_alphas;
  int epochs = 500;
  double lr = 0.01;
  int eval_every = 10;
  RelaxationConfig relax;
  std::string out = ".";
};

int run_mitigate_post(const MitPostArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  auto sm = load_scores_file(a.scores, g, !a.asymmetric);
  sw.lap("load");

  PostOptions opt;
  opt.alpha = a.alpha;
  opt.epochs = a.epochs;
  opt.lr = a.lr;
  opt.eval_every = a.eval_every;
  opt.relax = a.relax;
  if (!a.pairs.empty()) opt.test_pairs = load_pairs_file(a.pairs, g);

  auto res = post_process(g, a.k, sm, opt);
  sw.lap("optimize");

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  write_trajectory_csv(dir / "trajectory.csv", res);
  {
    auto out = open_out(dir / "scores_out.tsv");
    save_scores(*res.final_scores, g, out);
  }

  ordered_json results;
  results["mode"] = "post";
  results["k"] = a.k;
  results["alpha"] = a.alpha;
  results["epochs"] = a.epochs;
  results["lr"] = a.lr;
  results["eval_every"] = a.eval_every;
  results["relaxation"] = relax_json(a.relax);
  results["best_iteration"] = res.best_iteration;
  results["stop_reason"] = res.stop_reason;
  results["relaxed_start"] = res.relaxed_trajectory.front();
  results["relaxed_end"] = res.relaxed_trajectory.back();
  results["perturbation_norm"] = res.perturbation.norm();
  results["before"] = snapshot_json(res.before);
  results["after"] = snapshot_json(res.after);
  results["files"] = {"trajectory.csv", "scores_out.tsv"};

  if (!a.sweep_alphas.empty()) {
    auto rows = alpha_sweep(g, a.k, sm, a.sweep_alphas, opt);
    auto csv = open_out(dir / "sweep.csv");
    csv << "alpha,nf,auc,u_norm\n";
    ordered_json sweep;
    for (const auto& row : rows) {
      csv << num(row.alpha) << "," << num(row.bias_after) << ","
          << (row.auc_after ? num(*row.auc_after) : "nan") << "," << num(row.perturbation_norm)
          << "\n";
      ordered_json r;
      r["alpha"] = row.alpha;
      r["nf"] = row.bias_after;
      if (row.auc_after) r["auc"] = *row.auc_after;
      r["u_norm"] = row.perturbation_norm;
      sweep.push_back(r);
    }
    results["sweep"] = sweep;
    results["files"].push_back("sweep.csv");
    sw.lap("sweep");
  }

  ordered_json rep;
  rep["command"] = "mitigate post";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}, {"scores", a.scores}};
  if (!a.pairs.empty()) rep["inputs"]["pairs"] = a.pairs;
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct MitPreContArgs {
  GraphArgs graph;
  int k = 1;
  double alpha = 0.1;
  int epochs = 200;
  double lr = 0.01;
  int eval_every = 10;
  double threshold = 0.5;
  bool support_only = false;
  RelaxationConfig relax;
  std::string out = ".";
};

int run_mitigate_precont(const MitPreContArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  sw.lap("load");

  PreContinuousOptions opt;
  opt.alpha = a.alpha;
  opt.epochs = a.epochs;
  opt.lr = a.lr;
  opt.eval_every = a.eval_every;
  opt.threshold = a.threshold;
  opt.support_only = a.support_only;
  opt.symmetric = !g.directed;
  opt.relax = a.relax;

  auto res = pre_process_continuous(g, a.k, opt);
  sw.lap("optimize");

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  write_trajectory_csv(dir / "trajectory.csv", res);
  {
    auto eo = open_out(dir / "edges_out.tsv");
    auto ao = open_out(dir / "attrs_out.tsv");
    serialize(*res.final_graph, eo, ao);
  }
  {
    auto out = open_out(dir / "adjacency.tsv");
    for (int i = 0; i < g.n; ++i) {
      for (int j = 0; j < g.n; ++j) {
        if (res.final_adjacency(i, j) != 0.0) {
          out << g.original_ids[i] << "\t" << g.original_ids[j] << "\t"
              << num(res.final_adjacency(i, j)) << "\n";
        }
      }
    }
  }

  ordered_json results;
  results["mode"] = "pre-continuous";
  results["k"] = a.k;
  results["alpha"] = a.alpha;
  results["epochs"] = a.epochs;
  results["lr"] = a.lr;
  results["eval_every"] = a.eval_every;
  results["threshold"] = a.threshold;
  results["support_only"] = a.support_only;
  results["relaxation"] = relax_json(a.relax);
  results["best_iteration"] = res.best_iteration;
  results["stop_reason"] = res.stop_reason;
  results["relaxed_start"] = res.relaxed_trajectory.front();
  results["relaxed_end"] = res.relaxed_trajectory.back();
  results["final_edges"] = res.final_graph->m();
  results["before"] = snapshot_json(res.before);
  results["after"] = snapshot_json(res.after);
  results["correlation_vs_target"] = correlation_json(bias_trajectory_correlation(res, a.k));
  results["files"] = {"trajectory.csv", "edges_out.tsv", "attrs_out.tsv", "adjacency.tsv"};

  ordered_json rep;
  rep["command"] = "mitigate pre-cont";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

struct MitPreAddArgs {
  GraphArgs graph;
  int k = 1;
  int budget = 100;
  RelaxationConfig relax;
  std::string out = ".";
};

int run_mitigate_preadd(const MitPreAddArgs& a) {
  Stopwatch sw;
  auto g = load(a.graph);
  sw.lap("load");

  RewireOptions opt;
  opt.budget = a.budget;
  opt.relax = a.relax;
  auto res = rewire_add_edges(g, a.k, opt);
  sw.lap("optimize");

  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create output directory " + dir.string());
  write_trajectory_csv(dir / "trajectory.csv", res);
  {
    auto eo = open_out(dir / "edges_out.tsv");
    auto ao = open_out(dir / "attrs_out.tsv");
    serialize(*res.final_graph, eo, ao);
  }

  ordered_json results;
  results["mode"] = "pre-add";
  results["k"] = a.k;
  results["budget"] = a.budget;
  results["relaxation"] = relax_json(a.relax);
  results["stop_reason"] = res.stop_reason;
  results["edges_added"] = static_cast<int>(res.added_edges.size());
  ordered_json added;
  for (auto [i, j] : res.added_edges) {
    added.push_back({g.original_ids[i], g.original_ids[j]});
  }
  results["added_edges"] = added;
  results["before"] = snapshot_json(res.before);
  results["after"] = snapshot_json(res.after);
  if (res.eval_iterations.size() >= 3) {
    results["correlation_vs_target"] = correlation_json(bias_trajectory_correlation(res, a.k));
  }
  results["files"] = {"trajectory.csv", "edges_out.tsv", "attrs_out.tsv"};

  ordered_json rep;
  rep["command"] = "mitigate pre-add";
  rep["inputs"] = {{"edges", a.graph.edges}, {"attrs", a.graph.attrs}};
  rep["graph"] = graph_json(g);
  rep["results"] = results;
  write_report(a.out, rep, sw);
  return 0;
}

void add_relax_options(CLI::App* cmd, RelaxationConfig& cfg) {
  cmd->add_option("--beta", cfg.beta, "sigmoid steepness of the step relaxation");
  cmd->add_option("--tau", cfg.tau, "step threshold of the relaxation");
  cmd->add_option("--temp", cfg.temp, "logsumexp temperature of the max relaxation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-hop structural bias and link prediction fairness toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  BiasArgs bias_args;
  auto* bias_cmd = app.add_subcommand("bias", "structural bias of an attributed graph");
  add_graph_options(bias_cmd, bias_args.graph);
  bias_cmd->add_option("--hops", bias_args.hops, "hops to evaluate (default: meaningful hops)")
      ->delimiter(',');
  bias_cmd->add_option("--threshold", bias_args.threshold, "coverage threshold for default hops");
  bias_cmd->add_option("--normalizer", bias_args.normalizer, "count or presence")
      ->check(CLI::IsMember({"count", "presence"}));
  bias_cmd->add_option("--top", bias_args.top, "how many hops to rank by bias");
  bias_cmd->add_option("--out", bias_args.out, "output directory");
  bias_cmd->callback([&] { action = [&] { return run_bias(bias_args); }; });

  FairnessArgs fair_args;
  auto* fair_cmd = app.add_subcommand("fairness", "k-hop fairness of a link predictor");
  add_graph_options(fair_cmd, fair_args.graph);
  fair_cmd->add_option("--scores", fair_args.scores, "score file: 'i j s' per line")->required();
  fair_cmd->add_option("--pairs", fair_args.pairs, "labeled pairs 'i j y' for dyadic metrics");
  fair_cmd->add_flag("--asymmetric", fair_args.asymmetric, "scores are direction-specific");
  fair_cmd->add_option("--hops", fair_args.hops, "hops to evaluate (default: meaningful hops)")
      ->delimiter(',');
  fair_cmd->add_option("--threshold", fair_args.threshold, "coverage threshold for default hops");
  fair_cmd->add_option("--out", fair_args.out, "output directory");
  fair_cmd->callback([&] { action = [&] { return run_fairness(fair_args); }; });

  DecomposeArgs dec_args;
  double dec_fill = -1.0;
  auto* dec_cmd = app.add_subcommand("decompose-dp", "split pairwise parity across hops");
  add_graph_options(dec_cmd, dec_args.graph);
  dec_cmd->add_option("--scores", dec_args.scores, "score file: 'i j s' per line")->required();
  dec_cmd->add_flag("--asymmetric", dec_args.asymmetric, "scores are direction-specific");
  auto* fill_opt = dec_cmd->add_option("--fill", dec_fill, "score for pairs missing a value");
  dec_cmd->add_option("--out", dec_args.out, "output directory");
  dec_cmd->callback([&] {
    if (fill_opt->count() > 0) dec_args.fill = dec_fill;
    action = [&] { return run_decompose(dec_args); };
  });

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "hold out edges for link prediction");
  add_graph_options(split_cmd, split_args.graph);
  split_cmd->add_option("--train-fraction", split_args.train_fraction, "edges kept for training");
  split_cmd->add_option("--seed", split_args.seed, "sampling seed");
  split_cmd->add_option("--out", split_args.out, "output directory");
  split_cmd->callback([&] { action = [&] { return run_split(split_args); }; });

  ToyArgs toy_args;
  auto* toy_cmd = app.add_subcommand("toygraph", "closed-form benchmark families");
  toy_cmd->add_option("--variant", toy_args.variant, "star, a, b or c")->required();
  toy_cmd->add_option("--n", toy_args.n, "size parameter")->required();
  toy_cmd->add_option("--p", toy_args.p, "majority fraction for star, e.g. 2/3");
  toy_cmd->add_option("--out", toy_args.out, "output directory");
  toy_cmd->callback([&] { action = [&] { return run_toygraph(toy_args); }; });

  KhopsArgs khops_args;
  auto* khops_cmd = app.add_subcommand("khops", "exact-k neighborhood pairs");
  add_graph_options(khops_cmd, khops_args.graph);
  khops_cmd->add_option("--k", khops_args.k, "hop")->required();
  khops_cmd->add_option("--method", khops_args.method, "bfs, power or recursive")
      ->check(CLI::IsMember({"bfs", "power", "recursive"}));
  khops_cmd->add_option("--threads", khops_args.threads, "BFS worker threads");
  khops_cmd->add_option("--threshold", khops_args.threshold, "coverage threshold for hop list");
  khops_cmd->add_flag("--emit", khops_args.emit_pairs, "write khop_pairs.tsv");
  khops_cmd->add_option("--out", khops_args.out, "output directory");
  khops_cmd->callback([&] { action = [&] { return run_khops(khops_args); }; });

  auto* mit_cmd = app.add_subcommand("mitigate", "reduce measured bias");
  mit_cmd->require_subcommand(1);

  MitPostArgs post_args;
  auto* post_cmd = mit_cmd->add_subcommand("post", "perturb scores on the exact-k pairs");
  add_graph_options(post_cmd, post_args.graph);
  post_cmd->add_option("--scores", post_args.scores, "score file: 'i j s' per line")->required();
  post_cmd->add_option("--pairs", post_args.pairs, "labeled pairs for utility snapshots");
  post_cmd->add_flag("--asymmetric", post_args.asymmetric, "scores are direction-specific");
  post_cmd->add_option("--k", post_args.k, "target hop")->required();
  post_cmd->add_option("--alpha", post_args.alpha, "perturbation size penalty");
  post_cmd->add_option("--alphas", post_args.sweep_alphas, "also sweep these penalties")
      ->delimiter(',');
  post_cmd->add_option("--epochs", post_args.epochs, "gradient steps");
  post_cmd->add_option("--lr", post_args.lr, "learning rate");
  post_cmd->add_option("--eval-every", post_args.eval_every, "exact evaluation period");
  add_relax_options(post_cmd, post_args.relax);
  post_cmd->add_option("--out", post_args.out, "output directory");
  post_cmd->callback([&] { action = [&] { return run_mitigate_post(post_args); }; });

  MitPreContArgs precont_args;
  auto* precont_cmd = mit_cmd->add_subcommand("pre-cont", "relax the adjacency matrix itself");
  add_graph_options(precont_cmd, precont_args.graph);
  precont_cmd->add_option("--k", precont_args.k, "target hop")->required();
  precont_cmd->add_option("--alpha", precont_args.alpha, "drift penalty");
  precont_cmd->add_option("--epochs", precont_args.epochs, "gradient steps");
  precont_cmd->add_option("--lr", precont_args.lr, "learning rate");
  precont_cmd->add_option("--eval-every", precont_args.eval_every, "exact evaluation period");
  precont_cmd->add_option("--threshold", precont_args.threshold, "hard readout threshold");
  precont_cmd->add_flag("--support-only", precont_args.support_only,
                        "only existing entries may move");
  add_relax_options(precont_cmd, precont_args.relax);
  precont_cmd->add_option("--out", precont_args.out, "output directory");
  precont_cmd->callback([&] { action = [&] { return run_mitigate_precont(precont_args); }; });

  MitPreAddArgs preadd_args;
  auto* preadd_cmd = mit_cmd->add_subcommand("pre-add", "greedy bias-reducing edge additions");
  add_graph_options(preadd_cmd, preadd_args.graph);
  preadd_cmd->add_option("--k", preadd_args.k, "target hop")->required();
  preadd_cmd->add_option("--budget", preadd_args.budget, "maximum edges to add");
  add_relax_options(preadd_cmd, preadd_args.relax);
  preadd_cmd->add_option("--out", preadd_args.out, "output directory");
  preadd_cmd->callback([&] { action = [&] { return run_mitigate_preadd(preadd_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 0;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const undefined_metric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
