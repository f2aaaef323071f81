#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "khopfair/errors.hpp"
#include "khopfair/random.hpp"

namespace khopfair {

/// Attributed graph over dense node ids 0..n-1 with a group label per node
/// and a CSR adjacency view (out-neighbors when directed). Construct through
/// make_graph or load_graph; treat as immutable afterwards.
struct AttributedGraph {
  int n = 0;
  bool directed = false;
  bool weighted = false;
  int num_groups = 0;

  // canonical edge list: i < j when undirected, sorted lexicographically,
  // no self-loops, no duplicates
  std::vector<std::pair<int, int>> edges;
  std::vector<double> edge_weights;  // aligned with edges when weighted

  std::vector<int> groups;                    // size n, values in 0..num_groups-1
  std::vector<long long> original_ids;        // dense id -> id used in the input
  std::vector<long long> original_group_ids;  // dense group -> label used in the input

  // CSR adjacency
  std::vector<int> offsets;        // size n+1
  std::vector<int> neighbors;      // sorted within each row
  std::vector<double> arc_weights; // aligned with neighbors when weighted

  int m() const { return static_cast<int>(edges.size()); }
  int degree(int v) const { return offsets[v + 1] - offsets[v]; }

  const int* row_begin(int v) const { return neighbors.data() + offsets[v]; }
  const int* row_end(int v) const { return neighbors.data() + offsets[v + 1]; }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    return std::binary_search(row_begin(i), row_end(i), j);
  }

  double arc_weight(int i, int j) const {
    const int* b = row_begin(i);
    const int* e = row_end(i);
    const int* it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return 0.0;
    if (!weighted) return 1.0;
    return arc_weights[it - neighbors.data()];
  }

  std::vector<int> group_sizes() const {
    std::vector<int> sizes(num_groups, 0);
    for (int gr : groups) sizes[gr]++;
    return sizes;
  }
};

/// Canonicalizes and validates raw edge/group data. Throws io_error on
/// structural violations (self-loops, out-of-range endpoints, non-positive
/// weights, non-contiguous group labels). Duplicate edges collapse to their
/// first occurrence.
inline AttributedGraph make_graph(int n, std::vector<std::pair<int, int>> edges,
                                  std::vector<double> weights, std::vector<int> groups,
                                  bool directed = false, bool weighted = false,
                                  std::vector<long long> original_ids = {},
                                  std::vector<long long> original_group_ids = {}) {
  if (n <= 0) throw io_error("graph must have at least one node");
  if (static_cast<int>(groups.size()) != n) throw io_error("group vector size does not match node count");
  if (weighted && weights.size() != edges.size()) throw io_error("weight vector size does not match edge count");

  int num_groups = 0;
  for (int gr : groups) {
    if (gr < 0) throw io_error("negative group id");
    num_groups = std::max(num_groups, gr + 1);
  }
  std::vector<int> seen_group(num_groups, 0);
  for (int gr : groups) seen_group[gr] = 1;
  for (int s = 0; s < num_groups; ++s) {
    if (!seen_group[s]) throw io_error("group ids not contiguous: group " + std::to_string(s) + " is empty");
  }

  for (auto& [i, j] : edges) {
    if (i < 0 || i >= n || j < 0 || j >= n) throw io_error("edge endpoint out of range");
    if (i == j) throw io_error("self-loop at node " + std::to_string(i));
    if (!directed && i > j) std::swap(i, j);
  }
  if (weighted) {
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) throw io_error("edge weights must be finite and strictly positive");
    }
  }

  // stable sort + adjacent unique keeps the first occurrence of a duplicate
  std::vector<int> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return edges[a] < edges[b]; });
  std::vector<std::pair<int, int>> ce;
  std::vector<double> cw;
  ce.reserve(edges.size());
  for (int idx : order) {
    if (!ce.empty() && ce.back() == edges[idx]) continue;
    ce.push_back(edges[idx]);
    if (weighted) cw.push_back(weights[idx]);
  }

  AttributedGraph g;
  g.n = n;
  g.directed = directed;
  g.weighted = weighted;
  g.num_groups = num_groups;
  g.edges = std::move(ce);
  g.edge_weights = std::move(cw);
  g.groups = std::move(groups);

  if (original_ids.empty()) {
    original_ids.resize(n);
    for (int v = 0; v < n; ++v) original_ids[v] = v;
  }
  if (original_group_ids.empty()) {
    original_group_ids.resize(num_groups);
    for (int s = 0; s < num_groups; ++s) original_group_ids[s] = s;
  }
  g.original_ids = std::move(original_ids);
  g.original_group_ids = std::move(original_group_ids);

  // CSR; undirected edges contribute both directions
  std::vector<int> deg(n, 0);
  for (auto [i, j] : g.edges) {
    deg[i]++;
    if (!directed) deg[j]++;
  }
  g.offsets.assign(n + 1, 0);
  for (int v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + deg[v];
  g.neighbors.resize(g.offsets[n]);
  if (weighted) g.arc_weights.resize(g.offsets[n]);
  std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [i, j] = g.edges[e];
    g.neighbors[cursor[i]] = j;
    if (weighted) g.arc_weights[cursor[i]] = g.edge_weights[e];
    cursor[i]++;
    if (!directed) {
      g.neighbors[cursor[j]] = i;
      if (weighted) g.arc_weights[cursor[j]] = g.edge_weights[e];
      cursor[j]++;
    }
  }
  // rows need sorting: insertion order above follows the edge list, not ids
  for (int v = 0; v < n; ++v) {
    const int b = g.offsets[v], e = g.offsets[v + 1];
    if (weighted) {
      std::vector<std::pair<int, double>> row(e - b);
      for (int t = b; t < e; ++t) row[t - b] = {g.neighbors[t], g.arc_weights[t]};
      std::sort(row.begin(), row.end());
      for (int t = b; t < e; ++t) {
        g.neighbors[t] = row[t - b].first;
        g.arc_weights[t] = row[t - b].second;
      }
    } else {
      std::sort(g.neighbors.begin() + b, g.neighbors.begin() + e);
    }
  }
  return g;
}

struct LoadOptions {
  bool directed = false;
  bool weighted = false;
};

namespace detail {

inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline bool parse_ll(const std::string& tok, long long& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(tok, &used);
    return used == tok.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(tok, &used);
    return used == tok.size();
  } catch (...) {
    return false;
  }
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

// shortest decimal form that round-trips the double
inline std::string fmt_double(double x) {
  for (int prec = 15; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    if (std::stod(os.str()) == x) return os.str();
  }
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

/// Parses "i j [w]" edge lines and "i group" attribute lines ('#' starts a
/// comment, blank lines ignored). Node ids may be arbitrary non-negative
/// integers; they are remapped to 0..n-1 in ascending order and the original
/// ids kept. Group labels are remapped the same way. Every edge endpoint must
/// carry an attribute line, otherwise "unattributed node <id>" is raised.
inline AttributedGraph load_graph(std::istream& edge_src, std::istream& attr_src,
                                  LoadOptions opt = {}) {
  std::map<long long, long long> node_group;  // original id -> original group
  std::string line;
  int lineno = 0;
  while (std::getline(attr_src, line)) {
    lineno++;
    auto toks = detail::tokens(detail::strip_comment(line));
    if (toks.empty()) continue;
    long long id, grp;
    if (toks.size() != 2 || !detail::parse_ll(toks[0], id) || !detail::parse_ll(toks[1], grp)) {
      throw io_error("attribute line " + std::to_string(lineno) + ": expected \"node group\", got \"" + line + "\"");
    }
    if (id < 0) throw io_error("attribute line " + std::to_string(lineno) + ": negative node id");
    if (grp < 0) throw io_error("attribute line " + std::to_string(lineno) + ": negative group id");
    auto it = node_group.find(id);
    if (it != node_group.end()) {
      if (it->second != grp) {
        throw io_error("attribute line " + std::to_string(lineno) + ": conflicting group for node " + std::to_string(id));
      }
      continue;
    }
    node_group[id] = grp;
  }
  if (node_group.empty()) throw io_error("attribute source defines no nodes");

  std::unordered_map<long long, int> dense;
  std::vector<long long> original_ids;
  original_ids.reserve(node_group.size());
  for (auto& [id, grp] : node_group) {
    dense[id] = static_cast<int>(original_ids.size());
    original_ids.push_back(id);
  }

  std::map<long long, int> dense_group;
  for (auto& [id, grp] : node_group) dense_group.emplace(grp, 0);
  std::vector<long long> original_group_ids;
  for (auto& [grp, slot] : dense_group) {
    slot = static_cast<int>(original_group_ids.size());
    original_group_ids.push_back(grp);
  }

  const int n = static_cast<int>(original_ids.size());
  std::vector<int> groups(n);
  for (auto& [id, grp] : node_group) groups[dense[id]] = dense_group[grp];

  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
  lineno = 0;
  while (std::getline(edge_src, line)) {
    lineno++;
    auto toks = detail::tokens(detail::strip_comment(line));
    if (toks.empty()) continue;
    long long i, j;
    double w = 1.0;
    bool ok = (toks.size() == 2 || toks.size() == 3) &&
              detail::parse_ll(toks[0], i) && detail::parse_ll(toks[1], j);
    if (ok && toks.size() == 3) ok = detail::parse_double(toks[2], w);
    if (!ok) {
      throw io_error("edge line " + std::to_string(lineno) + ": expected \"i j [w]\", got \"" + line + "\"");
    }
    if (i < 0 || j < 0) throw io_error("edge line " + std::to_string(lineno) + ": negative node id");
    if (i == j) throw io_error("edge line " + std::to_string(lineno) + ": self-loop at node " + std::to_string(i));
    if (opt.weighted && !(w > 0.0)) {
      throw io_error("edge line " + std::to_string(lineno) + ": weight must be strictly positive");
    }
    auto it_i = dense.find(i);
    if (it_i == dense.end()) throw io_error("unattributed node " + std::to_string(i));
    auto it_j = dense.find(j);
    if (it_j == dense.end()) throw io_error("unattributed node " + std::to_string(j));
    edges.emplace_back(it_i->second, it_j->second);
    weights.push_back(opt.weighted ? w : 1.0);
  }

  if (!opt.weighted) weights.clear();
  return make_graph(n, std::move(edges), std::move(weights), std::move(groups),
                    opt.directed, opt.weighted, std::move(original_ids),
                    std::move(original_group_ids));
}

inline AttributedGraph load_graph_files(const std::string& edge_path, const std::string& attr_path,
                                        LoadOptions opt = {}) {
  std::ifstream es(edge_path);
  if (!es) throw io_error("cannot open edge file: " + edge_path);
  std::ifstream as(attr_path);
  if (!as) throw io_error("cannot open attribute file: " + attr_path);
  return load_graph(es, as, opt);
}

/// Writes the canonical edge list and attributes using the original ids.
/// load_graph(serialize(g)) reconstructs the same graph.
inline void serialize(const AttributedGraph& g, std::ostream& edge_out, std::ostream& attr_out) {
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [i, j] = g.edges[e];
    edge_out << g.original_ids[i] << ' ' << g.original_ids[j];
    if (g.weighted) edge_out << ' ' << detail::fmt_double(g.edge_weights[e]);
    edge_out << '\n';
  }
  for (int v = 0; v < g.n; ++v) {
    attr_out << g.original_ids[v] << ' ' << g.original_group_ids[g.groups[v]] << '\n';
  }
}

struct ValidationReport {
  bool connected = false;
  int components = 0;
  std::vector<int> group_sizes;
  double density = 0.0;
};

/// Connectivity is computed over the undirected support (weak connectivity for
/// directed graphs). Density is m over the number of possible node pairs.
inline ValidationReport validate(const AttributedGraph& g) {
  ValidationReport r;
  r.group_sizes = g.group_sizes();

  std::vector<std::vector<int>> undir(g.n);
  for (auto [i, j] : g.edges) {
    undir[i].push_back(j);
    undir[j].push_back(i);
  }
  std::vector<char> seen(g.n, 0);
  std::vector<int> stack;
  for (int v = 0; v < g.n; ++v) {
    if (seen[v]) continue;
    r.components++;
    seen[v] = 1;
    stack.push_back(v);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int t : undir[u]) {
        if (!seen[t]) {
          seen[t] = 1;
          stack.push_back(t);
        }
      }
    }
  }
  r.connected = (r.components == 1);

  const double pairs = g.directed ? static_cast<double>(g.n) * (g.n - 1)
                                  : static_cast<double>(g.n) * (g.n - 1) / 2.0;
  r.density = pairs > 0 ? g.m() / pairs : 0.0;
  return r;
}

struct SplitResult {
  AttributedGraph train_graph;
  std::vector<std::pair<int, int>> test_positives;
  std::vector<std::pair<int, int>> test_negatives;
  uint64_t seed = 0;
};

/// Uniform edge split. Train size is round(train_fraction * m); the held-out
/// edges become test positives and an equal number of uniformly sampled
/// non-edges become test negatives. Fully determined by the seed.
inline SplitResult split_edges(const AttributedGraph& g, double train_fraction, uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw io_error("train fraction must lie in [0, 1]");
  }
  const int m = g.m();
  const int train_m = static_cast<int>(std::llround(train_fraction * m));
  const int test_m = m - train_m;

  const double total_pairs = g.directed ? static_cast<double>(g.n) * (g.n - 1)
                                        : static_cast<double>(g.n) * (g.n - 1) / 2.0;
  const double free_pairs = total_pairs - m;
  if (free_pairs < test_m) {
    throw io_error("insufficient non-edges: need " + std::to_string(test_m) +
                   ", graph has " + std::to_string(static_cast<long long>(free_pairs)));
  }

  Rng rng(seed);
  std::vector<int> order(m);
  for (int e = 0; e < m; ++e) order[e] = e;
  rng.shuffle(order);

  std::vector<std::pair<int, int>> train_edges;
  std::vector<double> train_weights;
  SplitResult res;
  res.seed = seed;
  for (int t = 0; t < m; ++t) {
    int e = order[t];
    if (t < train_m) {
      train_edges.push_back(g.edges[e]);
      if (g.weighted) train_weights.push_back(g.edge_weights[e]);
    } else {
      res.test_positives.push_back(g.edges[e]);
    }
  }

  // negatives: enumerate when the non-edge pool is small, otherwise rejection
  if (test_m > 0) {
    if (free_pairs <= 4.0 * test_m + 1024.0) {
      std::vector<std::pair<int, int>> pool;
      for (int i = 0; i < g.n; ++i) {
        for (int j = g.directed ? 0 : i + 1; j < g.n; ++j) {
          if (i == j || g.has_edge(i, j)) continue;
          if (g.directed || i < j) pool.emplace_back(i, j);
        }
      }
      rng.partial_shuffle(pool, test_m);
      res.test_negatives.assign(pool.begin(), pool.begin() + test_m);
    } else {
      std::vector<std::vector<int>> picked(g.n);
      while (static_cast<int>(res.test_negatives.size()) < test_m) {
        int i = static_cast<int>(rng.below(g.n));
        int j = static_cast<int>(rng.below(g.n));
        if (i == j) continue;
        if (!g.directed && i > j) std::swap(i, j);
        if (g.has_edge(i, j)) continue;
        auto& row = picked[i];
        if (std::find(row.begin(), row.end(), j) != row.end()) continue;
        row.push_back(j);
        res.test_negatives.emplace_back(i, j);
      }
    }
  }

  res.train_graph = make_graph(g.n, std::move(train_edges), std::move(train_weights),
                               g.groups, g.directed, g.weighted, g.original_ids,
                               g.original_group_ids);
  return res;
}

}  // namespace khopfair
