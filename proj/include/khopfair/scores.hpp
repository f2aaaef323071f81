#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"

namespace khopfair {

/// Sparse pairwise link scores in [0, 1] over an explicit pair domain.
/// Symmetric matrices store one entry per unordered pair and answer both
/// orders; the diagonal is never part of the domain.
class ScoreMatrix {
 public:
  ScoreMatrix(int n, bool symmetric) : n_(n), symmetric_(symmetric) {
    if (n < 1) throw io_error("score matrix needs at least one node");
  }

  int n() const { return n_; }
  bool symmetric() const { return symmetric_; }
  std::size_t size() const { return entries_.size(); }

  void set(int i, int j, double score) {
    check_pair(i, j);
    if (!(score >= 0.0 && score <= 1.0)) {
      throw io_error("score out of range at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    entries_[key(i, j)] = score;
  }

  bool has(int i, int j) const {
    if (i == j) return false;
    return entries_.count(key(i, j)) > 0;
  }

  std::optional<double> get(int i, int j) const {
    if (i == j) return std::nullopt;
    auto it = entries_.find(key(i, j));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  double at(int i, int j) const {
    auto v = get(i, j);
    if (!v) {
      throw io_error("domain gap at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    return *v;
  }

  /// Entries in canonical (i, j) order; symmetric matrices list i < j once.
  std::vector<std::tuple<int, int, double>> sorted_entries() const {
    std::vector<std::tuple<int, int, double>> out;
    out.reserve(entries_.size());
    for (const auto& [k, s] : entries_) {
      out.emplace_back(static_cast<int>(k / n_), static_cast<int>(k % n_), s);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Scores 1.0 exactly on the edges of g.
  static ScoreMatrix edge_indicator(const AttributedGraph& g) {
    ScoreMatrix sm(g.n, !g.directed);
    for (auto [i, j] : g.edges) sm.set(i, j, 1.0);
    return sm;
  }

 private:
  void check_pair(int i, int j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_) throw io_error("score index out of range");
    if (i == j) throw io_error("diagonal scores are not part of the domain");
  }

  uint64_t key(int i, int j) const {
    if (symmetric_ && i > j) std::swap(i, j);
    return static_cast<uint64_t>(i) * n_ + j;
  }

  int n_;
  bool symmetric_;
  std::unordered_map<uint64_t, double> entries_;
};

/// Parses "i j score" lines using the same id space as the graph input files;
/// ids are remapped through g.original_ids.
inline ScoreMatrix load_scores(std::istream& src, const AttributedGraph& g, bool symmetric = true) {
  std::unordered_map<long long, int> dense;
  for (int v = 0; v < g.n; ++v) dense[g.original_ids[v]] = v;
  ScoreMatrix sm(g.n, symmetric);
  std::string line;
  int lineno = 0;
  while (std::getline(src, line)) {
    lineno++;
    auto toks = detail::tokens(detail::strip_comment(line));
    if (toks.empty()) continue;
    long long i, j;
    double s;
    if (toks.size() != 3 || !detail::parse_ll(toks[0], i) || !detail::parse_ll(toks[1], j) ||
        !detail::parse_double(toks[2], s)) {
      throw io_error("score line " + std::to_string(lineno) + ": expected \"i j score\", got \"" + line + "\"");
    }
    auto it_i = dense.find(i);
    auto it_j = dense.find(j);
    if (it_i == dense.end() || it_j == dense.end()) {
      throw io_error("score line " + std::to_string(lineno) + ": unknown node id");
    }
    sm.set(it_i->second, it_j->second, s);
  }
  return sm;
}

inline ScoreMatrix load_scores_file(const std::string& path, const AttributedGraph& g,
                                    bool symmetric = true) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open score file: " + path);
  return load_scores(in, g, symmetric);
}

inline void save_scores(const ScoreMatrix& sm, const AttributedGraph& g, std::ostream& out) {
  for (const auto& [i, j, s] : sm.sorted_entries()) {
    out << g.original_ids[i] << ' ' << g.original_ids[j] << ' ' << detail::fmt_double(s) << '\n';
  }
}

}  // namespace khopfair
