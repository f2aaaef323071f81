#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"
#include "khopfair/random.hpp"

namespace khopfair {

struct Rational {
  long long num = 0;
  long long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

/// Closed-form expectations for the synthetic families. nb carries only the
/// hops with a closed form.
struct ToyOracle {
  std::optional<Rational> assortativity;
  std::map<int, Rational> nb;
};

/// Star with n peripherals: center is group 0, a fraction p = p_num/p_den of
/// the peripherals is group 0, the rest group 1. Requires integral n*p and
/// 0 < p < 1.
inline AttributedGraph gen_star(int n, int p_num, int p_den) {
  if (n < 2) throw io_error("star needs at least two peripherals");
  if (p_den <= 0 || p_num <= 0 || p_num >= p_den) throw io_error("peripheral fraction must lie in (0, 1)");
  if ((static_cast<long long>(n) * p_num) % p_den != 0) {
    throw io_error("peripheral fraction does not yield an integer count: " + std::to_string(n) +
                   " * " + std::to_string(p_num) + "/" + std::to_string(p_den));
  }
  const int b = static_cast<int>(static_cast<long long>(n) * p_num / p_den);
  std::vector<std::pair<int, int>> edges;
  std::vector<int> groups(n + 1, 1);
  groups[0] = 0;
  for (int i = 1; i <= n; ++i) {
    edges.emplace_back(0, i);
    if (i <= b) groups[i] = 0;
  }
  return make_graph(n + 1, std::move(edges), {}, std::move(groups));
}

inline ToyOracle star_oracle(int n, int p_num, int p_den) {
  if ((static_cast<long long>(n) * p_num) % p_den != 0) {
    throw io_error("peripheral fraction does not yield an integer count");
  }
  const long long b = static_cast<long long>(n) * p_num / p_den;
  ToyOracle o;
  o.assortativity = Rational{-(p_den - p_num), p_den + p_num};
  o.nb[1] = Rational{p_den - p_num, static_cast<long long>(p_den) * (b + 1)};
  return o;
}

/// Two-bridge families over 4n+2 nodes and 4n+1 edges; groups 0 (blue) and
/// 1 (red). Node 0 is the blue bridge, node 1 the red bridge, and the four
/// peripheral blocks of size n follow in fixed order, so generation is fully
/// deterministic.
///
/// variant 'a': both bridges carry n blue and n red leaves directly.
/// variant 'b': each bridge carries n same-colored children, every child
///              carries one opposite-colored leaf.
/// variant 'c': blue bridge carries n blue leaves; red bridge carries n red
///              children, each extended by a blue then a red node (paths of
///              length 3 hanging off the red bridge).
inline AttributedGraph gen_toy(char variant, int n) {
  if (n < 3) throw io_error("two-bridge families need n >= 3");
  const int N = 4 * n + 2;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> groups(N, 0);
  groups[1] = 1;
  edges.emplace_back(0, 1);
  auto block = [&](int t) { return 2 + t; };  // first block starts at node 2
  switch (variant) {
    case 'a':
      for (int t = 0; t < n; ++t) {
        const int bl0 = block(t), rl0 = block(n + t), bl1 = block(2 * n + t), rl1 = block(3 * n + t);
        groups[bl0] = 0; groups[rl0] = 1; groups[bl1] = 0; groups[rl1] = 1;
        edges.emplace_back(0, bl0);
        edges.emplace_back(0, rl0);
        edges.emplace_back(1, bl1);
        edges.emplace_back(1, rl1);
      }
      break;
    case 'b':
      for (int t = 0; t < n; ++t) {
        const int bc = block(t), rl = block(n + t), rc = block(2 * n + t), bl = block(3 * n + t);
        groups[bc] = 0; groups[rl] = 1; groups[rc] = 1; groups[bl] = 0;
        edges.emplace_back(0, bc);
        edges.emplace_back(bc, rl);
        edges.emplace_back(1, rc);
        edges.emplace_back(rc, bl);
      }
      break;
    case 'c':
      for (int t = 0; t < n; ++t) {
        const int bl = block(t), r1 = block(n + t), b2 = block(2 * n + t), r2 = block(3 * n + t);
        groups[bl] = 0; groups[r1] = 1; groups[b2] = 0; groups[r2] = 1;
        edges.emplace_back(0, bl);
        edges.emplace_back(1, r1);
        edges.emplace_back(r1, b2);
        edges.emplace_back(b2, r2);
      }
      break;
    default:
      throw io_error(std::string("unknown variant '") + variant + "', expected a, b or c");
  }
  return make_graph(N, std::move(edges), {}, std::move(groups));
}

inline ToyOracle toy_oracle(char variant, int n) {
  if (n < 3) throw io_error("two-bridge families need n >= 3");
  const long long L = n;
  ToyOracle o;
  o.assortativity = Rational{-1, 4 * L + 1};
  switch (variant) {
    case 'a':
      o.nb[1] = Rational{1, (2 * L + 1) * (2 * L + 1)};
      o.nb[2] = Rational{1, 2 * L + 1};
      o.nb[3] = Rational{0, 1};
      break;
    case 'b':
      o.nb[1] = Rational{L * L + 1, (L + 1) * (2 * L + 1)};
      o.nb[2] = Rational{3, 2 * L + 1};
      o.nb[3] = Rational{2 * L - 3, 2 * L + 1};
      break;
    case 'c':
      o.nb[1] = Rational{L * L - L + 2, 2 * (L + 1) * (2 * L + 1)};
      o.nb[2] = Rational{L * L - 2 * L - 2, (L + 1) * (2 * L + 1)};
      o.nb[3] = Rational{L - 2, 2 * L + 1};
      break;
    default:
      throw io_error(std::string("unknown variant '") + variant + "', expected a, b or c");
  }
  return o;
}

/// Stochastic block model: sizes[b] nodes per block, edge probability
/// probs[b1][b2] (symmetric), group label block_groups[b] per block. Each
/// unordered pair is sampled once in a fixed order, so the graph is a pure
/// function of the seed.
inline AttributedGraph gen_sbm(const std::vector<int>& sizes,
                               const std::vector<std::vector<double>>& probs,
                               const std::vector<int>& block_groups, uint64_t seed) {
  const int nb = static_cast<int>(sizes.size());
  if (nb == 0) throw io_error("sbm needs at least one block");
  if (static_cast<int>(probs.size()) != nb || static_cast<int>(block_groups.size()) != nb) {
    throw io_error("sbm block count mismatch between sizes, probs and groups");
  }
  for (const auto& row : probs) {
    if (static_cast<int>(row.size()) != nb) throw io_error("sbm probability matrix is not square");
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) throw io_error("sbm probabilities must lie in [0, 1]");
    }
  }
  for (int a = 0; a < nb; ++a) {
    for (int b = a + 1; b < nb; ++b) {
      if (probs[a][b] != probs[b][a]) throw io_error("sbm probability matrix must be symmetric");
    }
  }

  int n = 0;
  std::vector<int> node_block;
  for (int b = 0; b < nb; ++b) {
    if (sizes[b] <= 0) throw io_error("sbm block sizes must be positive");
    n += sizes[b];
    node_block.insert(node_block.end(), sizes[b], b);
  }
  std::vector<int> groups(n);
  for (int v = 0; v < n; ++v) groups[v] = block_groups[node_block[v]];

  Rng rng(seed);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.unit() < probs[node_block[i]][node_block[j]]) edges.emplace_back(i, j);
    }
  }
  return make_graph(n, std::move(edges), {}, std::move(groups));
}

}  // namespace khopfair
