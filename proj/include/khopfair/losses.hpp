#pragma once

#include <vector>

#include "khopfair/autodiff.hpp"
#include "khopfair/errors.hpp"
#include "khopfair/graph.hpp"
#include "khopfair/khop.hpp"
#include "khopfair/metrics.hpp"
#include "khopfair/scores.hpp"

namespace khopfair {

inline Mat dense_khop_mask(const KHopIndex& idx) {
  Mat m = Mat::Zero(idx.n, idx.n);
  for (int v = 0; v < idx.n; ++v) {
    for (int t : idx.rows[v]) m(v, t) = 1.0;
  }
  return m;
}

/// Scores laid out dense on the exact-k pairs; anything off the mask is zero.
inline Mat dense_base_scores(const ScoreMatrix& sm, const KHopIndex& idx) {
  Mat base = Mat::Zero(idx.n, idx.n);
  for (int v = 0; v < idx.n; ++v) {
    for (int t : idx.rows[v]) base(v, t) = sm.at(v, t);
  }
  return base;
}

/// Smooth post-processing objective: clip01(P + U .* mask) pushed through the
/// group-exposure pipeline, the max replaced by logsumexp. The mask, the group
/// memberships and the exposure normalizers are constants, so the whole
/// fairness term is linear in the perturbed scores up to the clip.
class PostLoss {
 public:
  struct Emitted {
    int u = -1;
    int p_prime = -1;
    int relaxed_nf = -1;
    int reg = -1;
    int loss = -1;
  };

  PostLoss(const AttributedGraph& g, const KHopIndex& idx, const ScoreMatrix& sm,
           double alpha, RelaxationConfig cfg)
      : alpha_(alpha), cfg_(cfg) {
    cfg_.check();
    if (!(alpha >= 0.0)) throw io_error("alpha must be non-negative");
    mask_ = dense_khop_mask(idx);
    base_ = dense_base_scores(sm, idx);

    const int n = g.n, ng = g.num_groups;
    gcols_ = Mat::Zero(n, ng);
    for (int v = 0; v < n; ++v) gcols_(v, g.groups[v]) = 1.0;

    std::vector<int> counts(ng, 0);
    for (int v : idx.v_k) counts[g.groups[v]]++;
    for (int s = 0; s < ng; ++s) {
      if (counts[s] > 0) defined_.push_back(s);
    }
    if (defined_.size() < 2) {
      throw undefined_metric_error("fewer than two groups have " + std::to_string(idx.k) +
                                   "-hop members");
    }

    const int d = static_cast<int>(defined_.size());
    wrows_ = Mat::Zero(d, n);
    for (int r = 0; r < d; ++r) {
      const int s = defined_[r];
      for (int v : idx.v_k) {
        if (g.groups[v] == s) {
          wrows_(r, v) = 1.0 / (static_cast<double>(counts[s]) * idx.rows[v].size());
        }
      }
    }

    diff_ = Mat::Zero(d * (d - 1), d);
    int row = 0;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (a == b) continue;
        diff_(row, a) = 1.0;
        diff_(row, b) = -1.0;
        row++;
      }
    }
  }

  Emitted emit(Tape& t, const Mat& u_value) const {
    Emitted e;
    e.u = t.input(u_value);
    const int mask_c = t.constant(mask_);
    const int um = t.hadamard(e.u, mask_c);
    e.p_prime = t.clip01(t.add(t.constant(base_), um));
    const int x = t.hadamard(e.p_prime, mask_c);
    const int psi = t.matmul(x, t.constant(gcols_));
    const int phi = t.matmul(t.constant(wrows_), psi);
    const int cand = t.matmul(t.constant(diff_), phi);
    e.relaxed_nf = t.logsumexp_max(cand, cfg_.temp);
    e.reg = t.frobenius(um);
    e.loss = t.add(e.relaxed_nf, t.scalar_mul(alpha_, e.reg));
    return e;
  }

  /// clip01(base + u .* mask); the dense scores the emitted loss sees.
  Mat clipped(const Mat& u) const {
    return (base_ + u.cwiseProduct(mask_)).array().max(0.0).min(1.0).matrix();
  }

  /// Hard fairness value of a dense score matrix, same constants as the
  /// relaxed pipeline but a true max.
  double exact_nf(const Mat& p) const {
    Mat phi = wrows_ * (p.cwiseProduct(mask_) * gcols_);
    Mat cand = diff_ * phi;
    return cand.maxCoeff();
  }

  const Mat& mask() const { return mask_; }
  const Mat& base() const { return base_; }
  double alpha() const { return alpha_; }
  const RelaxationConfig& config() const { return cfg_; }

 private:
  Mat mask_, base_, gcols_, wrows_, diff_;
  std::vector<int> defined_;
  double alpha_ = 0.0;
  RelaxationConfig cfg_;
};

/// Convenience wrapper building the post-processing loss on a fresh tape.
inline PostLoss::Emitted relaxed_nf_loss(Tape& t, const AttributedGraph& g,
                                         const KHopIndex& idx, const ScoreMatrix& sm,
                                         const Mat& u, double alpha, RelaxationConfig cfg) {
  return PostLoss(g, idx, sm, alpha, cfg).emit(t, u);
}

/// Differentiable structural objective: rebuilds the exact-k indicator from a
/// real-valued adjacency with sigmoid steps, then soft group exposures with a
/// soft membership weight, then logsumexp over the group gaps. On binary
/// graphs the exposure rows sum to one, making the second target column an
/// exact mirror of the first; it is dropped so the smooth max has a unique
/// argmax and the relaxation error vanishes as beta grows.
class PreLoss {
 public:
  struct Emitted {
    int a = -1;
    int xk = -1;
    int relaxed_nb = -1;
    int reg = -1;
    int loss = -1;
  };

  PreLoss(const AttributedGraph& g, int k, double alpha, RelaxationConfig cfg)
      : k_(k), alpha_(alpha), cfg_(cfg) {
    cfg_.check();
    if (k < 1) throw io_error("k must be at least 1");
    if (!(alpha >= 0.0)) throw io_error("alpha must be non-negative");
    if (g.num_groups < 2) {
      throw undefined_metric_error("structural bias needs at least two groups");
    }
    const int n = g.n, ng = g.num_groups;
    a_orig_ = Mat::Zero(n, n);
    for (int v = 0; v < n; ++v) {
      const int b = g.offsets[v], e = g.offsets[v + 1];
      for (int t = b; t < e; ++t) {
        a_orig_(v, g.neighbors[t]) = g.weighted ? g.arc_weights[t] : 1.0;
      }
    }
    offdiag_ = Mat::Ones(n, n) - Mat::Identity(n, n);
    gcols_ = Mat::Zero(n, ng);
    for (int v = 0; v < n; ++v) gcols_(v, g.groups[v]) = 1.0;
    grows_ = gcols_.transpose();
    ones_col_ = Mat::Ones(n, 1);
    ones_row_g_ = Mat::Ones(1, ng);

    diff_ = Mat::Zero(ng * (ng - 1), ng);
    int row = 0;
    for (int a = 0; a < ng; ++a) {
      for (int b = 0; b < ng; ++b) {
        if (a == b) continue;
        diff_(row, a) = 1.0;
        diff_(row, b) = -1.0;
        row++;
      }
    }
    if (ng == 2) {
      sel_ = Mat::Zero(2, 1);
      sel_(0, 0) = 1.0;
    }
  }

  Emitted emit(Tape& t, const Mat& a_value) const {
    Emitted e;
    e.a = t.input(a_value);
    const int od = t.constant(offdiag_);
    int prev = t.hadamard(e.a, od);
    int cum = prev;
    for (int j = 2; j <= k_; ++j) {
      const int s = t.matmul(prev, e.a);
      const int d = t.sub(chi(t, s), chi(t, cum));
      const int lj = t.hadamard(chi(t, d), od);
      if (j < k_) cum = t.add(cum, lj);
      prev = lj;
    }
    e.xk = prev;

    const int lam = t.matmul(e.xk, t.constant(ones_col_));
    const int psi = t.matmul(e.xk, t.constant(gcols_));
    const int onesg = t.constant(ones_row_g_);
    const int lam_b = t.matmul(lam, onesg);
    const int f = t.safe_div(psi, lam_b);
    const int mu = chi(t, lam);
    const int mu_b = t.matmul(mu, onesg);
    const int wt = t.hadamard(mu_b, f);
    const int grows_c = t.constant(grows_);
    const int num = t.matmul(grows_c, wt);
    const int den_b = t.matmul(t.matmul(grows_c, mu), onesg);
    const int phi = t.safe_div(num, den_b);
    int cand = t.matmul(t.constant(diff_), phi);
    if (sel_.size() > 0) cand = t.matmul(cand, t.constant(sel_));
    e.relaxed_nb = t.logsumexp_max(cand, cfg_.temp);
    e.reg = t.frobenius(t.sub(e.a, t.constant(a_orig_)));
    e.loss = t.add(e.relaxed_nb, t.scalar_mul(alpha_, e.reg));
    return e;
  }

  double relaxed_nb_value(const Mat& a) const {
    Tape t;
    return t.value(emit(t, a).relaxed_nb)(0, 0);
  }

  const Mat& original_adjacency() const { return a_orig_; }
  int k() const { return k_; }
  double alpha() const { return alpha_; }
  const RelaxationConfig& config() const { return cfg_; }

 private:
  int chi(Tape& t, int x) const { return t.sigmoid_chi(x, cfg_.beta, cfg_.tau); }

  Mat a_orig_, offdiag_, gcols_, grows_, ones_col_, ones_row_g_, diff_, sel_;
  int k_ = 1;
  double alpha_ = 0.0;
  RelaxationConfig cfg_;
};

/// Convenience wrapper building the structural loss on a fresh tape.
inline PreLoss::Emitted relaxed_nb_loss(Tape& t, const AttributedGraph& g, int k,
                                        const Mat& a, double alpha, RelaxationConfig cfg) {
  return PreLoss(g, k, alpha, cfg).emit(t, a);
}

}  // namespace khopfair
