#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "khopfair/errors.hpp"

namespace khopfair {

using Mat = Eigen::MatrixXd;

/// Knobs of the smooth surrogates: sigmoid_chi(x) = sigmoid(beta * (x - tau))
/// replaces the step x > tau, logsumexp_max replaces max at temperature temp,
/// abs_eps > 0 smooths abs_sub near zero.
struct RelaxationConfig {
  double beta = 20.0;
  double tau = 0.5;
  double temp = 0.01;
  double abs_eps = 0.0;

  void check() const {
    if (!(beta > 0.0)) throw io_error("relaxation beta must be positive");
    if (!(tau > 0.0)) throw io_error("relaxation tau must be positive");
    if (!(temp > 0.0)) throw io_error("relaxation temp must be positive");
    if (!(abs_eps >= 0.0)) throw io_error("relaxation abs_eps must be non-negative");
  }
};

/// Reverse-mode tape over dense matrices. Nodes are immutable once recorded;
/// backward() walks the tape once in reverse and accumulates gradients for
/// every node reachable from an input. Any non-finite forward value raises
/// numeric_error immediately.
class Tape {
 public:
  static constexpr double kDivFloor = 1e-12;

  int input(Mat v) { return push(Op::Input, std::move(v), -1, -1, true); }
  int constant(Mat v) { return push(Op::Constant, std::move(v), -1, -1, false); }

  int matmul(int a, int b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (A.cols() != B.rows()) throw std::invalid_argument("matmul shape mismatch");
    return push(Op::MatMul, A * B, a, b);
  }

  int hadamard(int a, int b) {
    same_shape(a, b, "hadamard");
    return push(Op::Hadamard, val(a).cwiseProduct(val(b)), a, b);
  }

  int add(int a, int b) {
    same_shape(a, b, "add");
    return push(Op::Add, val(a) + val(b), a, b);
  }

  int sub(int a, int b) {
    same_shape(a, b, "sub");
    return push(Op::Sub, val(a) - val(b), a, b);
  }

  int scalar_mul(double c, int a) {
    const int id = push(Op::ScalarMul, c * val(a), a, -1);
    nodes_[id].c0 = c;
    return id;
  }

  int sigmoid_chi(int a, double beta, double tau) {
    Mat v = (1.0 / (1.0 + (-beta * (val(a).array() - tau)).exp())).matrix();
    const int id = push(Op::SigmoidChi, std::move(v), a, -1);
    nodes_[id].c0 = beta;
    nodes_[id].c1 = tau;
    return id;
  }

  /// Smooth maximum over all entries: temp * log(sum exp(x / temp)), 1x1.
  int logsumexp_max(int a, double temp) {
    if (!(temp > 0.0)) throw std::invalid_argument("logsumexp temperature must be positive");
    const Mat& x = val(a);
    const double mx = x.maxCoeff();
    const double s = ((x.array() - mx) / temp).exp().sum();
    Mat v(1, 1);
    v(0, 0) = mx + temp * std::log(s);
    const int id = push(Op::LogSumExpMax, std::move(v), a, -1);
    nodes_[id].c0 = temp;
    return id;
  }

  /// |a - b| elementwise; eps > 0 uses sqrt((a-b)^2 + eps^2) for a smooth
  /// gradient at zero.
  int abs_sub(int a, int b, double eps = 0.0) {
    same_shape(a, b, "abs_sub");
    Mat d = val(a) - val(b);
    Mat v;
    if (eps == 0.0) {
      v = d.array().abs().matrix();
    } else {
      v = (d.array().square() + eps * eps).sqrt().matrix();
    }
    const int id = push(Op::AbsSub, std::move(v), a, b);
    nodes_[id].c0 = eps;
    return id;
  }

  /// Mean of the entries selected by a constant 0/1 mask, 1x1.
  int masked_mean(int a, Mat mask) {
    if (mask.rows() != val(a).rows() || mask.cols() != val(a).cols()) {
      throw std::invalid_argument("masked_mean shape mismatch");
    }
    const double total = mask.sum();
    if (!(total > 0.0)) throw std::invalid_argument("masked_mean needs a nonempty mask");
    Mat v(1, 1);
    v(0, 0) = val(a).cwiseProduct(mask).sum() / total;
    const int id = push(Op::MaskedMean, std::move(v), a, -1);
    nodes_[id].aux = std::move(mask);
    return id;
  }

  int frobenius(int a) {
    Mat v(1, 1);
    v(0, 0) = val(a).norm();
    return push(Op::Frobenius, std::move(v), a, -1);
  }

  /// Clamp to [0, 1]; the gradient passes only strictly inside the box.
  int clip01(int a) {
    return push(Op::Clip01, val(a).array().max(0.0).min(1.0).matrix(), a, -1);
  }

  /// Elementwise a / max(b, floor); keeps near-empty denominators harmless.
  int safe_div(int a, int b) {
    same_shape(a, b, "safe_div");
    Mat floored = val(b).array().max(kDivFloor).matrix();
    return push(Op::SafeDiv, val(a).cwiseQuotient(floored), a, b);
  }

  const Mat& value(int id) const { return nodes_.at(id).value; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Accumulates d(output)/d(node) for every node feeding `output`, which
  /// must be scalar.
  void backward(int output) {
    const Mat& out = val(output);
    if (out.rows() != 1 || out.cols() != 1) {
      throw std::invalid_argument("backward needs a scalar output node");
    }
    grads_.assign(nodes_.size(), Mat());
    seed(output) = Mat::Ones(1, 1);

    for (int id = output; id >= 0; --id) {
      const Node& nd = nodes_[id];
      if (!nd.requires_grad || grads_[id].size() == 0) continue;
      const Mat& G = grads_[id];
      switch (nd.op) {
        case Op::Input:
        case Op::Constant:
          break;
        case Op::MatMul:
          if (wants(nd.a)) seed(nd.a) += G * val(nd.b).transpose();
          if (wants(nd.b)) seed(nd.b) += val(nd.a).transpose() * G;
          break;
        case Op::Hadamard:
          if (wants(nd.a)) seed(nd.a) += G.cwiseProduct(val(nd.b));
          if (wants(nd.b)) seed(nd.b) += G.cwiseProduct(val(nd.a));
          break;
        case Op::Add:
          if (wants(nd.a)) seed(nd.a) += G;
          if (wants(nd.b)) seed(nd.b) += G;
          break;
        case Op::Sub:
          if (wants(nd.a)) seed(nd.a) += G;
          if (wants(nd.b)) seed(nd.b) -= G;
          break;
        case Op::ScalarMul:
          if (wants(nd.a)) seed(nd.a) += nd.c0 * G;
          break;
        case Op::SigmoidChi:
          if (wants(nd.a)) {
            seed(nd.a) += G.cwiseProduct(
                (nd.c0 * nd.value.array() * (1.0 - nd.value.array())).matrix());
          }
          break;
        case Op::LogSumExpMax:
          if (wants(nd.a)) {
            const Mat& x = val(nd.a);
            const double mx = x.maxCoeff();
            Mat w = ((x.array() - mx) / nd.c0).exp().matrix();
            w /= w.sum();
            seed(nd.a) += G(0, 0) * w;
          }
          break;
        case Op::AbsSub: {
          Mat d = val(nd.a) - val(nd.b);
          Mat t;
          if (nd.c0 == 0.0) {
            t = d.array().sign().matrix();
          } else {
            t = d.cwiseQuotient(nd.value);
          }
          if (wants(nd.a)) seed(nd.a) += G.cwiseProduct(t);
          if (wants(nd.b)) seed(nd.b) -= G.cwiseProduct(t);
          break;
        }
        case Op::MaskedMean:
          if (wants(nd.a)) seed(nd.a) += (G(0, 0) / nd.aux.sum()) * nd.aux;
          break;
        case Op::Frobenius:
          if (wants(nd.a)) {
            const double nrm = std::max(nd.value(0, 0), kDivFloor);
            seed(nd.a) += (G(0, 0) / nrm) * val(nd.a);
          }
          break;
        case Op::Clip01:
          if (wants(nd.a)) {
            // boundary points keep their gradient so optimization can leave a
            // rail it starts on; only strictly clipped entries are blocked
            const auto& x = val(nd.a).array();
            Mat ind = ((x >= 0.0) && (x <= 1.0)).cast<double>().matrix();
            seed(nd.a) += G.cwiseProduct(ind);
          }
          break;
        case Op::SafeDiv:
          if (wants(nd.a) || wants(nd.b)) {
            Mat floored = val(nd.b).array().max(kDivFloor).matrix();
            if (wants(nd.a)) seed(nd.a) += G.cwiseQuotient(floored);
            if (wants(nd.b)) {
              Mat moving = (val(nd.b).array() > kDivFloor).cast<double>().matrix();
              seed(nd.b) -= G.cwiseProduct(val(nd.a))
                                .cwiseQuotient(floored.cwiseProduct(floored))
                                .cwiseProduct(moving);
            }
          }
          break;
      }
    }
    has_grads_ = true;
  }

  /// Gradient accumulated by the last backward(); zero for untouched nodes.
  Mat grad(int id) const {
    if (!has_grads_) throw std::logic_error("grad() before backward()");
    const Mat& g = grads_.at(id);
    if (g.size() == 0) {
      return Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    }
    return g;
  }

 private:
  enum class Op {
    Input, Constant, MatMul, Hadamard, Add, Sub, ScalarMul, SigmoidChi,
    LogSumExpMax, AbsSub, MaskedMean, Frobenius, Clip01, SafeDiv,
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    Mat value;
    Mat aux;
    double c0 = 0.0, c1 = 0.0;
    bool requires_grad = false;
  };

  static const char* op_name(Op op) {
    switch (op) {
      case Op::Input: return "input";
      case Op::Constant: return "constant";
      case Op::MatMul: return "matmul";
      case Op::Hadamard: return "hadamard";
      case Op::Add: return "add";
      case Op::Sub: return "sub";
      case Op::ScalarMul: return "scalar_mul";
      case Op::SigmoidChi: return "sigmoid_chi";
      case Op::LogSumExpMax: return "logsumexp_max";
      case Op::AbsSub: return "abs_sub";
      case Op::MaskedMean: return "masked_mean";
      case Op::Frobenius: return "frobenius";
      case Op::Clip01: return "clip01";
      case Op::SafeDiv: return "safe_div";
    }
    return "?";
  }

  const Mat& val(int id) const { return nodes_.at(id).value; }

  bool wants(int id) const { return id >= 0 && nodes_[id].requires_grad; }

  Mat& seed(int id) {
    Mat& g = grads_[id];
    if (g.size() == 0) g = Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
    return g;
  }

  void same_shape(int a, int b, const char* what) const {
    if (val(a).rows() != val(b).rows() || val(a).cols() != val(b).cols()) {
      throw std::invalid_argument(std::string(what) + " shape mismatch");
    }
  }

  int push(Op op, Mat value, int a, int b, bool force_grad = false) {
    if (!value.allFinite()) {
      throw numeric_error(std::string("non-finite value produced by ") + op_name(op));
    }
    Node nd;
    nd.op = op;
    nd.a = a;
    nd.b = b;
    nd.value = std::move(value);
    nd.requires_grad = force_grad || wants(a) || wants(b);
    nodes_.push_back(std::move(nd));
    has_grads_ = false;
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  bool has_grads_ = false;
};

/// Adam with bias correction; moments live alongside the parameter.
struct AdamState {
  Mat m, v;
  long step = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(Eigen::Index rows, Eigen::Index cols, double lr = 0.01) {
    AdamState s;
    s.m = Mat::Zero(rows, cols);
    s.v = Mat::Zero(rows, cols);
    s.lr = lr;
    return s;
  }
};

inline void adam_step(Mat& param, const Mat& grad, AdamState& s) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw std::invalid_argument("adam_step shape mismatch");
  }
  if (!grad.allFinite()) throw numeric_error("non-finite gradient in adam_step");
  s.step++;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  Mat mhat = s.m / bc1;
  Mat vhat = s.v / bc2;
  param -= s.lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + s.epsilon).matrix());
  if (!param.allFinite()) throw numeric_error("non-finite parameter after adam_step");
}

}  // namespace khopfair
