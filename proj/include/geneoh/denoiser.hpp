#pragma once

#include <map>
#include <string>
#include <vector>

#include "geneoh/math.hpp"

namespace geneoh {

// Time-conditioned residual dense network predicting the noise component.
// Layout: input linear D->H, a two-layer time embedding from sinusoidal
// features, 4 residual blocks (h += W2 silu(W1 h + b1 + temb) + b2), and a
// zero-initialized output linear H->D so a fresh model predicts exactly 0.
struct DenoiserModel {
  int dim = 0;
  int hidden = 256;
  int blocks = 4;
  int time_features = 64;

  Eigen::MatrixXd w_in, w_out;
  Eigen::VectorXd b_in, b_out;
  Eigen::MatrixXd wt1, wt2;
  Eigen::VectorXd bt1, bt2;
  std::vector<Eigen::MatrixXd> w1, w2;
  std::vector<Eigen::VectorXd> b1, b2;

  static DenoiserModel create(int dim, std::uint64_t seed, int hidden = 256, int blocks = 4,
                              int time_features = 64) {
    DenoiserModel m;
    m.dim = dim;
    m.hidden = hidden;
    m.blocks = blocks;
    m.time_features = time_features;
    Rng rng(seed);
    auto he = [&rng](int rows, int cols) {
      Eigen::MatrixXd w(rows, cols);
      const double s = std::sqrt(2.0 / cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) w(i, j) = s * rng.normal();
      return w;
    };
    m.w_in = he(hidden, dim);
    m.b_in = Eigen::VectorXd::Zero(hidden);
    m.wt1 = he(hidden, time_features);
    m.bt1 = Eigen::VectorXd::Zero(hidden);
    m.wt2 = he(hidden, hidden);
    m.bt2 = Eigen::VectorXd::Zero(hidden);
    for (int i = 0; i < blocks; ++i) {
      m.w1.push_back(he(hidden, hidden));
      m.b1.push_back(Eigen::VectorXd::Zero(hidden));
      m.w2.push_back(he(hidden, hidden));
      m.b2.push_back(Eigen::VectorXd::Zero(hidden));
    }
    m.w_out = Eigen::MatrixXd::Zero(dim, hidden);
    m.b_out = Eigen::VectorXd::Zero(dim);
    return m;
  }

  std::vector<std::pair<std::string, Eigen::Ref<Eigen::MatrixXd>>> named_tensors() {
    std::vector<std::pair<std::string, Eigen::Ref<Eigen::MatrixXd>>> t;
    t.emplace_back("in.w", w_in);
    t.emplace_back("out.w", w_out);
    t.emplace_back("time.w1", wt1);
    t.emplace_back("time.w2", wt2);
    for (int i = 0; i < blocks; ++i) {
      t.emplace_back("block" + std::to_string(i) + ".w1", w1[i]);
      t.emplace_back("block" + std::to_string(i) + ".w2", w2[i]);
    }
    return t;
  }
  std::vector<std::pair<std::string, Eigen::Ref<Eigen::VectorXd>>> named_vectors() {
    std::vector<std::pair<std::string, Eigen::Ref<Eigen::VectorXd>>> t;
    t.emplace_back("in.b", b_in);
    t.emplace_back("out.b", b_out);
    t.emplace_back("time.b1", bt1);
    t.emplace_back("time.b2", bt2);
    for (int i = 0; i < blocks; ++i) {
      t.emplace_back("block" + std::to_string(i) + ".b1", b1[i]);
      t.emplace_back("block" + std::to_string(i) + ".b2", b2[i]);
    }
    return t;
  }

  // Round every parameter to f32, the checkpoint precision, so a save/load
  // round trip reproduces inference bit-for-bit.
  void quantize_f32() {
    for (auto& [name, w] : named_tensors())
      w = w.cast<float>().cast<double>();
    for (auto& [name, b] : named_vectors())
      b = b.cast<float>().cast<double>();
  }

  Eigen::VectorXd time_embedding(int t) const {
    Eigen::VectorXd e(time_features);
    const int half = time_features / 2;
    for (int i = 0; i < half; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / time_features);
      e[2 * i] = std::sin(t * freq);
      e[2 * i + 1] = std::cos(t * freq);
    }
    return e;
  }

  static Eigen::MatrixXd silu(const Eigen::MatrixXd& x) {
    return x.array() / (1.0 + (-x.array()).exp());
  }
  static Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& x) {
    const auto s = 1.0 / (1.0 + (-x.array()).exp());
    return (s * (1.0 + x.array() * (1.0 - s))).matrix();
  }

  // Forward pass on a batch (columns are samples), each with its own t.
  // When `cache` is non-null, pre-activations are stored for the backward pass.
  struct Cache {
    Eigen::MatrixXd x, temb_in, temb_pre2, temb, h0;
    std::vector<Eigen::MatrixXd> pre, act, h;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const std::vector<int>& t,
                          Cache* cache = nullptr) const {
    const int B = static_cast<int>(x.cols());
    Eigen::MatrixXd temb_in(time_features, B);
    for (int b = 0; b < B; ++b) temb_in.col(b) = time_embedding(t[b]);
    const Eigen::MatrixXd temb_pre2 = (wt1 * temb_in).colwise() + bt1;
    const Eigen::MatrixXd temb = ((wt2 * silu(temb_pre2)).colwise() + bt2);
    Eigen::MatrixXd h = (w_in * x).colwise() + b_in;
    if (cache) {
      cache->x = x;
      cache->temb_in = temb_in;
      cache->temb_pre2 = temb_pre2;
      cache->temb = temb;
      cache->h0 = h;
      cache->pre.clear();
      cache->act.clear();
      cache->h.clear();
    }
    for (int i = 0; i < blocks; ++i) {
      Eigen::MatrixXd pre = ((w1[i] * h).colwise() + b1[i]) + temb;
      Eigen::MatrixXd act = silu(pre);
      if (cache) {
        cache->h.push_back(h);
        cache->pre.push_back(pre);
        cache->act.push_back(act);
      }
      h += (w2[i] * act).colwise() + b2[i];
    }
    if (cache) cache->h.push_back(h);
    return (w_out * h).colwise() + b_out;
  }

  Eigen::VectorXd predict(const Eigen::VectorXd& x, int t) const {
    return forward(x, std::vector<int>{t});
  }

  // Gradients, same shapes as the parameters.
  struct Grads {
    Eigen::MatrixXd w_in, w_out, wt1, wt2;
    Eigen::VectorXd b_in, b_out, bt1, bt2;
    std::vector<Eigen::MatrixXd> w1, w2;
    std::vector<Eigen::VectorXd> b1, b2;
  };

  Grads backward(const Cache& c, const Eigen::MatrixXd& dy) const {
    Grads g;
    g.w_out = dy * c.h.back().transpose();
    g.b_out = dy.rowwise().sum();
    Eigen::MatrixXd dh = w_out.transpose() * dy;
    Eigen::MatrixXd dtemb = Eigen::MatrixXd::Zero(hidden, dy.cols());
    g.w1.resize(blocks);
    g.w2.resize(blocks);
    g.b1.resize(blocks);
    g.b2.resize(blocks);
    for (int i = blocks - 1; i >= 0; --i) {
      // h_{i+1} = h_i + w2 silu(pre_i) + b2
      g.w2[i] = dh * c.act[i].transpose();
      g.b2[i] = dh.rowwise().sum();
      const Eigen::MatrixXd dpre =
          (w2[i].transpose() * dh).cwiseProduct(silu_grad(c.pre[i]));
      g.w1[i] = dpre * c.h[i].transpose();
      g.b1[i] = dpre.rowwise().sum();
      dtemb += dpre;
      dh += w1[i].transpose() * dpre;
    }
    g.w_in = dh * c.x.transpose();
    g.b_in = dh.rowwise().sum();
    // time MLP
    g.wt2 = dtemb * silu(c.temb_pre2).transpose();
    g.bt2 = dtemb.rowwise().sum();
    const Eigen::MatrixXd dt1 = (wt2.transpose() * dtemb).cwiseProduct(silu_grad(c.temb_pre2));
    g.wt1 = dt1 * c.temb_in.transpose();
    g.bt1 = dt1.rowwise().sum();
    return g;
  }
};

// Adam over an arbitrary list of parameter blocks.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }

  void step(std::vector<Eigen::Map<Eigen::VectorXd>>& params,
            const std::vector<Eigen::Map<const Eigen::VectorXd>>& grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Eigen::VectorXd::Zero(p.size()));
        v_.push_back(Eigen::VectorXd::Zero(p.size()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
      params[i].array() -=
          lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

// Flat-vector Adam used by the trajectory optimizers.
class AdamVector {
 public:
  explicit AdamVector(int n, double lr = 1e-2, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(n)),
        v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    x.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace geneoh
