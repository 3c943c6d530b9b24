#pragma once

#include <functional>

#include "geneoh/denoiser.hpp"
#include "geneoh/schedule.hpp"

namespace geneoh {

// Batched noise predictor: columns of x are independent samples at step t.
using EpsilonFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, int)>;

// The network predicts the residual eps - sqrt(1-abar_t) x_t rather than eps
// itself. For whitened data E[eps | x_t] ~= sqrt(1-abar_t) x_t, a full-rank
// multiple of the input that a bottlenecked MLP cannot represent when the
// data dimension exceeds its width; subtracting it analytically leaves only
// the low-rank, data-dependent correction for the network to learn.
inline EpsilonFn epsilon_from_model(const DenoiserModel& model, const NoiseSchedule& schedule) {
  return [&model, schedule](const Eigen::MatrixXd& x, int t) {
    Eigen::MatrixXd eps = model.forward(x, std::vector<int>(x.cols(), t));
    eps += std::sqrt(1.0 - schedule.alpha_bar[t]) * x;
    return eps;
  };
}

// x_t = sqrt(abar_t) x + sqrt(1 - abar_t) n,  n ~ N(0, I)
inline Eigen::MatrixXd forward_diffuse(const Eigen::MatrixXd& x, int t, const NoiseSchedule& s,
                                       Rng& rng) {
  s.check_t(t);
  const double a = std::sqrt(s.alpha_bar[t]);
  const double b = std::sqrt(1.0 - s.alpha_bar[t]);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (int j = 0; j < x.cols(); ++j)
    for (int i = 0; i < x.rows(); ++i) out(i, j) = a * x(i, j) + b * rng.normal();
  return out;
}

// Posterior step: x_{t-1} = (x_t - (1-a_t)/sqrt(1-abar_t) eps(x_t,t)) / sqrt(a_t) + sigma_t z.
// z = 0 at the final step t = 1.
inline Eigen::MatrixXd reverse_denoise_step(const Eigen::MatrixXd& x_t, int t,
                                            const EpsilonFn& eps, const NoiseSchedule& s,
                                            Rng& rng) {
  s.check_t(t);
  const Eigen::MatrixXd n_hat = eps(x_t, t);
  Eigen::MatrixXd out =
      (x_t - ((1.0 - s.alpha[t]) / std::sqrt(1.0 - s.alpha_bar[t])) * n_hat) /
      std::sqrt(s.alpha[t]);
  if (t > 1) {
    for (int j = 0; j < out.cols(); ++j)
      for (int i = 0; i < out.rows(); ++i) out(i, j) += s.sigma[t] * rng.normal();
  }
  return out;
}

// "Denoising via diffusion": jump to noise scale t_diff, then walk the reverse
// chain back to the data manifold. t_diff = 0 is the identity. Iterates are
// clamped coordinate-wise to +-guard (whitened units): legitimate states stay
// far inside the bound, but a chain that wanders off-manifold can otherwise
// diverge geometrically because the predicted noise grows with the iterate.
inline Eigen::MatrixXd denoise_via_diffusion(const Eigen::MatrixXd& x_hat, int t_diff,
                                             const EpsilonFn& eps, const NoiseSchedule& s,
                                             Rng& rng, double guard = 24.0) {
  if (t_diff < 0 || t_diff > s.t_max)
    throw InvalidInputError("denoise_via_diffusion: t_diff out of range");
  if (t_diff == 0) return x_hat;
  Eigen::MatrixXd x = forward_diffuse(x_hat, t_diff, s, rng);
  for (int t = t_diff; t >= 1; --t) {
    x = reverse_denoise_step(x, t, eps, s, rng);
    if (guard > 0.0) x = x.cwiseMax(-guard).cwiseMin(guard);
  }
  return x;
}

struct TrainConfig {
  int batch_size = 32;
  int steps = 2000;
  double learning_rate = 1e-3;
  double grad_clip = 1.0;    // global-norm clip; <= 0 disables
  double ema_decay = 0.999;  // averaged weights used for inference; <= 0 disables
  bool cosine_decay = true;  // cosine learning-rate schedule over `steps`
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size <= 0 || steps < 0 || learning_rate <= 0.0)
      throw InvalidInputError("TrainConfig: hyperparameters must be positive");
  }
};

struct TrainResult {
  DenoiserModel model;
  std::vector<double> loss_curve;
};

// Noise-prediction training: uniform t, x_t from the forward process, MSE
// against the residual target (see epsilon_from_model), Adam(0.9, 0.999,
// 1e-8) with gradient clipping, cosine learning-rate decay and weight
// averaging.
inline TrainResult train_denoiser(const std::vector<Eigen::VectorXd>& dataset,
                                  const TrainConfig& cfg, const NoiseSchedule& schedule) {
  cfg.validate();
  if (dataset.empty()) throw InvalidInputError("train_denoiser: empty dataset");
  const int D = static_cast<int>(dataset[0].size());
  for (const auto& v : dataset)
    if (v.size() != D) throw InvalidInputError("train_denoiser: dimension mismatch in dataset");

  TrainResult result;
  result.model = DenoiserModel::create(D, child_seed(cfg.seed, 1));
  DenoiserModel& model = result.model;
  DenoiserModel ema = model;  // shadow copy holding the averaged weights
  Rng rng(child_seed(cfg.seed, 2));
  AdamOptimizer adam(cfg.learning_rate);

  const int B = cfg.batch_size;
  Eigen::MatrixXd x0(D, B), xt(D, B), noise(D, B);
  std::vector<int> ts(B);
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < B; ++b) {
      const auto& sample = dataset[rng.raw() % dataset.size()];
      const int t = 1 + static_cast<int>(rng.raw() % schedule.t_max);
      ts[b] = t;
      const double a = std::sqrt(schedule.alpha_bar[t]);
      const double s = std::sqrt(1.0 - schedule.alpha_bar[t]);
      for (int i = 0; i < D; ++i) {
        const double n = rng.normal();
        x0(i, b) = sample[i];
        xt(i, b) = a * sample[i] + s * n;
        // residual target; epsilon_from_model adds sqrt(1-abar_t) x_t back
        noise(i, b) = n - s * xt(i, b);
      }
    }
    DenoiserModel::Cache cache;
    const Eigen::MatrixXd pred = model.forward(xt, ts, &cache);
    const Eigen::MatrixXd err = pred - noise;
    result.loss_curve.push_back(err.squaredNorm() / (D * B));
    const Eigen::MatrixXd dy = 2.0 * err / (D * B);
    DenoiserModel::Grads g = model.backward(cache, dy);

    if (cfg.grad_clip > 0.0) {
      double sq = g.w_in.squaredNorm() + g.b_in.squaredNorm() + g.w_out.squaredNorm() +
                  g.b_out.squaredNorm() + g.wt1.squaredNorm() + g.bt1.squaredNorm() +
                  g.wt2.squaredNorm() + g.bt2.squaredNorm();
      for (int i = 0; i < model.blocks; ++i)
        sq += g.w1[i].squaredNorm() + g.b1[i].squaredNorm() + g.w2[i].squaredNorm() +
              g.b2[i].squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm > cfg.grad_clip) {
        const double scale = cfg.grad_clip / norm;
        g.w_in *= scale;
        g.b_in *= scale;
        g.w_out *= scale;
        g.b_out *= scale;
        g.wt1 *= scale;
        g.bt1 *= scale;
        g.wt2 *= scale;
        g.bt2 *= scale;
        for (int i = 0; i < model.blocks; ++i) {
          g.w1[i] *= scale;
          g.b1[i] *= scale;
          g.w2[i] *= scale;
          g.b2[i] *= scale;
        }
      }
    }

    std::vector<Eigen::Map<Eigen::VectorXd>> params;
    std::vector<Eigen::Map<const Eigen::VectorXd>> grads;
    auto add = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& gr) {
      params.emplace_back(p.data(), p.size());
      grads.emplace_back(gr.data(), gr.size());
    };
    auto addv = [&](Eigen::VectorXd& p, const Eigen::VectorXd& gr) {
      params.emplace_back(p.data(), p.size());
      grads.emplace_back(gr.data(), gr.size());
    };
    add(model.w_in, g.w_in);
    addv(model.b_in, g.b_in);
    add(model.w_out, g.w_out);
    addv(model.b_out, g.b_out);
    add(model.wt1, g.wt1);
    addv(model.bt1, g.bt1);
    add(model.wt2, g.wt2);
    addv(model.bt2, g.bt2);
    for (int i = 0; i < model.blocks; ++i) {
      add(model.w1[i], g.w1[i]);
      addv(model.b1[i], g.b1[i]);
      add(model.w2[i], g.w2[i]);
      addv(model.b2[i], g.b2[i]);
    }
    if (cfg.cosine_decay)
      adam.set_lr(cfg.learning_rate * 0.5 *
                  (1.0 + std::cos(M_PI * step / std::max(1, cfg.steps))));
    adam.step(params, grads);

    if (cfg.ema_decay > 0.0) {
      const double d = cfg.ema_decay;
      auto et = ema.named_tensors();
      auto mt = model.named_tensors();
      for (size_t i = 0; i < et.size(); ++i)
        et[i].second = d * et[i].second + (1.0 - d) * mt[i].second;
      auto ev = ema.named_vectors();
      auto mv = model.named_vectors();
      for (size_t i = 0; i < ev.size(); ++i)
        ev[i].second = d * ev[i].second + (1.0 - d) * mv[i].second;
    }
  }
  if (cfg.ema_decay > 0.0 && cfg.steps > 0) model = ema;
  model.quantize_f32();
  return result;
}

}  // namespace geneoh
