#pragma once

#include <vector>

#include "geneoh/math.hpp"

namespace geneoh {

// DDPM variance schedule, 1-indexed (index 0 unused).
struct NoiseSchedule {
  int t_max = 0;
  std::vector<double> beta;       // beta[t]
  std::vector<double> alpha;      // 1 - beta[t]
  std::vector<double> alpha_bar;  // prod_{s<=t} alpha[s]
  std::vector<double> sigma;      // sqrt(beta[t])

  void check_t(int t) const {
    if (t < 1 || t > t_max) throw InvalidInputError("diffusion step t out of range");
  }
};

inline NoiseSchedule build_linear_schedule(int t_max = 1000, double beta1 = 0.001,
                                           double beta_t = 0.02) {
  if (t_max < 1 || beta1 <= 0.0 || beta_t < beta1 || beta_t >= 1.0)
    throw InvalidInputError("build_linear_schedule: invalid range");
  NoiseSchedule s;
  s.t_max = t_max;
  s.beta.resize(t_max + 1);
  s.alpha.resize(t_max + 1);
  s.alpha_bar.resize(t_max + 1);
  s.sigma.resize(t_max + 1);
  double cumprod = 1.0;
  for (int t = 1; t <= t_max; ++t) {
    s.beta[t] = t_max == 1 ? beta1 : beta1 + (beta_t - beta1) * (t - 1) / (t_max - 1);
    s.alpha[t] = 1.0 - s.beta[t];
    cumprod *= s.alpha[t];
    s.alpha_bar[t] = cumprod;
    s.sigma[t] = std::sqrt(s.beta[t]);
  }
  return s;
}

}  // namespace geneoh
