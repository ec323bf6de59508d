#include "diffplan/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace diffplan {

NoiseSchedule make_cosine_schedule(int K) {
  if (K < 1) throw std::invalid_argument("noise schedule needs K >= 1, got " + std::to_string(K));
  auto f = [K](int k) {
    const double c = std::cos((static_cast<double>(k) / K + kCosineOffset) /
                              (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule s;
  s.K = K;
  s.beta.assign(K + 1, 0.0);
  s.alpha.assign(K + 1, 1.0);
  s.alpha_bar.assign(K + 1, 1.0);
  s.sigma.assign(K + 1, 0.0);
  const double f0 = f(0);
  for (int k = 1; k <= K; ++k) {
    const double ratio = (f(k) / f0) / (f(k - 1) / f0);
    s.beta[k] = std::clamp(1.0 - ratio, kBetaMin, kBetaMax);
    s.alpha[k] = 1.0 - s.beta[k];
    s.alpha_bar[k] = s.alpha_bar[k - 1] * s.alpha[k];
    s.sigma[k] = std::sqrt(s.beta[k] * (1.0 - s.alpha_bar[k - 1]) / (1.0 - s.alpha_bar[k]));
  }
  return s;
}

namespace {

void check_k(int k, const NoiseSchedule& sched, int lo) {
  if (k < lo || k > sched.K) {
    throw DiffusionInputError("diffusion iteration " + std::to_string(k) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(sched.K) + "]");
  }
}

void check_shape(const ActionSeq& a, const ActionSeq& b, const char* what) {
  if (a.size() != b.size()) {
    throw DiffusionInputError(std::string(what) + ": length " + std::to_string(b.size()) +
                              " does not match action length " + std::to_string(a.size()));
  }
}

}  // namespace

NoisyAction forward_diffuse(const ActionSeq& a0, int k, const ActionSeq& eps,
                            const NoiseSchedule& sched) {
  check_k(k, sched, 0);
  check_shape(a0, eps, "forward_diffuse noise");
  const double signal = std::sqrt(sched.alpha_bar[k]);
  const double noise = std::sqrt(1.0 - sched.alpha_bar[k]);
  NoisyAction out{ActionSeq(a0.size()), k};
  for (std::size_t i = 0; i < a0.size(); ++i) {
    out.values[i] = {signal * a0[i].x + noise * eps[i].x, signal * a0[i].y + noise * eps[i].y};
  }
  return out;
}

ActionSeq forward_step(const ActionSeq& x, int k, const ActionSeq& noise,
                       const NoiseSchedule& sched) {
  check_k(k, sched, 1);
  check_shape(x, noise, "forward_step noise");
  const double keep = std::sqrt(1.0 - sched.beta[k]);
  const double add = std::sqrt(sched.beta[k]);
  ActionSeq out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = {keep * x[i].x + add * noise[i].x, keep * x[i].y + add * noise[i].y};
  }
  return out;
}

NoisyAction denoise_step(const ActionSeq& eps_hat, const NoisyAction& a_k,
                         const NoiseSchedule& sched, const ActionSeq& z) {
  const int k = a_k.k;
  if (k == 0) throw DiffusionInputError("denoise_step: iteration 0 has nothing to denoise");
  check_k(k, sched, 1);
  check_shape(a_k.values, eps_hat, "denoise_step prediction");
  const bool add_noise = k > 1;
  if (add_noise) check_shape(a_k.values, z, "denoise_step noise");

  const double scale = 1.0 / std::sqrt(sched.alpha[k]);
  const double gamma = sched.beta[k] / std::sqrt(1.0 - sched.alpha_bar[k]);
  const double sigma = add_noise ? sched.sigma[k] : 0.0;
  NoisyAction out{ActionSeq(a_k.values.size()), k - 1};
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const Point2& a = a_k.values[i];
    const Point2& e = eps_hat[i];
    const Point2 n = add_noise ? z[i] : Point2{};
    out.values[i] = {scale * (a.x - gamma * e.x) + sigma * n.x,
                     scale * (a.y - gamma * e.y) + sigma * n.y};
  }
  return out;
}

ActionSeq clip_predicted_noise(const ActionSeq& eps_hat, const NoisyAction& a_k,
                               const NoiseSchedule& sched, double bound) {
  check_k(a_k.k, sched, 1);
  check_shape(a_k.values, eps_hat, "clip_predicted_noise prediction");
  if (!(bound > 0.0)) throw DiffusionInputError("clip_predicted_noise: bound must be positive");
  const double signal = std::sqrt(sched.alpha_bar[a_k.k]);
  const double noise = std::sqrt(1.0 - sched.alpha_bar[a_k.k]);
  auto clip = [&](double a, double e) {
    const double x0 = (a - noise * e) / signal;
    if (x0 >= -bound && x0 <= bound) return e;
    return (a - signal * std::clamp(x0, -bound, bound)) / noise;
  };
  ActionSeq out(eps_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {clip(a_k.values[i].x, eps_hat[i].x), clip(a_k.values[i].y, eps_hat[i].y)};
  }
  return out;
}

void apply_inpainting(ActionSeq& a, Point2 start_n, Point2 goal_n) {
  if (a.empty()) return;
  a.front() = start_n;
  a.back() = goal_n;
}

}  // namespace diffplan
