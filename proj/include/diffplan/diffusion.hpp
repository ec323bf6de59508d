#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "diffplan/trajectory.hpp"

namespace diffplan {

/// A trajectory-shaped array of values in normalized action space.
using ActionSeq = std::vector<Point2>;

/// Per-iteration DDPM coefficients for k = 0..K. Index 0 is the clean data
/// (alpha_bar[0] = 1, beta[0] = 0); iterations 1..K are the noising steps.
struct NoiseSchedule {
  int K = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;
};

constexpr double kCosineOffset = 0.008;
constexpr double kBetaMin = 1e-8;
constexpr double kBetaMax = 0.999;

/// Squared-cosine schedule: f(k) = cos^2(((k/K + s)/(1 + s)) * pi/2) with
/// s = 0.008. beta[k] = 1 - f(k)/f(k-1) clipped to [1e-8, 0.999]; alpha_bar is
/// the running product of the clipped alphas so the forward marginals stay
/// exactly consistent with the per-step kernel.
NoiseSchedule make_cosine_schedule(int K);

struct NoisyAction {
  ActionSeq values;
  int k = 0;
};

class DiffusionInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed-form forward marginal sqrt(ab_k) * a0 + sqrt(1 - ab_k) * eps.
NoisyAction forward_diffuse(const ActionSeq& a0, int k, const ActionSeq& eps,
                            const NoiseSchedule& sched);

/// One step of the per-step forward kernel: sqrt(1 - beta_k) * x + sqrt(beta_k) * noise.
ActionSeq forward_step(const ActionSeq& x, int k, const ActionSeq& noise,
                       const NoiseSchedule& sched);

/// Ancestral DDPM update from iteration k to k-1:
///   a_{k-1} = (a_k - beta_k / sqrt(1 - ab_k) * eps_hat) / sqrt(alpha_k) + sigma_k * z
/// z is ignored at k = 1 so the last step is deterministic.
NoisyAction denoise_step(const ActionSeq& eps_hat, const NoisyAction& a_k,
                         const NoiseSchedule& sched, const ActionSeq& z);

/// Replaces eps_hat by the noise implied by clipping the predicted clean sample
/// (a_k - sqrt(1 - alpha_bar[k]) eps_hat) / sqrt(alpha_bar[k]) to [-bound, bound].
/// Feeding the result to denoise_step yields the clipped posterior mean.
/// Predictions whose clean sample is already in range are returned unchanged.
ActionSeq clip_predicted_noise(const ActionSeq& eps_hat, const NoisyAction& a_k,
                               const NoiseSchedule& sched, double bound = 1.0);

/// Overwrites the first and last waypoints; the interior is untouched.
void apply_inpainting(ActionSeq& a, Point2 start_n, Point2 goal_n);

}  // namespace diffplan
