#include <cmath>
#include <numbers>

#include "iafs/diffusion.hpp"
#include "iafs/error.hpp"

namespace iafs {

namespace {

constexpr double kCosineOffset = 0.008;

double cosine_signal(double u) {
  const double s = kCosineOffset;
  const double c0 = std::cos(std::numbers::pi / 2.0 * s / (1.0 + s));
  const double c = std::cos(std::numbers::pi / 2.0 * (u + s) / (1.0 + s));
  return (c * c) / (c0 * c0);
}

}  // namespace

NoiseSchedule NoiseSchedule::cosine(int steps, double max_sigma) {
  if (steps < 1) throw InvalidArgument("NoiseSchedule: T must be >= 1");
  if (!(max_sigma > 0.0)) throw InvalidArgument("NoiseSchedule: max_sigma must be > 0");

  // End time u_end solves alpha_bar(u_end) = 1 / (1 + max_sigma^2).
  const double s = kCosineOffset;
  const double c0 = std::cos(std::numbers::pi / 2.0 * s / (1.0 + s));
  const double target = c0 / std::sqrt(1.0 + max_sigma * max_sigma);
  const double u_end = 2.0 / std::numbers::pi * (1.0 + s) * std::acos(target) - s;

  std::vector<double> cumulative(steps + 1, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double a = cosine_signal(u_end * t / steps);
    cumulative[t] = std::sqrt((1.0 - a) / a);
  }
  cumulative[steps] = max_sigma;
  return from_cumulative(std::move(cumulative));
}

NoiseSchedule NoiseSchedule::geometric(int steps, double min_sigma, double max_sigma) {
  if (steps < 1) throw InvalidArgument("NoiseSchedule: T must be >= 1");
  if (!(min_sigma > 0.0) || !(max_sigma >= min_sigma)) {
    throw InvalidArgument("NoiseSchedule: need 0 < min_sigma <= max_sigma");
  }
  std::vector<double> cumulative(steps + 1, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double f = steps == 1 ? 1.0 : static_cast<double>(t - 1) / (steps - 1);
    cumulative[t] = min_sigma * std::pow(max_sigma / min_sigma, f);
  }
  cumulative[steps] = max_sigma;
  return from_cumulative(std::move(cumulative));
}

NoiseSchedule NoiseSchedule::from_cumulative(std::vector<double> cumulative) {
  NoiseSchedule sched;
  sched.steps_ = static_cast<int>(cumulative.size()) - 1;
  sched.cumulative_ = std::move(cumulative);
  sched.signal_.resize(sched.cumulative_.size());
  for (std::size_t t = 0; t < sched.cumulative_.size(); ++t) {
    sched.signal_[t] = 1.0 / (1.0 + sched.cumulative_[t] * sched.cumulative_[t]);
  }
  sched.step_.assign(sched.cumulative_.size(), 0.0);
  sched.carry_.assign(sched.cumulative_.size(), 0.0);
  for (int t = 1; t <= sched.steps_; ++t) {
    const double prev = sched.cumulative_[t - 1];
    const double cur = sched.cumulative_[t];
    const double carry = (prev * prev) / (cur * cur);
    sched.carry_[t] = carry;
    sched.step_[t] = prev * std::sqrt(1.0 - carry);
  }
  return sched;
}

void NoiseSchedule::check(int t, int lo) const {
  if (t < lo || t > steps_) {
    throw InvalidArgument("NoiseSchedule: timestep " + std::to_string(t) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(steps_) + "]");
  }
}

double NoiseSchedule::signal_level(int t) const {
  check(t, 0);
  return signal_[t];
}

double NoiseSchedule::cumulative_sigma(int t) const {
  check(t, 0);
  return cumulative_[t];
}

double NoiseSchedule::step_sigma(int t) const {
  check(t, 1);
  return step_[t];
}

double NoiseSchedule::carry(int t) const {
  check(t, 1);
  return carry_[t];
}

ImageTensor reverse_step(const ImageTensor& mu, double sigma_t, Rng& rng) {
  if (!(sigma_t >= 0.0)) throw InvalidArgument("reverse_step: sigma_t must be >= 0");
  if (sigma_t == 0.0) return mu;
  ImageTensor out = mu;
  for (double& v : out.values()) v += sigma_t * rng.normal();
  return out;
}

ImageTensor posterior_mean(const ImageTensor& x_t, const ImageTensor& x0_hat, double carry) {
  return linear_combination(x_t, carry, x0_hat, 1.0 - carry);
}

}  // namespace iafs
