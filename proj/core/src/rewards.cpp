#include "iafs/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "iafs/spectral.hpp"

namespace iafs {

ReferenceHandle ReferenceHandle::of(const ImageTensor& reference) {
  ReferenceHandle h;
  h.reference_ = &reference;
  return h;
}

ReferenceHandle ReferenceHandle::poisoned() {
  ReferenceHandle h;
  h.poisoned_ = true;
  return h;
}

const ImageTensor& ReferenceHandle::get() const {
  accesses_->fetch_add(1, std::memory_order_relaxed);
  if (poisoned_) throw PoisonedReference("pseudo-GT accessed where it must not be");
  if (reference_ == nullptr) throw InvalidArgument("reward requires a reference, none given");
  return *reference_;
}

double perceptual_proxy(const ImageTensor& x, double cutoff) {
  if (cutoff <= 0.0) cutoff = default_cutoff_radius(x.height(), x.width());
  const ComplexTensor s = dft2(x);
  CompensatedSum total;
  CompensatedSum high;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto plane = s.plane(c);
    for (std::size_t ky = 0; ky < x.height(); ++ky) {
      for (std::size_t kx = 0; kx < x.width(); ++kx) {
        if (ky == 0 && kx == 0) continue;
        const double p = std::norm(plane[ky * x.width() + kx]);
        total.add(p);
        if (frequency_radius(ky, kx, x.height(), x.width()) > cutoff) high.add(p);
      }
    }
  }
  // A constant image still leaks rounding-level energy out of DC; treat it as none.
  const double dc = sum(x);
  if (total.value() <= 1e-24 * (dc * dc) || total.value() == 0.0) return 0.0;
  return std::clamp(high.value() / total.value(), 0.0, 1.0);
}

namespace {

ImageTensor box_pool2(const ImageTensor& x) {
  const Shape out_shape{x.channels(), x.height() / 2, x.width() / 2};
  ImageTensor out(out_shape);
  for (std::size_t c = 0; c < out_shape.channels; ++c) {
    for (std::size_t y = 0; y < out_shape.height; ++y) {
      for (std::size_t xx = 0; xx < out_shape.width; ++xx) {
        out.at(c, y, xx) = 0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                                   x.at(c, 2 * y + 1, 2 * xx) + x.at(c, 2 * y + 1, 2 * xx + 1));
      }
    }
  }
  return out;
}

}  // namespace

double structural_proxy(const ImageTensor& x, const ImageTensor& reference, double normalizer,
                        const std::array<double, 3>& weights) {
  require_same_shape(x.shape(), reference.shape(), "structural_proxy");
  if (!(normalizer > 0.0)) throw InvalidArgument("structural_proxy: normalizer must be > 0");
  // Pooling the difference equals differencing the pooled images.
  ImageTensor diff = x - reference;
  double total = 0.0;
  for (std::size_t level = 0; level < weights.size(); ++level) {
    if (level > 0) {
      if (diff.height() < 2 || diff.width() < 2) break;
      diff = box_pool2(diff);
    }
    total += weights[level] * std::sqrt(dot(diff, diff) / static_cast<double>(diff.size()));
  }
  return total / normalizer;
}

double PerceptualProxy::score(const ImageTensor& x, const ImageTensor*) const {
  return perceptual_proxy(x, cutoff_);
}

StructuralProxy::StructuralProxy(double normalizer, std::array<double, 3> weights)
    : normalizer_(normalizer), weights_(weights) {
  if (!(normalizer_ > 0.0)) throw InvalidArgument("StructuralProxy: normalizer must be > 0");
}

double StructuralProxy::distance(const ImageTensor& x, const ImageTensor& reference) const {
  return structural_proxy(x, reference, normalizer_, weights_);
}

double StructuralProxy::score(const ImageTensor& x, const ImageTensor* reference) const {
  if (reference == nullptr) throw InvalidArgument("StructuralProxy: missing reference");
  return -distance(x, *reference);
}

// --- schedule ----------------------------------------------------------------

const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::lpips_only: return "lpips-only";
    case ScheduleKind::constant_hybrid: return "constant-hybrid";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::segmented: return "segmented";
  }
  return "?";
}

const char* to_string(RewardCase c) {
  switch (c) {
    case RewardCase::perceptual: return "perceptual";
    case RewardCase::structural: return "structural";
    case RewardCase::hybrid: return "hybrid";
    case RewardCase::linear: return "linear";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "lpips-only") return ScheduleKind::lpips_only;
  if (text == "constant-hybrid") return ScheduleKind::constant_hybrid;
  if (text == "linear") return ScheduleKind::linear;
  if (text == "segmented") return ScheduleKind::segmented;
  throw ConfigError("unknown schedule kind '" + text + "'");
}

double linear_weight(int t, int steps) {
  if (steps < 2) throw InvalidArgument("linear_weight: T must be >= 2");
  if (t < 1 || t > steps) throw InvalidArgument("linear_weight: t out of [1, T]");
  return static_cast<double>(steps - t) / static_cast<double>(steps - 1);
}

void RewardSchedule::validate() const {
  if (steps < 1) throw ConfigError("schedule: T must be >= 1");
  if (tau_clipiqa < 0 || tau_clipiqa > tau_lpips || tau_lpips > steps) {
    throw ConfigError("schedule: need 0 <= tau_clipiqa <= tau_lpips <= T, got (" +
                      std::to_string(tau_clipiqa) + ", " + std::to_string(tau_lpips) +
                      ") with T=" + std::to_string(steps));
  }
  if (kind == ScheduleKind::linear && steps < 2) throw ConfigError("schedule: linear needs T >= 2");
}

RewardCase RewardSchedule::reward_case(int iteration, int t) const {
  if (iteration < 1) throw InvalidArgument("reward_case: iteration must be >= 1");
  if (t < 1 || t > steps) throw InvalidArgument("reward_case: t out of [1, T]");
  if (iteration == 1) return RewardCase::perceptual;
  switch (kind) {
    case ScheduleKind::lpips_only: return RewardCase::structural;
    case ScheduleKind::constant_hybrid: return RewardCase::hybrid;
    case ScheduleKind::linear: return RewardCase::linear;
    case ScheduleKind::segmented:
      if (t > tau_lpips) return RewardCase::structural;
      if (t > tau_clipiqa) return RewardCase::hybrid;
      return RewardCase::perceptual;
  }
  return RewardCase::perceptual;
}

RewardEvaluator::RewardEvaluator(RewardSchedule schedule, std::shared_ptr<const Reward> perceptual,
                                 std::shared_ptr<const Reward> structural)
    : schedule_(schedule), perceptual_(std::move(perceptual)), structural_(std::move(structural)) {
  schedule_.validate();
  if (!perceptual_ || !structural_) throw InvalidArgument("RewardEvaluator: null reward");
}

double RewardEvaluator::operator()(int iteration, int t, const ImageTensor& x0_hat,
                                   const ReferenceHandle& reference) const {
  const RewardCase c = schedule_.reward_case(iteration, t);
  const auto rc = [&] { return perceptual_->score(x0_hat, nullptr); };
  const auto rl = [&] { return structural_->score(x0_hat, &reference.get()); };
  switch (c) {
    case RewardCase::perceptual: return rc();
    case RewardCase::structural: return rl();
    case RewardCase::hybrid: return rc() + rl();
    case RewardCase::linear: {
      const double a = linear_weight(t, schedule_.steps);
      return a * rc() + (1.0 - a) * rl();
    }
  }
  return rc();
}

RewardEvaluator make_proxy_evaluator(const RewardSchedule& schedule, double structural_normalizer,
                                     double perceptual_cutoff) {
  return RewardEvaluator(schedule, std::make_shared<PerceptualProxy>(perceptual_cutoff),
                         std::make_shared<StructuralProxy>(structural_normalizer));
}

}  // namespace iafs
