#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <string>

#include "iafs/error.hpp"
#include "iafs/tensor.hpp"

namespace iafs {

/// Raised when a poisoned reference handle is dereferenced.
class PoisonedReference : public Error {
 public:
  using Error::Error;
};

/// Optional pseudo-GT passed to rewards. Every get() is counted, so callers can
/// tell afterwards whether a reward actually consulted the reference.
class ReferenceHandle {
 public:
  ReferenceHandle() = default;
  static ReferenceHandle of(const ImageTensor& reference);
  /// Claims to be present but throws PoisonedReference on access.
  static ReferenceHandle poisoned();

  [[nodiscard]] bool present() const { return reference_ != nullptr || poisoned_; }
  [[nodiscard]] bool is_poisoned() const { return poisoned_; }
  /// Throws InvalidArgument when absent.
  [[nodiscard]] const ImageTensor& get() const;
  [[nodiscard]] std::size_t accesses() const { return accesses_ ? accesses_->load() : 0; }

 private:
  const ImageTensor* reference_ = nullptr;
  bool poisoned_ = false;
  std::shared_ptr<std::atomic<std::size_t>> accesses_ =
      std::make_shared<std::atomic<std::size_t>>(0);
};

/// Pluggable scalar reward; higher is better.
class Reward {
 public:
  virtual ~Reward() = default;
  /// `reference` may be null when requires_reference() is false.
  [[nodiscard]] virtual double score(const ImageTensor& x, const ImageTensor* reference) const = 0;
  [[nodiscard]] virtual bool requires_reference() const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Fraction of non-DC spectral energy above `cutoff` (<= 0 selects
/// min(H, W)/8). Constant images score 0.
double perceptual_proxy(const ImageTensor& x, double cutoff = 0.0);

inline constexpr std::array<double, 3> kPyramidWeights = {0.2, 0.3, 0.5};

/// Three-level 2x2 box pyramid (full, /2, /4); per-level RMS difference,
/// combined with `weights` and divided by `normalizer`.
double structural_proxy(const ImageTensor& x, const ImageTensor& reference,
                        double normalizer = 1.0,
                        const std::array<double, 3>& weights = kPyramidWeights);

class PerceptualProxy final : public Reward {
 public:
  explicit PerceptualProxy(double cutoff = 0.0) : cutoff_(cutoff) {}
  [[nodiscard]] double score(const ImageTensor& x, const ImageTensor*) const override;
  [[nodiscard]] bool requires_reference() const override { return false; }
  [[nodiscard]] std::string name() const override { return "perceptual"; }

 private:
  double cutoff_;
};

/// Negated structural distance so that higher is better.
class StructuralProxy final : public Reward {
 public:
  explicit StructuralProxy(double normalizer = 1.0,
                           std::array<double, 3> weights = kPyramidWeights);
  [[nodiscard]] double score(const ImageTensor& x, const ImageTensor* reference) const override;
  [[nodiscard]] bool requires_reference() const override { return true; }
  [[nodiscard]] std::string name() const override { return "structural"; }
  [[nodiscard]] double distance(const ImageTensor& x, const ImageTensor& reference) const;
  [[nodiscard]] double normalizer() const { return normalizer_; }

 private:
  double normalizer_;
  std::array<double, 3> weights_;
};

// ---------------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------------

enum class ScheduleKind { lpips_only, constant_hybrid, linear, segmented };

/// Which formula a (iteration, t) cell evaluates.
enum class RewardCase {
  perceptual,  ///< R_C
  structural,  ///< -R_L
  hybrid,      ///< R_C - R_L
  linear,      ///< a_t R_C - (1 - a_t) R_L
};

const char* to_string(ScheduleKind kind);
const char* to_string(RewardCase c);
/// Accepts "lpips-only", "constant-hybrid", "linear", "segmented".
ScheduleKind parse_schedule_kind(const std::string& text);

/// a_t = (T - t) / (T - 1). Throws InvalidArgument for T < 2 or t outside [1, T].
double linear_weight(int t, int steps);

struct RewardSchedule {
  ScheduleKind kind = ScheduleKind::segmented;
  int tau_clipiqa = 4;
  int tau_lpips = 7;
  int steps = 15;

  /// Throws ConfigError on T < 1, 0 <= tau_c <= tau_l <= T violated, or
  /// kind == linear with T < 2.
  void validate() const;

  /// Iteration 1 is always perceptual. Segmented: t > tau_l structural,
  /// tau_c < t <= tau_l hybrid, t <= tau_c perceptual.
  [[nodiscard]] RewardCase reward_case(int iteration, int t) const;
};

/// Combines a perceptual and a structural Reward according to a schedule.
class RewardEvaluator {
 public:
  RewardEvaluator(RewardSchedule schedule, std::shared_ptr<const Reward> perceptual,
                  std::shared_ptr<const Reward> structural);

  /// Throws InvalidArgument when the case needs a reference and none is present.
  [[nodiscard]] double operator()(int iteration, int t, const ImageTensor& x0_hat,
                                  const ReferenceHandle& reference) const;

  [[nodiscard]] const RewardSchedule& schedule() const { return schedule_; }
  [[nodiscard]] const Reward& perceptual() const { return *perceptual_; }
  [[nodiscard]] const Reward& structural() const { return *structural_; }

 private:
  RewardSchedule schedule_;
  std::shared_ptr<const Reward> perceptual_;
  std::shared_ptr<const Reward> structural_;
};

/// Evaluator over the two built-in proxies.
RewardEvaluator make_proxy_evaluator(const RewardSchedule& schedule,
                                     double structural_normalizer = 1.0,
                                     double perceptual_cutoff = 0.0);

}  // namespace iafs
