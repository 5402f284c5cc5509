#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "iafs/rng.hpp"
#include "iafs/tensor.hpp"

namespace iafs {

// ---------------------------------------------------------------------------
// Noise schedule
// ---------------------------------------------------------------------------

/// Discrete reverse-process schedule for t = 0..T.
///
/// cosine() follows the variance-preserving curve
/// alpha_bar(u) = cos^2(pi/2 (u+s)/(1+s)) / cos^2(pi/2 s/(1+s)), s = 0.008,
/// with time rescaled so that the last step reaches a chosen noise ceiling;
/// geometric() log-spaces the noise level instead. The sampler state is the VP latent divided by sqrt(alpha_bar), so
///
///   x_t = x_0 + cumulative_sigma(t) * eps,  cumulative_sigma^2 = (1 - a) / a.
///
/// One reverse step draws x_{t-1} = mu + step_sigma(t) * z where
///   mu = carry(t) * x_t + (1 - carry(t)) * x0_hat,
///   carry(t) = cumulative_sigma(t-1)^2 / cumulative_sigma(t)^2,
///   step_sigma(t)^2 = cumulative_sigma(t-1)^2 * (1 - carry(t)).
class NoiseSchedule {
 public:
  static NoiseSchedule cosine(int steps, double max_sigma);
  /// cumulative_sigma log-spaced from min_sigma (t = 1) to max_sigma (t = T);
  /// signal_level = 1 / (1 + sigma_bar^2) is the matching VP coefficient.
  static NoiseSchedule geometric(int steps, double min_sigma, double max_sigma);

  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] double max_sigma() const { return cumulative_.back(); }

  /// alpha_bar_t, t in [0, T]; alpha_bar_0 = 1.
  [[nodiscard]] double signal_level(int t) const;
  /// Total noise std of x_t around x_0 (sigma-bar); 0 at t = 0.
  [[nodiscard]] double cumulative_sigma(int t) const;
  /// Std of the fresh noise injected by the step t -> t-1, t in [1, T].
  [[nodiscard]] double step_sigma(int t) const;
  /// Weight of x_t in the posterior mean of the step t -> t-1, t in [1, T].
  [[nodiscard]] double carry(int t) const;

 private:
  NoiseSchedule() = default;
  /// Derives signal, carry and step noise from sigma_bar_0..T (sigma_bar_0 = 0).
  static NoiseSchedule from_cumulative(std::vector<double> cumulative);
  void check(int t, int lo) const;

  int steps_ = 0;
  std::vector<double> signal_;
  std::vector<double> cumulative_;
  std::vector<double> step_;
  std::vector<double> carry_;
};

/// x_{t-1} = mu + sigma_t z with fresh z from `rng`; sigma_t == 0 returns mu exactly.
ImageTensor reverse_step(const ImageTensor& mu, double sigma_t, Rng& rng);

/// Schedule-consistent posterior mean of the step t -> t-1.
ImageTensor posterior_mean(const ImageTensor& x_t, const ImageTensor& x0_hat, double carry);

// ---------------------------------------------------------------------------
// Denoiser contract
// ---------------------------------------------------------------------------

struct DenoiserOutput {
  ImageTensor mean;   ///< mu_theta(x_t, t)
  ImageTensor clean;  ///< x0_hat, the clean-image prediction rewards evaluate
};

/// phi_t of the sampler: maps (x_t, t, condition) to (mu, x0_hat).
/// Implementations must be pure functions of their inputs.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual DenoiserOutput denoise(const ImageTensor& x_t, int t,
                                 const ImageTensor& condition) const = 0;

  /// Shape of the sampler state for a given condition.
  [[nodiscard]] virtual Shape state_shape(const ImageTensor& condition) const = 0;

  /// Mean of the initial state x_T (zero unless the model shifts toward its condition).
  [[nodiscard]] virtual ImageTensor initial_center(const ImageTensor& condition) const;

  [[nodiscard]] virtual const NoiseSchedule& schedule() const = 0;
};

/// Decorator that counts denoise() calls; safe to share across threads.
class CountingDenoiser final : public Denoiser {
 public:
  explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

  DenoiserOutput denoise(const ImageTensor& x_t, int t,
                         const ImageTensor& condition) const override;
  [[nodiscard]] Shape state_shape(const ImageTensor& condition) const override {
    return inner_.state_shape(condition);
  }
  [[nodiscard]] ImageTensor initial_center(const ImageTensor& condition) const override {
    return inner_.initial_center(condition);
  }
  [[nodiscard]] const NoiseSchedule& schedule() const override { return inner_.schedule(); }

  [[nodiscard]] std::size_t calls() const { return calls_.load(); }

 private:
  const Denoiser& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Gaussian-mixture prior with closed-form denoiser
// ---------------------------------------------------------------------------

struct GmmPrior {
  std::vector<ImageTensor> means;
  std::vector<double> weights;  ///< simplex
  double variance = 1e-3;       ///< shared isotropic component variance s^2

  /// Throws InvalidArgument unless weights sum to 1 (1e-9), variance > 0 and
  /// all means share one shape.
  void validate() const;
  [[nodiscard]] Shape shape() const;

  /// Index of the component mean closest (L2) to x.
  [[nodiscard]] std::size_t nearest_component(const ImageTensor& x) const;
  /// Draw x_0 from the mixture.
  [[nodiscard]] ImageTensor sample(Rng& rng) const;
};

/// Posterior mean of x_0 given x_t = x_0 + noise_sigma * eps:
/// responsibility-weighted conjugate shrinkage toward each component mean.
/// Throws NumericalError if the responsibilities cannot be normalized.
ImageTensor gmm_posterior_mean(const ImageTensor& x_t, double noise_sigma, const GmmPrior& prior);

class GmmDenoiser final : public Denoiser {
 public:
  GmmDenoiser(GmmPrior prior, NoiseSchedule schedule);

  DenoiserOutput denoise(const ImageTensor& x_t, int t,
                         const ImageTensor& condition) const override;
  [[nodiscard]] Shape state_shape(const ImageTensor&) const override { return prior_.shape(); }
  [[nodiscard]] const NoiseSchedule& schedule() const override { return schedule_; }
  [[nodiscard]] const GmmPrior& prior() const { return prior_; }

 private:
  GmmPrior prior_;
  NoiseSchedule schedule_;
};

// ---------------------------------------------------------------------------
// Degradation and the synthetic super-resolution surrogate
// ---------------------------------------------------------------------------

struct DegradationOperator {
  double blur_sigma = 1.5;  ///< <= 0 disables the blur
  std::size_t factor = 4;
  double noise_std = 0.01;

  /// Odd kernel covering +-3 sigma.
  [[nodiscard]] std::size_t blur_kernel_size() const;
};

/// blur -> mean over each factor x factor block -> add N(0, noise_std^2).
ImageTensor degrade(const ImageTensor& hr, const DegradationOperator& op, Rng& rng);

/// Separable bicubic (Keys, a = -0.5) upsampling by an integer factor with
/// pixel-centre alignment and clamped borders.
ImageTensor upsample_bicubic(const ImageTensor& lr, std::size_t factor);

/// Spectral statistics the surrogate assumes for the missing HR detail.
struct TextureStatistics {
  double fine_amplitude = 0.035;  ///< per-pixel std of detail above the LR Nyquist radius
  double fine_exponent = 2.0;     ///< power-law decay of the detail spectrum
  double coarse_amplitude = 0.01; ///< per-pixel std of structural error below it
};

struct SyntheticSrParams {
  std::size_t factor = 4;
  double detail_gain = 1.0;
  TextureStatistics texture{};
};

/// Conditional Gaussian surrogate: x_0 | y ~ N(U(y), C) with C stationary and
/// diagonal in frequency. The clean prediction is the Wiener estimate
///
///   x0_hat = U(y) + IDFT[ v / (v + sigma_bar_t^2) * DFT(x_t - U(y)) ],
///
/// so hallucinated detail is the sampler's seeded noise passed through a
/// band-pass gain that opens as t -> 0. detail_gain scales v; 0 collapses the
/// prediction to U(y).
class SyntheticSrDenoiser final : public Denoiser {
 public:
  SyntheticSrDenoiser(SyntheticSrParams params, NoiseSchedule schedule);

  DenoiserOutput denoise(const ImageTensor& x_t, int t,
                         const ImageTensor& condition) const override;
  [[nodiscard]] Shape state_shape(const ImageTensor& condition) const override;
  [[nodiscard]] ImageTensor initial_center(const ImageTensor& condition) const override;
  [[nodiscard]] const NoiseSchedule& schedule() const override { return schedule_; }
  [[nodiscard]] const SyntheticSrParams& params() const { return params_; }

  /// Per-bin prior variance density v(ky, kx) for an H x W state.
  [[nodiscard]] std::vector<double> detail_density(std::size_t height, std::size_t width) const;

 private:
  const std::vector<double>& cached_density(std::size_t height, std::size_t width) const;

  SyntheticSrParams params_;
  NoiseSchedule schedule_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> density_cache_;
};

}  // namespace iafs
