#include <algorithm>
#include <cmath>
#include <limits>

#include "iafs/diffusion.hpp"
#include "iafs/error.hpp"
#include "iafs/spectral.hpp"

namespace iafs {

ImageTensor Denoiser::initial_center(const ImageTensor& condition) const {
  return ImageTensor(state_shape(condition), 0.0);
}

DenoiserOutput CountingDenoiser::denoise(const ImageTensor& x_t, int t,
                                         const ImageTensor& condition) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return inner_.denoise(x_t, t, condition);
}

// --- GMM --------------------------------------------------------------------

void GmmPrior::validate() const {
  if (means.empty()) throw InvalidArgument("GmmPrior: no components");
  if (means.size() != weights.size()) {
    throw InvalidArgument("GmmPrior: means/weights length mismatch");
  }
  if (!(variance > 0.0)) throw InvalidArgument("GmmPrior: variance must be > 0");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("GmmPrior: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("GmmPrior: weights do not sum to 1");
  for (const auto& m : means) require_same_shape(m.shape(), means.front().shape(), "GmmPrior");
}

Shape GmmPrior::shape() const { return means.empty() ? Shape{} : means.front().shape(); }

std::size_t GmmPrior::nearest_component(const ImageTensor& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double d = mean_squared_difference(x, means[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ImageTensor GmmPrior::sample(Rng& rng) const {
  const double u = rng.uniform();
  std::size_t k = 0;
  double acc = weights[0];
  while (u > acc && k + 1 < weights.size()) acc += weights[++k];
  ImageTensor x = means[k];
  const double s = std::sqrt(variance);
  for (double& v : x.values()) v += s * rng.normal();
  return x;
}

ImageTensor gmm_posterior_mean(const ImageTensor& x_t, double noise_sigma, const GmmPrior& prior) {
  const double s2 = prior.variance;
  const double n2 = noise_sigma * noise_sigma;
  const double marginal = s2 + n2;
  const std::size_t kcount = prior.means.size();

  std::vector<double> logits(kcount);
  for (std::size_t k = 0; k < kcount; ++k) {
    const double sq = mean_squared_difference(x_t, prior.means[k]) * static_cast<double>(x_t.size());
    logits[k] = std::log(prior.weights[k]) - 0.5 * sq / marginal;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(top)) {
    throw NumericalError("gmm_posterior_mean: all responsibilities underflowed at sigma=" +
                         std::to_string(noise_sigma));
  }
  std::vector<double> resp(kcount);
  double total = 0.0;
  for (std::size_t k = 0; k < kcount; ++k) {
    resp[k] = std::exp(logits[k] - top);
    total += resp[k];
  }

  // sum_k r_k (s2 x + n2 m_k) / (s2 + n2)
  ImageTensor out = x_t * (s2 / marginal);
  for (std::size_t k = 0; k < kcount; ++k) {
    const double w = resp[k] / total * (n2 / marginal);
    if (w == 0.0) continue;
    const auto m = prior.means[k].values();
    auto dst = out.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * m[i];
  }
  return out;
}

GmmDenoiser::GmmDenoiser(GmmPrior prior, NoiseSchedule schedule)
    : prior_(std::move(prior)), schedule_(std::move(schedule)) {
  prior_.validate();
}

DenoiserOutput GmmDenoiser::denoise(const ImageTensor& x_t, int t, const ImageTensor&) const {
  require_same_shape(x_t.shape(), prior_.shape(), "GmmDenoiser");
  DenoiserOutput out;
  out.clean = gmm_posterior_mean(x_t, schedule_.cumulative_sigma(t), prior_);
  out.mean = posterior_mean(x_t, out.clean, schedule_.carry(t));
  if (!out.clean.all_finite() || !out.mean.all_finite()) {
    throw NumericalError("GmmDenoiser: non-finite output at t=" + std::to_string(t));
  }
  return out;
}

// --- Synthetic SR -----------------------------------------------------------

SyntheticSrDenoiser::SyntheticSrDenoiser(SyntheticSrParams params, NoiseSchedule schedule)
    : params_(params), schedule_(std::move(schedule)) {
  if (params_.factor < 1) throw InvalidArgument("SyntheticSrDenoiser: factor must be >= 1");
  if (params_.detail_gain < 0.0) throw InvalidArgument("SyntheticSrDenoiser: detail_gain < 0");
}

Shape SyntheticSrDenoiser::state_shape(const ImageTensor& condition) const {
  return Shape{condition.channels(), condition.height() * params_.factor,
               condition.width() * params_.factor};
}

ImageTensor SyntheticSrDenoiser::initial_center(const ImageTensor& condition) const {
  return upsample_bicubic(condition, params_.factor);
}

std::vector<double> SyntheticSrDenoiser::detail_density(std::size_t height,
                                                        std::size_t width) const {
  const auto& tex = params_.texture;
  const double cutoff = static_cast<double>(std::min(height, width)) /
                        (2.0 * static_cast<double>(params_.factor));
  const std::size_t bins = height * width;
  std::vector<double> density(bins, 0.0);
  std::vector<double> shape(bins, 0.0);
  double fine_total = 0.0;
  std::size_t coarse_bins = 0;
  for (std::size_t ky = 0; ky < height; ++ky) {
    for (std::size_t kx = 0; kx < width; ++kx) {
      const double r = frequency_radius(ky, kx, height, width);
      if (r > cutoff) {
        shape[ky * width + kx] = std::pow(r / cutoff, -tex.fine_exponent);
        fine_total += shape[ky * width + kx];
      } else {
        ++coarse_bins;
      }
    }
  }
  // Scale so that the mean density over all bins (= per-pixel variance)
  // equals amplitude^2 for each band.
  const double gain2 = params_.detail_gain * params_.detail_gain;
  const double fine_scale =
      fine_total > 0 ? gain2 * tex.fine_amplitude * tex.fine_amplitude * bins / fine_total : 0.0;
  const double coarse_value =
      coarse_bins > 0 ? gain2 * tex.coarse_amplitude * tex.coarse_amplitude * bins / coarse_bins
                      : 0.0;
  for (std::size_t ky = 0; ky < height; ++ky) {
    for (std::size_t kx = 0; kx < width; ++kx) {
      const std::size_t i = ky * width + kx;
      const double r = frequency_radius(ky, kx, height, width);
      density[i] = r > cutoff ? fine_scale * shape[i] : coarse_value;
    }
  }
  return density;
}

const std::vector<double>& SyntheticSrDenoiser::cached_density(std::size_t height,
                                                               std::size_t width) const {
  const std::lock_guard lock(cache_mutex_);
  auto it = density_cache_.find({height, width});
  if (it == density_cache_.end()) {
    it = density_cache_.emplace(std::pair{height, width}, detail_density(height, width)).first;
  }
  return it->second;  // std::map nodes are stable
}

DenoiserOutput SyntheticSrDenoiser::denoise(const ImageTensor& x_t, int t,
                                            const ImageTensor& condition) const {
  const Shape expected = state_shape(condition);
  if (x_t.shape() != expected) {
    throw InvalidArgument("SyntheticSrDenoiser: state " + x_t.shape().str() +
                          " inconsistent with condition " + condition.shape().str() +
                          " at factor " + std::to_string(params_.factor));
  }
  const ImageTensor base = upsample_bicubic(condition, params_.factor);
  DenoiserOutput out;
  if (params_.detail_gain == 0.0) {
    out.clean = base;
  } else {
    const double noise = schedule_.cumulative_sigma(t);
    const auto& density = cached_density(x_t.height(), x_t.width());
    ComplexTensor spectrum = dft2(x_t - base);
    for (std::size_t c = 0; c < spectrum.shape().channels; ++c) {
      auto plane = spectrum.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        const double v = density[i];
        plane[i] *= v > 0.0 ? v / (v + noise * noise) : 0.0;
      }
    }
    out.clean = base + idft2(spectrum).image;
  }
  out.mean = posterior_mean(x_t, out.clean, schedule_.carry(t));
  if (!out.clean.all_finite() || !out.mean.all_finite()) {
    throw NumericalError("SyntheticSrDenoiser: non-finite output at t=" + std::to_string(t));
  }
  return out;
}

}  // namespace iafs
