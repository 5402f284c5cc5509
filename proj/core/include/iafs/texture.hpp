#pragma once

#include <cstddef>

#include "iafs/diffusion.hpp"
#include "iafs/rng.hpp"
#include "iafs/tensor.hpp"

namespace iafs {

/// Single-plane Gaussian random field with radial power spectrum r^-exponent
/// restricted to min_radius < r <= max_radius, rescaled to zero mean and the
/// requested per-pixel std.
ImageTensor power_law_field(Rng& rng, std::size_t height, std::size_t width, double exponent,
                            double target_std, double min_radius, double max_radius);

/// Procedural HR texture: smooth power-law base, a few oriented gratings and
/// fine detail above the LR Nyquist radius; channels share the luminance
/// structure with per-channel gain/offset jitter. Values are clamped to [0,1].
struct TextureParams {
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  double base_std = 0.12;
  double base_exponent = 3.0;
  std::size_t gratings = 2;
  double grating_amplitude = 0.06;
  double fine_std = 0.035;
  double fine_exponent = 2.0;
  /// Radius separating base and fine bands; 0 means min(H, W) / (2 * 4).
  double fine_cutoff = 0.0;
  double channel_jitter = 0.1;
};

ImageTensor synthesize_texture(const TextureParams& params, Rng& rng);

/// Mixture prior whose component means are power-law textures around 0.5.
GmmPrior make_texture_gmm(std::size_t components, const Shape& shape, double component_std,
                          double mean_std, double exponent, Rng& rng);

}  // namespace iafs
