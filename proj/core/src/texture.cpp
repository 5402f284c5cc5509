#include "iafs/texture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iafs/error.hpp"
#include "iafs/spectral.hpp"

namespace iafs {

ImageTensor power_law_field(Rng& rng, std::size_t height, std::size_t width, double exponent,
                            double target_std, double min_radius, double max_radius) {
  const Shape plane{1, height, width};
  ComplexTensor spectrum = dft2(sample_standard_normal(rng, plane));
  auto values = spectrum.plane(0);
  for (std::size_t ky = 0; ky < height; ++ky) {
    for (std::size_t kx = 0; kx < width; ++kx) {
      const double r = frequency_radius(ky, kx, height, width);
      const bool keep = r > min_radius && r <= max_radius && r > 0.0;
      values[ky * width + kx] *= keep ? std::pow(r, -0.5 * exponent) : 0.0;
    }
  }
  ImageTensor field = idft2(spectrum).image;
  const ChannelStats stats = channel_stats(field);
  if (stats.std[0] > 0.0) {
    for (double& v : field.values()) v = (v - stats.mean[0]) * target_std / stats.std[0];
  }
  return field;
}

ImageTensor synthesize_texture(const TextureParams& p, Rng& rng) {
  if (p.channels == 0 || p.height == 0 || p.width == 0) {
    throw InvalidArgument("synthesize_texture: empty shape");
  }
  const double cutoff = p.fine_cutoff > 0.0
                            ? p.fine_cutoff
                            : static_cast<double>(std::min(p.height, p.width)) / 8.0;
  const double nyquist = std::hypot(static_cast<double>(p.height), static_cast<double>(p.width));

  Rng base_rng = rng.split(1);
  Rng grating_rng = rng.split(2);
  Rng fine_rng = rng.split(3);
  Rng color_rng = rng.split(4);

  ImageTensor luminance =
      power_law_field(base_rng, p.height, p.width, p.base_exponent, p.base_std, 0.0, cutoff);
  for (std::size_t g = 0; g < p.gratings; ++g) {
    const double radius = 2.0 + grating_rng.uniform() * (cutoff - 2.0);
    const double angle = grating_rng.uniform() * std::numbers::pi;
    const double phase = grating_rng.uniform() * 2.0 * std::numbers::pi;
    const double fy = radius * std::sin(angle) / static_cast<double>(p.height);
    const double fx = radius * std::cos(angle) / static_cast<double>(p.width);
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t x = 0; x < p.width; ++x) {
        luminance.at(0, y, x) +=
            p.grating_amplitude *
            std::cos(2.0 * std::numbers::pi * (fy * static_cast<double>(y) +
                                               fx * static_cast<double>(x)) + phase);
      }
    }
  }
  luminance += power_law_field(fine_rng, p.height, p.width, p.fine_exponent, p.fine_std, cutoff,
                               nyquist);

  ImageTensor out(Shape{p.channels, p.height, p.width});
  for (std::size_t c = 0; c < p.channels; ++c) {
    const double gain = 1.0 + p.channel_jitter * (2.0 * color_rng.uniform() - 1.0);
    const double offset = 0.5 + 0.5 * p.channel_jitter * (2.0 * color_rng.uniform() - 1.0);
    auto src = luminance.plane(0);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::clamp(offset + gain * src[i], 0.0, 1.0);
  }
  return out;
}

GmmPrior make_texture_gmm(std::size_t components, const Shape& shape, double component_std,
                          double mean_std, double exponent, Rng& rng) {
  if (components == 0) throw InvalidArgument("make_texture_gmm: need >= 1 component");
  const double nyquist = std::hypot(static_cast<double>(shape.height), static_cast<double>(shape.width));
  GmmPrior prior;
  prior.variance = component_std * component_std;
  for (std::size_t k = 0; k < components; ++k) {
    Rng comp = rng.split(k);
    ImageTensor mean(shape);
    for (std::size_t c = 0; c < shape.channels; ++c) {
      Rng chan = comp.split(c);
      const ImageTensor field =
          power_law_field(chan, shape.height, shape.width, exponent, mean_std, 0.0, nyquist);
      auto dst = mean.plane(c);
      auto src = field.plane(0);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.5 + src[i];
    }
    prior.means.push_back(std::move(mean));
    prior.weights.push_back(1.0 / static_cast<double>(components));
  }
  // Exact simplex: absorb rounding in the last weight.
  double head = 0.0;
  for (std::size_t k = 0; k + 1 < components; ++k) head += prior.weights[k];
  prior.weights.back() = 1.0 - head;
  return prior;
}

}  // namespace iafs
