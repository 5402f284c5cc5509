#include <array>
#include <algorithm>
#include <cmath>

#include "iafs/diffusion.hpp"
#include "iafs/error.hpp"
#include "iafs/spectral.hpp"

namespace iafs {

std::size_t DegradationOperator::blur_kernel_size() const {
  if (blur_sigma <= 0.0) return 1;
  return 2 * static_cast<std::size_t>(std::ceil(3.0 * blur_sigma)) + 1;
}

ImageTensor degrade(const ImageTensor& hr, const DegradationOperator& op, Rng& rng) {
  const std::size_t f = op.factor;
  if (f < 1) throw InvalidArgument("degrade: factor must be >= 1");
  if (hr.height() % f != 0 || hr.width() % f != 0) {
    throw InvalidArgument("degrade: " + hr.shape().str() + " not divisible by factor " +
                          std::to_string(f));
  }
  if (op.noise_std < 0.0) throw InvalidArgument("degrade: noise_std must be >= 0");

  const ImageTensor blurred =
      op.blur_sigma > 0.0 ? gaussian_blur(hr, op.blur_kernel_size(), op.blur_sigma) : hr;

  // Area subsampling: each LR sample is the mean of its f x f block.
  const Shape lr_shape{hr.channels(), hr.height() / f, hr.width() / f};
  ImageTensor lr(lr_shape);
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t c = 0; c < lr_shape.channels; ++c) {
    for (std::size_t y = 0; y < lr_shape.height; ++y) {
      for (std::size_t x = 0; x < lr_shape.width; ++x) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < f; ++dy) {
          for (std::size_t dx = 0; dx < f; ++dx) acc += blurred.at(c, y * f + dy, x * f + dx);
        }
        lr.at(c, y, x) = acc * inv;
      }
    }
  }
  if (op.noise_std > 0.0) {
    for (double& v : lr.values()) v += op.noise_std * rng.normal();
  }
  return lr;
}

namespace {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> cubic_taps(std::size_t in_size, std::size_t factor) {
  const std::size_t out_size = in_size * factor;
  std::vector<Taps> taps(out_size);
  for (std::size_t o = 0; o < out_size; ++o) {
    const double src = (static_cast<double>(o) + 0.5) / static_cast<double>(factor) - 0.5;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const long idx = static_cast<long>(base) - 1 + k;
      taps[o].index[k] = static_cast<std::size_t>(std::clamp<long>(idx, 0, static_cast<long>(in_size) - 1));
      taps[o].weight[k] = keys_cubic(frac - static_cast<double>(k - 1));
    }
  }
  return taps;
}

}  // namespace

ImageTensor upsample_bicubic(const ImageTensor& lr, std::size_t factor) {
  if (factor < 1) throw InvalidArgument("upsample_bicubic: factor must be >= 1");
  if (factor == 1) return lr;
  const auto ty = cubic_taps(lr.height(), factor);
  const auto tx = cubic_taps(lr.width(), factor);
  const Shape out_shape{lr.channels(), lr.height() * factor, lr.width() * factor};
  ImageTensor rows(Shape{lr.channels(), lr.height(), out_shape.width});
  ImageTensor out(out_shape);
  for (std::size_t c = 0; c < lr.channels(); ++c) {
    for (std::size_t y = 0; y < lr.height(); ++y) {
      for (std::size_t x = 0; x < out_shape.width; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += tx[x].weight[k] * lr.at(c, y, tx[x].index[k]);
        rows.at(c, y, x) = acc;
      }
    }
    for (std::size_t y = 0; y < out_shape.height; ++y) {
      for (std::size_t x = 0; x < out_shape.width; ++x) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += ty[y].weight[k] * rows.at(c, ty[y].index[k], x);
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

}  // namespace iafs
