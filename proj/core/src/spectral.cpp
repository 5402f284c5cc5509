#include "iafs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "fft.hpp"
#include "iafs/error.hpp"

namespace iafs {

ComplexTensor dft2(const ImageTensor& x) {
  ComplexTensor out(x.shape());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    auto src = x.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
    detail::dft2d_plane(dst, x.height(), x.width(), /*inverse=*/false);
  }
  return out;
}

RealInverse idft2(const ComplexTensor& s) {
  const Shape shape = s.shape();
  ComplexTensor work = s;
  RealInverse result{ImageTensor(shape), 0.0};
  const double scale = shape.plane_size() > 0 ? 1.0 / static_cast<double>(shape.plane_size()) : 0;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    auto plane = work.plane(c);
    detail::dft2d_plane(plane, shape.height, shape.width, /*inverse=*/true);
    auto dst = result.image.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      dst[i] = plane[i].real() * scale;
      result.max_imag_residue = std::max(result.max_imag_residue, std::abs(plane[i].imag() * scale));
    }
  }
  const double norm = l2_norm(result.image);
  const double limit = 1e-3 * norm + 1e-12 * std::sqrt(static_cast<double>(shape.size()));
  if (result.max_imag_residue > limit) {
    throw NumericalError("idft2: imaginary residue " + std::to_string(result.max_imag_residue) +
                         " exceeds 1e-3*||x||; spectrum is not conjugate-symmetric");
  }
  return result;
}

long signed_frequency(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

double frequency_radius(std::size_t ky, std::size_t kx, std::size_t height, std::size_t width) {
  const double base = static_cast<double>(std::min(height, width));
  const double fy = static_cast<double>(signed_frequency(ky, height)) * base / static_cast<double>(height);
  const double fx = static_cast<double>(signed_frequency(kx, width)) * base / static_cast<double>(width);
  return std::sqrt(fy * fy + fx * fx);
}

FrequencyMask::FrequencyMask(MaskKind kind, double parameter, std::size_t h, std::size_t w)
    : kind_(kind), parameter_(parameter), height_(h), width_(w), values_(h * w, 0.0) {}

FrequencyMask FrequencyMask::ideal_lowpass(std::size_t height, std::size_t width, double radius) {
  FrequencyMask m(MaskKind::ideal_lowpass, radius, height, width);
  for (std::size_t ky = 0; ky < height; ++ky) {
    for (std::size_t kx = 0; kx < width; ++kx) {
      m.values_[ky * width + kx] = frequency_radius(ky, kx, height, width) <= radius ? 1.0 : 0.0;
    }
  }
  return m;
}

FrequencyMask FrequencyMask::ideal_highpass(std::size_t height, std::size_t width, double radius) {
  return ideal_lowpass(height, width, radius).complement();
}

FrequencyMask FrequencyMask::gaussian_lowpass(std::size_t height, std::size_t width, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_lowpass: sigma must be > 0");
  FrequencyMask m(MaskKind::gaussian_lowpass, sigma, height, width);
  for (std::size_t ky = 0; ky < height; ++ky) {
    for (std::size_t kx = 0; kx < width; ++kx) {
      const double r = frequency_radius(ky, kx, height, width);
      m.values_[ky * width + kx] = std::exp(-0.5 * r * r / (sigma * sigma));
    }
  }
  return m;
}

FrequencyMask FrequencyMask::complement() const {
  MaskKind k = kind_;
  switch (kind_) {
    case MaskKind::ideal_lowpass: k = MaskKind::ideal_highpass; break;
    case MaskKind::ideal_highpass: k = MaskKind::ideal_lowpass; break;
    case MaskKind::gaussian_lowpass: k = MaskKind::gaussian_highpass; break;
    case MaskKind::gaussian_highpass: k = MaskKind::gaussian_lowpass; break;
  }
  FrequencyMask m(k, parameter_, height_, width_);
  for (std::size_t i = 0; i < values_.size(); ++i) m.values_[i] = 1.0 - values_[i];
  return m;
}

double default_cutoff_radius(std::size_t height, std::size_t width) {
  return static_cast<double>(std::min(height, width)) / 8.0;
}

ComplexTensor apply_mask(const ComplexTensor& s, const FrequencyMask& mask) {
  if (s.shape().height != mask.height() || s.shape().width != mask.width()) {
    throw InvalidArgument("apply_mask: mask " + std::to_string(mask.height()) + "x" +
                          std::to_string(mask.width()) + " does not match spectrum " +
                          s.shape().str());
  }
  ComplexTensor out = s;
  const auto& m = mask.values();
  for (std::size_t c = 0; c < s.shape().channels; ++c) {
    auto plane = out.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] *= m[i];
  }
  return out;
}

std::vector<double> gaussian_kernel_1d(std::size_t kernel_size, double sigma) {
  if (kernel_size % 2 == 0) {
    throw InvalidArgument("gaussian kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian kernel sigma must be > 0");
  const long half = static_cast<long>(kernel_size / 2);
  std::vector<double> taps(kernel_size);
  double total = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    taps[static_cast<std::size_t>(i + half)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

ImageTensor gaussian_blur(const ImageTensor& x, std::size_t kernel_size, double sigma) {
  const auto taps = gaussian_kernel_1d(kernel_size, sigma);
  const std::size_t k = kernel_size;
  const long half = static_cast<long>(k / 2);
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  // Reflected source index of every (output position, tap) pair.
  const auto index_table = [&](std::size_t n) {
    std::vector<std::size_t> idx(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        idx[i * k + j] = reflect_index(static_cast<long>(i) + static_cast<long>(j) - half, n);
      }
    }
    return idx;
  };
  const auto ix = index_table(w);
  const auto iy = index_table(h);
  ImageTensor out(x.shape());
  std::vector<double> tmp(h * w);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto src = x.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      const double* row = src.data() + y * w;
      for (std::size_t xx = 0; xx < w; ++xx) {
        const std::size_t* id = &ix[xx * k];
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += taps[j] * row[id[j]];
        tmp[y * w + xx] = acc;
      }
    }
    auto dst = out.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t* id = &iy[y * k];
      for (std::size_t xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += taps[j] * tmp[id[j] * w + xx];
        dst[y * w + xx] = acc;
      }
    }
  }
  return out;
}

FrequencySplit gaussian_split(const ImageTensor& x, std::size_t kernel_size, double sigma) {
  FrequencySplit split{gaussian_blur(x, kernel_size, sigma), ImageTensor()};
  split.high = x - split.low;
  return split;
}

FrequencySplit mask_split(const ImageTensor& x, double radius) {
  const auto mask = FrequencyMask::ideal_lowpass(x.height(), x.width(), radius);
  FrequencySplit split{idft2(apply_mask(dft2(x), mask)).image, ImageTensor()};
  split.high = x - split.low;
  return split;
}

ChannelStats channel_stats(const ImageTensor& x) {
  ChannelStats stats;
  stats.mean.resize(x.channels());
  stats.std.resize(x.channels());
  const double count = static_cast<double>(x.shape().plane_size());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    CompensatedSum s;
    for (double v : x.plane(c)) s.add(v);
    const double m = s.value() / count;
    CompensatedSum sq;
    for (double v : x.plane(c)) sq.add((v - m) * (v - m));
    stats.mean[c] = m;
    stats.std[c] = std::sqrt(sq.value() / count);
  }
  return stats;
}

ImageTensor adain(const ImageTensor& source, const ImageTensor& reference, double eps) {
  require_same_shape(source.shape(), reference.shape(), "adain");
  if (!(eps > 0.0)) throw InvalidArgument("adain: eps must be > 0");
  const ChannelStats src = channel_stats(source);
  const ChannelStats ref = channel_stats(reference);
  ImageTensor out(source.shape());
  for (std::size_t c = 0; c < source.channels(); ++c) {
    auto in = source.plane(c);
    auto dst = out.plane(c);
    if (src.std[c] <= eps) {
      std::fill(dst.begin(), dst.end(), ref.mean[c]);
      continue;
    }
    const double gain = ref.std[c] / src.std[c];
    for (std::size_t i = 0; i < in.size(); ++i) dst[i] = gain * (in[i] - src.mean[c]) + ref.mean[c];
  }
  return out;
}

double RapsdProfile::total_energy() const {
  CompensatedSum acc;
  for (std::size_t r = 0; r < power.size(); ++r) acc.add(static_cast<double>(counts[r]) * power[r]);
  return acc.value();
}

RapsdProfile rapsd(const ImageTensor& x) {
  const std::size_t h = x.height();
  const std::size_t w = x.width();
  std::vector<std::size_t> bin_of(h * w);
  std::size_t max_bin = 0;
  for (std::size_t ky = 0; ky < h; ++ky) {
    for (std::size_t kx = 0; kx < w; ++kx) {
      const auto b = static_cast<std::size_t>(std::lround(frequency_radius(ky, kx, h, w)));
      bin_of[ky * w + kx] = b;
      max_bin = std::max(max_bin, b);
    }
  }
  RapsdProfile profile;
  profile.power.assign(max_bin + 1, 0.0);
  profile.counts.assign(max_bin + 1, 0);
  std::vector<CompensatedSum> sums(max_bin + 1);
  const ComplexTensor spectrum = dft2(x);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    auto plane = spectrum.plane(c);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      sums[bin_of[i]].add(std::norm(plane[i]));
      ++profile.counts[bin_of[i]];
    }
  }
  for (std::size_t r = 0; r <= max_bin; ++r) {
    if (profile.counts[r] > 0) {
      profile.power[r] = sums[r].value() / static_cast<double>(profile.counts[r]);
    }
  }
  return profile;
}

void write_rapsd_csv(const std::filesystem::path& path, const RapsdProfile& profile) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "radius,power,log10_power\n" << std::setprecision(10);
  for (std::size_t r = 0; r < profile.bins(); ++r) {
    const double p = profile.power[r];
    os << r << ',' << p << ',' << std::log10(std::max(p, 1e-300)) << '\n';
  }
}

double gaussian_char_magnitude(double sigma_t, double omega_norm) {
  return std::exp(-0.5 * sigma_t * sigma_t * omega_norm * omega_norm);
}

}  // namespace iafs
