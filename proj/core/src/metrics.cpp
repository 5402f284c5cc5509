#include "iafs/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "iafs/error.hpp"
#include "iafs/rewards.hpp"
#include "iafs/spectral.hpp"

namespace iafs {

double psnr(const ImageTensor& a, const ImageTensor& b, double peak) {
  require_same_shape(a.shape(), b.shape(), "psnr");
  if (a.empty()) throw InvalidArgument("psnr: empty image");
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    CompensatedSum se;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = pa[i] - pb[i];
      se.add(d * d);
    }
    const double mse = se.value() / static_cast<double>(pa.size());
    total += mse > 0.0 ? std::min(kPsnrCeiling, 10.0 * std::log10(peak * peak / mse))
                       : kPsnrCeiling;
  }
  return total / static_cast<double>(a.channels());
}

namespace {

constexpr std::size_t kWindow = 11;

/// Valid-mode separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t ow = w - k + 1;
  const std::size_t oh = h - k + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += taps[j] * plane[y * w + x + j];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += taps[j] * rows[(y + j) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b, double peak) {
  require_same_shape(a.shape(), b.shape(), "ssim");
  if (a.height() < kWindow || a.width() < kWindow) {
    throw InvalidArgument("ssim: image " + a.shape().str() + " smaller than the 11x11 window");
  }
  const std::vector<double> taps = gaussian_kernel_1d(kWindow, 1.5);
  const double c1 = std::pow(0.01 * peak, 2);
  const double c2 = std::pow(0.03 * peak, 2);
  const std::size_t h = a.height();
  const std::size_t w = a.width();
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c);
    const auto pb = b.plane(c);
    std::vector<double> va(pa.begin(), pa.end());
    std::vector<double> vb(pb.begin(), pb.end());
    std::vector<double> aa(va.size()), bb(va.size()), ab(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
      aa[i] = va[i] * va[i];
      bb[i] = vb[i] * vb[i];
      ab[i] = va[i] * vb[i];
    }
    const auto mu_a = filter_valid(va, h, w, taps);
    const auto mu_b = filter_valid(vb, h, w, taps);
    const auto e_aa = filter_valid(aa, h, w, taps);
    const auto e_bb = filter_valid(bb, h, w, taps);
    const auto e_ab = filter_valid(ab, h, w, taps);
    CompensatedSum acc;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i];
      const double mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      acc.add(((2 * ma * mb + c1) * (2 * cov + c2)) /
              ((ma * ma + mb * mb + c1) * (var_a + var_b + c2)));
    }
    total += acc.value() / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(a.channels());
}

std::vector<double> band_error_profile(const ImageTensor& x, const ImageTensor& reference,
                                       double eps) {
  require_same_shape(x.shape(), reference.shape(), "band_error_profile");
  const RapsdProfile px = rapsd(x);
  const RapsdProfile pr = rapsd(reference);
  std::vector<double> err(pr.bins());
  for (std::size_t r = 0; r < err.size(); ++r) {
    err[r] = std::abs(px.power[r] - pr.power[r]) / (pr.power[r] + eps);
  }
  return err;
}

MetricBlock compute_metrics(const ImageTensor& x, const ImageTensor& reference,
                            double structural_normalizer) {
  MetricBlock m;
  m.psnr = psnr(x, reference);
  m.ssim = ssim(x, reference);
  m.structural = structural_proxy(x, reference, structural_normalizer);
  m.perceptual = perceptual_proxy(x);
  m.combined = m.perceptual - m.structural;
  m.band_errors = band_error_profile(x, reference);
  return m;
}

}  // namespace iafs
