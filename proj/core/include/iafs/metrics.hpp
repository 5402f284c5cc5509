#pragma once

#include <vector>

#include "iafs/tensor.hpp"

namespace iafs {

inline constexpr double kPsnrCeiling = 100.0;

/// Mean over channels of 10 log10(peak^2 / MSE_c); a channel with MSE 0
/// contributes the 100 dB ceiling.
double psnr(const ImageTensor& a, const ImageTensor& b, double peak = 1.0);

/// Mean SSIM over valid 11x11 Gaussian-window (sigma 1.5) positions, averaged
/// over channels. C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Throws
/// InvalidArgument for images smaller than the window.
double ssim(const ImageTensor& a, const ImageTensor& b, double peak = 1.0);

/// |P_x(r) - P_ref(r)| / (P_ref(r) + eps) per RAPSD bin.
std::vector<double> band_error_profile(const ImageTensor& x, const ImageTensor& reference,
                                       double eps = 1e-12);

struct MetricBlock {
  double psnr = 0.0;
  double ssim = 0.0;
  double structural = 0.0;  ///< structural proxy distance to the reference
  double perceptual = 0.0;  ///< perceptual proxy of x
  double combined = 0.0;    ///< perceptual - structural
  std::vector<double> band_errors;
};

MetricBlock compute_metrics(const ImageTensor& x, const ImageTensor& reference,
                            double structural_normalizer = 1.0);

}  // namespace iafs
