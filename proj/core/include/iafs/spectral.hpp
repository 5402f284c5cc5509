#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "iafs/tensor.hpp"

namespace iafs {

// ---------------------------------------------------------------------------
// Discrete Fourier transform
// ---------------------------------------------------------------------------

/// Unnormalized forward 2D DFT of every channel plane.
ComplexTensor dft2(const ImageTensor& x);

struct RealInverse {
  ImageTensor image;            ///< real part of the inverse transform
  double max_imag_residue = 0;  ///< largest |imag| discarded
};

/// Inverse 2D DFT (carries the 1/(HW) factor). Throws NumericalError when the
/// discarded imaginary part exceeds 1e-3 * ||real part||, which indicates a
/// spectrum that is not conjugate-symmetric.
RealInverse idft2(const ComplexTensor& s);

/// Signed frequency index of DFT bin k in a length-n axis: k for k <= n/2,
/// k - n otherwise.
long signed_frequency(std::size_t k, std::size_t n);

/// Radius of bin (ky, kx) in integer frequency units. Rectangular grids are
/// rescaled to the shorter axis so that annuli stay circular.
double frequency_radius(std::size_t ky, std::size_t kx, std::size_t height, std::size_t width);

// ---------------------------------------------------------------------------
// Frequency masks
// ---------------------------------------------------------------------------

enum class MaskKind { ideal_lowpass, ideal_highpass, gaussian_lowpass, gaussian_highpass };

/// Real per-bin weight in [0,1] over an H x W spectrum, shared by all channels.
class FrequencyMask {
 public:
  static FrequencyMask ideal_lowpass(std::size_t height, std::size_t width, double radius);
  static FrequencyMask ideal_highpass(std::size_t height, std::size_t width, double radius);
  static FrequencyMask gaussian_lowpass(std::size_t height, std::size_t width, double sigma);

  /// 1 - mask; the pair sums to one in every bin.
  [[nodiscard]] FrequencyMask complement() const;

  [[nodiscard]] MaskKind kind() const { return kind_; }
  [[nodiscard]] double parameter() const { return parameter_; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] double operator()(std::size_t ky, std::size_t kx) const {
    return values_[ky * width_ + kx];
  }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }

 private:
  FrequencyMask(MaskKind kind, double parameter, std::size_t h, std::size_t w);

  MaskKind kind_;
  double parameter_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// Default ideal-mask cutoff radius: min(H, W) / 8.
double default_cutoff_radius(std::size_t height, std::size_t width);

ComplexTensor apply_mask(const ComplexTensor& s, const FrequencyMask& mask);

// ---------------------------------------------------------------------------
// Spatial Gaussian split
// ---------------------------------------------------------------------------

/// Normalized 1D Gaussian taps, length `kernel_size` (odd).
std::vector<double> gaussian_kernel_1d(std::size_t kernel_size, double sigma);

/// Mirror index for reflect padding (edge sample not repeated: ...c b | a b c | b a...).
std::size_t reflect_index(long i, std::size_t n);

/// Separable Gaussian blur with reflect padding applied to every plane.
ImageTensor gaussian_blur(const ImageTensor& x, std::size_t kernel_size, double sigma);

struct FrequencySplit {
  ImageTensor low;
  ImageTensor high;
};

/// low = blur(x), high = x - low.
FrequencySplit gaussian_split(const ImageTensor& x, std::size_t kernel_size = 9,
                              double sigma = 1.0);

/// low = idft(M_L * dft(x)), high = x - low, with an ideal lowpass of `radius`.
FrequencySplit mask_split(const ImageTensor& x, double radius);

// ---------------------------------------------------------------------------
// Channel statistics / AdaIN
// ---------------------------------------------------------------------------

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;  ///< population standard deviation (divide by count)
};

ChannelStats channel_stats(const ImageTensor& x);

inline constexpr double kAdainEps = 1e-6;

/// Re-normalizes each source channel to the reference channel's mean and std.
/// A source channel whose std is <= eps becomes the constant reference mean.
ImageTensor adain(const ImageTensor& source, const ImageTensor& reference,
                  double eps = kAdainEps);

// ---------------------------------------------------------------------------
// Radially averaged power spectral density
// ---------------------------------------------------------------------------

struct RapsdProfile {
  std::vector<double> power;        ///< mean |F|^2 in annulus r (linear scale)
  std::vector<std::size_t> counts;  ///< spectral samples (bins x channels) in annulus r

  [[nodiscard]] std::size_t bins() const { return power.size(); }
  /// sum_r counts[r] * power[r], equal to sum |F|^2.
  [[nodiscard]] double total_energy() const;
};

/// Annulus r collects every bin with round(frequency_radius) == r, pooled over
/// channels. Bin 0 holds DC.
RapsdProfile rapsd(const ImageTensor& x);

/// Writes `radius,power,log10_power` rows.
void write_rapsd_csv(const std::filesystem::path& path, const RapsdProfile& profile);

// ---------------------------------------------------------------------------
// Gaussian characteristic function
// ---------------------------------------------------------------------------

/// |characteristic function| of N(mu, sigma^2 I) at frequency norm `omega_norm`:
/// exp(-0.5 sigma^2 ||omega||^2).
double gaussian_char_magnitude(double sigma_t, double omega_norm);

}  // namespace iafs
