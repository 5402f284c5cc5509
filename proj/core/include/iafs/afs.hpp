#pragma once

#include <cstddef>
#include <vector>

#include "iafs/spectral.hpp"
#include "iafs/tensor.hpp"

namespace iafs {

enum class SplitKind { spatial_gaussian, dft_mask };

struct AfsConfig {
  bool enabled = true;
  std::size_t neighbors = 2;  ///< K
  SplitKind split = SplitKind::spatial_gaussian;
  std::size_t kernel_size = 9;
  double sigma = 1.0;
  double mask_radius = 0.0;  ///< dft_mask only; <= 0 selects min(H, W)/8
  double adain_eps = kAdainEps;
  /// Rank neighbours by similarity of clean predictions instead of latents.
  bool similarity_on_clean = false;

  /// Throws ConfigError for K == 0, an even kernel or sigma <= 0.
  void validate() const;
};

/// Per-timestep candidates x_t^(k) with their clean predictions and rewards.
struct ParticlePool {
  std::vector<ImageTensor> particles;
  std::vector<ImageTensor> clean;
  std::vector<double> rewards;

  [[nodiscard]] std::size_t size() const { return particles.size(); }
  /// Throws InvalidArgument on empty pools, length mismatches, differing
  /// shapes or non-finite rewards.
  void validate() const;
};

/// Index of the largest reward; ties go to the lowest index.
std::size_t select_best(const std::vector<double>& rewards);

/// Cosine similarity of every tensor against tensors[chosen]. A zero-norm
/// tensor gets weight 0.
std::vector<double> similarity_weights(const std::vector<ImageTensor>& tensors,
                                       std::size_t chosen);

FrequencySplit split_bands(const ImageTensor& x, const AfsConfig& cfg);

struct LowFrequencyReference {
  ImageTensor low;
  std::vector<std::size_t> neighbors;  ///< indices actually averaged
  std::vector<double> weights;         ///< normalized, aligned with `neighbors`
  bool fallback = false;               ///< no positive neighbour; own low band used
};

/// Similarity-weighted mean of the low bands of the top-K neighbours of
/// `chosen` (chosen excluded, non-positive weights dropped). K is clamped to
/// N - 1.
LowFrequencyReference lowfreq_reference(const ParticlePool& pool, std::size_t chosen,
                                        const AfsConfig& cfg);

struct AfsResult {
  ImageTensor refined;
  ImageTensor adapted_low;  ///< AdaIN output; refined == adapted_low + chosen high band
  std::size_t chosen = 0;
  LowFrequencyReference reference;
  double mean_shift = 0.0;   ///< mean over channels of |mu_out - mu_in| of the low band
  double std_ratio = 1.0;    ///< mean over channels of sigma_out / sigma_in of the low band
  bool identity = false;     ///< refined is an exact copy of the chosen particle
};

/// Select, split, AdaIN-align the chosen low band to the neighbour reference
/// and add back the chosen high band. N == 1, a disabled config or a fallback
/// reference return the chosen particle unchanged.
AfsResult afs_refine(const ParticlePool& pool, const AfsConfig& cfg);

}  // namespace iafs
