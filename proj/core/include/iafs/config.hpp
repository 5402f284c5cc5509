#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "iafs/diffusion.hpp"
#include "iafs/strategies.hpp"
#include "iafs/texture.hpp"

namespace iafs {

enum class ModelKind { synthetic_sr, gmm };
enum class ScheduleCurve { geometric, cosine };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct DatasetConfig {
  std::filesystem::path dir = "dataset";
  std::size_t images = 4;
  std::uint64_t seed = 1000;  ///< image i uses seed + i
  TextureParams texture{};
  DegradationOperator degradation{};
};

struct ModelConfig {
  ModelKind kind = ModelKind::synthetic_sr;
  int steps = 15;
  ScheduleCurve curve = ScheduleCurve::geometric;
  double min_sigma = 0.004;  ///< geometric only
  double max_sigma = 1.0;
  SyntheticSrParams sr{};
  // gmm
  std::size_t components = 8;
  double component_std = 0.03;
  double mean_std = 0.1;
  double mean_exponent = 2.0;
  std::uint64_t prior_seed = 7;
};

struct RewardConfig {
  double structural_normalizer = 1.0;
  double perceptual_cutoff = 0.0;  ///< <= 0 selects min(H, W) / 8
};

/// Everything a harness command needs. Loaded from an INI file whose sections
/// mirror the member names: [dataset], [texture], [degradation], [model],
/// [strategy], [afs], [schedule], [reward], [run], [output].
struct HarnessConfig {
  DatasetConfig dataset{};
  ModelConfig model{};
  StrategyConfig strategy{};
  RewardConfig reward{};
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = "runs";
  std::size_t threads = 1;

  /// Throws ConfigError on any inconsistent value.
  void validate() const;

  /// Sorted `section.key = value` lines of every setting that affects results.
  /// Output directory and thread count are excluded.
  [[nodiscard]] std::string canonical() const;
  /// 64-bit hash of canonical().
  [[nodiscard]] std::uint64_t hash() const;
  /// hash() as 16 lowercase hex digits.
  [[nodiscard]] std::string hash_hex() const;
};

/// Parses INI text. Unknown sections or keys, malformed numbers and invalid
/// combinations throw ConfigError. Missing keys keep their defaults.
HarnessConfig parse_config(const std::string& text);
/// Throws MissingInput when the file does not exist.
HarnessConfig load_config(const std::filesystem::path& path);

/// The configured noise schedule and denoiser.
NoiseSchedule make_schedule(const ModelConfig& model);
/// The seeded mixture prior of the gmm model.
GmmPrior make_prior(const HarnessConfig& cfg);
std::unique_ptr<Denoiser> make_denoiser(const HarnessConfig& cfg);
RewardEvaluator make_reward(const HarnessConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace iafs
