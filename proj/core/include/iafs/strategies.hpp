#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "iafs/afs.hpp"
#include "iafs/diffusion.hpp"
#include "iafs/rewards.hpp"
#include "iafs/rng.hpp"

namespace iafs {

enum class StrategyKind { vanilla, iafs, bon, beam, fk_smc, kds };

const char* to_string(StrategyKind kind);
/// Accepts "vanilla", "iafs", "bon", "beam", "fk-smc", "kds".
StrategyKind parse_strategy_kind(const std::string& text);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::iafs;
  std::size_t particles = 10;   ///< N
  int iterations = 3;           ///< n
  std::size_t beam_width = 5;   ///< B
  std::size_t branch = 2;
  double fk_temperature = 0.001;
  double kds_bandwidth = 0.05;  ///< kernel h on the per-pixel RMS distance
  double kds_step = 0.5;        ///< lambda in (0, 1]
  AfsConfig afs{};
  RewardSchedule schedule{};
  bool save_latents = false;

  /// Throws ConfigError on N == 0, n < 1, B * branch == 0, temperature <= 0,
  /// bandwidth <= 0, step outside (0, 1] or an invalid schedule.
  void validate() const;
};

/// Denoiser calls a strategy makes: vanilla T; iafs/bon/fk/kds n*N*T;
/// beam n*B*branch*T.
std::size_t expected_denoiser_calls(const StrategyConfig& cfg, int steps);

struct TraceRow {
  int iteration = 0;
  int t = 0;
  std::size_t chosen = 0;
  double reward = 0.0;          ///< reward of the chosen candidate
  double mean_reward = 0.0;     ///< pool average
  std::string segment;          ///< RewardCase label, "none" for vanilla
  bool reference_used = false;
  std::vector<std::size_t> neighbors;
  std::vector<double> neighbor_weights;
  double adain_mean_shift = 0.0;
  double adain_std_ratio = 1.0;
  double ess = 0.0;             ///< fk-smc only
  bool resampled = false;       ///< fk-smc only
  double wall_ms = 0.0;
};

struct SavedLatent {
  int iteration = 0;
  int t = 0;
  ImageTensor latent;  ///< state x_t of the selected candidate
};

struct RunRecord {
  StrategyKind kind = StrategyKind::vanilla;
  std::uint64_t seed = 0;
  std::vector<TraceRow> trace;
  ImageTensor final_image;                   ///< output of the last iteration
  std::vector<ImageTensor> iteration_outputs;
  std::size_t denoiser_calls = 0;
  double wall_ms = 0.0;
  std::vector<SavedLatent> latents;          ///< only with save_latents
};

/// Random streams are keyed by (iteration, timestep, particle): t = 0 draws the
/// initial state, t >= 1 the noise of the step t -> t-1. Vanilla sampling uses
/// iteration 1.
Rng particle_stream(const Rng& root, int iteration, int t, std::size_t particle);

RunRecord run_vanilla(const Denoiser& denoiser, const ImageTensor& condition, const Rng& rng,
                      bool save_latents = false);
RunRecord run_iafs(const Denoiser& denoiser, const ImageTensor& condition,
                   const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);
RunRecord run_bon(const Denoiser& denoiser, const ImageTensor& condition,
                  const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);
RunRecord run_beam(const Denoiser& denoiser, const ImageTensor& condition,
                   const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);
RunRecord run_fk_smc(const Denoiser& denoiser, const ImageTensor& condition,
                     const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);
RunRecord run_kds(const Denoiser& denoiser, const ImageTensor& condition,
                  const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);

/// Dispatch on cfg.kind.
RunRecord run_strategy(const Denoiser& denoiser, const ImageTensor& condition,
                       const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng);

/// One Gaussian-kernel mean-shift step: each tensor moves by `step` toward the
/// kernel-weighted pool mean, kernel exp(-msd / (2 h^2)) on the mean squared
/// difference. Throws InvalidArgument for bandwidth <= 0.
std::vector<ImageTensor> mean_shift_step(const std::vector<ImageTensor>& pool, double bandwidth,
                                         double step);

/// Normalized importance weights from log-weights; returns uniform weights and
/// sets `degenerate` when no finite maximum exists.
std::vector<double> normalize_log_weights(const std::vector<double>& log_weights,
                                          bool* degenerate = nullptr);
/// 1 / sum w^2.
double effective_sample_size(const std::vector<double>& weights);
/// Multinomial ancestor indices drawn with `rng`.
std::vector<std::size_t> multinomial_resample(const std::vector<double>& weights, Rng& rng);

}  // namespace iafs
