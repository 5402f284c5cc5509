#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iafs/config.hpp"
#include "iafs/metrics.hpp"
#include "iafs/strategies.hpp"
#include "iafs/tensor.hpp"

namespace iafs {

// --- dataset -----------------------------------------------------------------

struct DatasetEntry {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string hr_file;  ///< relative to the dataset directory
  std::string lr_file;
};

struct Manifest {
  std::filesystem::path dir;
  std::string config_hash;
  Shape hr_shape{};
  Shape lr_shape{};
  std::vector<DatasetEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.txt";

/// HR/LR pair of image `index`. Synthetic-sr draws a procedural texture, gmm a
/// sample of the prior; both are degraded with the configured operator.
std::pair<ImageTensor, ImageTensor> synthesize_pair(const HarnessConfig& cfg, std::size_t index);

/// Writes every pair as .tensor plus .png and a manifest. Throws IoError when
/// the directory cannot be created or written.
Manifest generate_dataset(const HarnessConfig& cfg, const std::filesystem::path& dir);
/// Throws MissingInput naming the manifest path when it does not exist.
Manifest read_manifest(const std::filesystem::path& dir);

// --- runs --------------------------------------------------------------------

struct RunOptions {
  bool save_latents = false;
  std::size_t threads = 1;
};

/// Result of one (image, seed) run.
struct RunOutcome {
  std::size_t image = 0;
  std::uint64_t seed = 0;
  RunRecord record;
  MetricBlock metrics;
  std::vector<MetricBlock> iteration_metrics;
};

/// `{strategy}_{seed}_{config-hash}`.
std::string run_dir_name(StrategyKind kind, std::uint64_t seed, const std::string& hash);

/// Runs one strategy on one pair. Pure in (cfg, image, seed).
RunOutcome run_single(const HarnessConfig& cfg, const Denoiser& denoiser, const ImageTensor& hr,
                      const ImageTensor& lr, std::size_t image, std::uint64_t seed,
                      bool save_latents);

/// JSON metric block followed by the `#complete` sentinel line. Contains no
/// timing, so repeated runs produce identical bytes.
std::string format_metric_block(const HarnessConfig& cfg, const RunOutcome& outcome);

/// Writes one record directory: trace.csv, metrics.json, timing.txt,
/// config.ini, final.tensor, final.png and latents/ when saved.
void write_run_record(const std::filesystem::path& dir, const HarnessConfig& cfg,
                      const RunOutcome& outcome);

/// Every (image, seed) of the manifest in `cfg.dataset.dir`; records go to
/// out/image_{i}/{run_dir_name}. Returns the record directories.
std::vector<std::filesystem::path> cmd_run(const HarnessConfig& cfg,
                                           const std::filesystem::path& out,
                                           const RunOptions& options);

// --- stored records ----------------------------------------------------------

struct StoredRecord {
  std::filesystem::path dir;
  std::string strategy;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
};

/// nullopt when metrics.json is missing or lacks the sentinel.
std::optional<StoredRecord> read_record(const std::filesystem::path& dir);
/// Complete records at or below `root`, sorted by path. Incomplete ones are
/// skipped with a warning. Throws MissingInput when `root` does not exist.
std::vector<StoredRecord> collect_records(const std::filesystem::path& root);

/// Markdown table of seed-median metrics, one row per (directory, strategy);
/// the best value of each column is bold and the second best italic. Throws
/// InvalidArgument for fewer than two directories or differing metric keys.
std::string cmd_compare(const std::vector<std::filesystem::path>& dirs);

// --- ablations ---------------------------------------------------------------

enum class SweepKind { particles, neighbors, iterations, tau };

/// "N", "K", "n" or "tau".
SweepKind parse_sweep_kind(const std::string& text);
const char* to_string(SweepKind kind);

struct AblationCell {
  std::string label;  ///< "10" or "4:7"
  HarnessConfig config;
};

/// Expands a sweep into configs. Empty `values` select N {5,10,20}, K {1..4},
/// n {1..5} or the full tau grid tau_c 0..9 x tau_l 1..12. Tau cells with
/// tau_l < tau_c are skipped with a notice; other invalid values throw.
std::vector<AblationCell> ablation_cells(const HarnessConfig& base, SweepKind kind,
                                         const std::vector<std::string>& values);

struct AblationRow {
  std::string sweep;
  std::string value;
  std::string metric;
  double median = 0.0;
  std::size_t runs = 0;
};

/// Runs every cell on all (image, seed) pairs and reports seed-median metrics,
/// one row per (cell, metric). Also writes the rows as CSV to `csv` when it is
/// non-empty.
std::vector<AblationRow> cmd_ablate(const HarnessConfig& cfg, SweepKind kind,
                                    const std::vector<std::string>& values, std::size_t threads,
                                    const std::filesystem::path& csv);

// --- spectra / metrics -------------------------------------------------------

/// One RAPSD CSV per timestep of the record's final iteration, written to
/// `out` (default: record/spectra). Throws MissingInput when the record holds
/// no latents.
std::vector<std::filesystem::path> cmd_spectra(const std::filesystem::path& record,
                                               const std::filesystem::path& out);

/// Metrics of tensor file `a` against reference file `b`.
MetricBlock cmd_metrics(const std::filesystem::path& a, const std::filesystem::path& b,
                        double structural_normalizer = 1.0);
std::string format_metrics(const MetricBlock& m);

/// Runs fn(0..count-1) on up to `threads` workers. The first exception thrown
/// by any job is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace iafs
