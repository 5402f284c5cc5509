#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "iafs/config.hpp"
#include "iafs/error.hpp"
#include "iafs/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  cmd->add_option("--config", c.config, "INI configuration file");
  if (with_seed) cmd->add_option("--seed", c.seed, "run a single seed instead of run.seeds");
  cmd->add_option("--threads", c.threads, "worker threads (overrides output.threads)");
  cmd->add_option("--out", c.out, "output directory");
}

iafs::HarnessConfig load(const Common& c) {
  iafs::HarnessConfig cfg = c.config.empty() ? iafs::HarnessConfig{} : iafs::load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.threads > 0) cfg.threads = c.threads;
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative frequency-steered inference-time scaling for super-resolution"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  Common gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset", "synthesize HR/LR pairs");
  add_common(gen_cmd, gen, false);

  Common run;
  bool save_latents = false;
  auto* run_cmd = app.add_subcommand("run", "run the configured strategy on the dataset");
  add_common(run_cmd, run);
  run_cmd->add_flag("--save-latents", save_latents, "store the per-timestep states");

  Common abl;
  std::string sweep;
  std::string values;
  auto* abl_cmd = app.add_subcommand("ablate", "sweep N, K, n or the tau grid");
  add_common(abl_cmd, abl);
  abl_cmd->add_option("--sweep", sweep, "N, K, n or tau")->required();
  abl_cmd->add_option("--values", values, "comma-separated values; tau cells as c:l");

  std::string record;
  std::string spectra_out;
  auto* spec_cmd = app.add_subcommand("spectra", "RAPSD CSVs from saved latents");
  spec_cmd->add_option("record", record, "run record directory")->required();
  spec_cmd->add_option("--out", spectra_out, "output directory");

  std::vector<std::string> dirs;
  auto* cmp_cmd = app.add_subcommand("compare", "markdown table of seed-median metrics");
  cmp_cmd->add_option("dirs", dirs, "run directories")->required()->expected(2, -1);

  std::string a;
  std::string b;
  double normalizer = 1.0;
  auto* met_cmd = app.add_subcommand("metrics", "metrics of one tensor file against another");
  met_cmd->add_option("image", a, "tensor file")->required();
  met_cmd->add_option("reference", b, "reference tensor file")->required();
  met_cmd->add_option("--structural-normalizer", normalizer, "structural distance scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("iafs"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (gen_cmd->parsed()) {
      iafs::HarnessConfig cfg = load(gen);
      if (!gen.out.empty()) cfg.dataset.dir = gen.out;
      iafs::generate_dataset(cfg, cfg.dataset.dir);
    } else if (run_cmd->parsed()) {
      const iafs::HarnessConfig cfg = load(run);
      const fs::path out = run.out.empty() ? cfg.output_dir : fs::path(run.out);
      const auto written = iafs::cmd_run(cfg, out, {save_latents, cfg.threads});
      std::cout << written.size() << " run records under " << out.string() << "\n";
    } else if (abl_cmd->parsed()) {
      const iafs::HarnessConfig cfg = load(abl);
      const auto kind = iafs::parse_sweep_kind(sweep);
      const fs::path out = abl.out.empty() ? cfg.output_dir : fs::path(abl.out);
      const fs::path csv = out / ("ablate_" + sweep + "_" + cfg.hash_hex() + ".csv");
      const auto rows = iafs::cmd_ablate(cfg, kind, split_values(values), cfg.threads, csv);
      std::cout << "sweep,value,metric,median,runs\n";
      for (const auto& r : rows) {
        std::cout << r.sweep << ',' << r.value << ',' << r.metric << ',' << r.median << ','
                  << r.runs << '\n';
      }
    } else if (spec_cmd->parsed()) {
      const auto files = iafs::cmd_spectra(record, spectra_out);
      std::cout << files.size() << " spectra written\n";
    } else if (cmp_cmd->parsed()) {
      std::vector<fs::path> paths(dirs.begin(), dirs.end());
      std::cout << iafs::cmd_compare(paths);
    } else if (met_cmd->parsed()) {
      std::cout << iafs::format_metrics(iafs::cmd_metrics(a, b, normalizer));
    }
  } catch (const iafs::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const iafs::MissingInput& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const iafs::NumericalError& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
