#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "iafs/error.hpp"
#include "iafs/harness.hpp"
#include "iafs/tensor_io.hpp"

using namespace iafs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("iafs_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

HarnessConfig small_config(const fs::path& root, const std::string& strategy = "iafs") {
  auto c = parse_config("[texture]\nheight = 32\nwidth = 32\n[dataset]\nimages = 2\n[strategy]\nkind = " +
                        strategy + "\nparticles = 3\niterations = 2\n[run]\nseeds = 0..1\n");
  c.dataset.dir = root / "dataset";
  return c;
}

}  // namespace

TEST_CASE("dataset generation is reproducible") {
  const auto root = scratch("dataset");
  auto cfg = small_config(root);
  const auto m = generate_dataset(cfg, root / "a");
  generate_dataset(cfg, root / "b");
  CHECK(m.entries.size() == 2);
  CHECK(m.lr_shape == Shape{3, 8, 8});
  CHECK(m.hr_shape == Shape{3, 32, 32});
  for (const auto& e : m.entries) {
    CHECK(slurp(root / "a" / e.hr_file) == slurp(root / "b" / e.hr_file));
    CHECK(slurp(root / "a" / e.lr_file) == slurp(root / "b" / e.lr_file));
  }
  CHECK(slurp(root / "a" / kManifestName) == slurp(root / "b" / kManifestName));
  const auto back = read_manifest(root / "a");
  CHECK(back.entries.size() == 2);
  CHECK(back.entries[1].seed == cfg.dataset.seed + 1);
  CHECK_THROWS_AS(read_manifest(root / "missing"), MissingInput);
  const auto [hr, lr] = synthesize_pair(cfg, 1);
  CHECK(max_abs_difference(read_tensor(root / "a" / m.entries[1].lr_file), lr) < 1e-6);
}

TEST_CASE("run records, reruns and compare") {
  const auto root = scratch("run");
  auto cfg = small_config(root);
  generate_dataset(cfg, cfg.dataset.dir);

  const auto dirs = cmd_run(cfg, root / "iafs", RunOptions{true, 2});
  CHECK(dirs.size() == 4);
  for (const auto& d : dirs) {
    CHECK(fs::exists(d / "metrics.json"));
    CHECK(fs::exists(d / "trace.csv"));
    CHECK(fs::exists(d / "timing.txt"));
    CHECK(fs::exists(d / "final.png"));
    CHECK(d.filename().string().rfind("iafs_", 0) == 0);
  }
  const auto rec = read_record(dirs[0]);
  REQUIRE(rec.has_value());
  CHECK(rec->metrics.at("denoiser_calls") == 2 * 3 * 15);

  // Trace has one row per (iteration, t) plus the header.
  const std::string trace = slurp(dirs[0] / "trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 2 * 15);

  const auto again = cmd_run(cfg, root / "iafs_again", RunOptions{false, 1});
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    CHECK(slurp(dirs[i] / "metrics.json") == slurp(again[i] / "metrics.json"));
  }

  const auto spectra = cmd_spectra(dirs[0], {});
  CHECK(spectra.size() == 15);
  CHECK_THROWS_AS(cmd_spectra(again[0], {}), MissingInput);

  auto vcfg = small_config(root, "vanilla");
  const auto vdirs = cmd_run(vcfg, root / "vanilla", RunOptions{});
  CHECK(read_record(vdirs[0])->metrics.at("denoiser_calls") == 15);

  const std::string table = cmd_compare({root / "iafs", root / "vanilla"});
  CHECK(table.find("iafs (iafs)") != std::string::npos);
  CHECK(table.find("vanilla (vanilla)") != std::string::npos);
  CHECK(table.find("**") != std::string::npos);
  CHECK_THROWS_AS(cmd_compare({root / "iafs"}), InvalidArgument);
  CHECK_THROWS_AS(cmd_compare({root / "iafs", root / "nowhere"}), MissingInput);

  // A record without the sentinel is skipped.
  {
    std::ofstream broken(vdirs[1] / "metrics.json", std::ios::trunc);
    broken << "{\"strategy\": \"vanilla\"";
  }
  CHECK_FALSE(read_record(vdirs[1]).has_value());
  CHECK(collect_records(root / "vanilla").size() == vdirs.size() - 1);

  const auto m = cmd_metrics(dirs[0] / "final.tensor", dirs[0] / "final.tensor");
  CHECK(m.psnr == kPsnrCeiling);
  CHECK_THROWS_AS(cmd_metrics(root / "x.tensor", dirs[0] / "final.tensor"), MissingInput);
}

TEST_CASE("run without a dataset reports the missing manifest") {
  const auto root = scratch("nodata");
  auto cfg = small_config(root);
  try {
    cmd_run(cfg, root / "out", RunOptions{});
    FAIL("expected MissingInput");
  } catch (const MissingInput& e) {
    CHECK(std::string(e.what()).find(kManifestName) != std::string::npos);
  }
}

TEST_CASE("ablation sweeps") {
  const auto root = scratch("ablate");
  auto cfg = small_config(root);
  cfg.dataset.images = 1;
  cfg.seeds = {0};
  cfg.strategy.iterations = 1;
  generate_dataset(cfg, cfg.dataset.dir);
  const auto rows = cmd_ablate(cfg, SweepKind::particles, {"1", "2", "3"}, 2, root / "n.csv");
  CHECK(rows.size() == 3 * 6);
  std::size_t psnr_rows = 0;
  for (const auto& r : rows) {
    if (r.metric == "psnr") ++psnr_rows;
    if (r.metric == "denoiser_calls") CHECK(r.median == 15.0 * std::stoi(r.value));
    CHECK(r.runs == 1);
  }
  CHECK(psnr_rows == 3);
  const std::string csv = slurp(root / "n.csv");
  CHECK(csv.rfind("sweep,value,metric,median,runs\n", 0) == 0);

  const auto cells = ablation_cells(cfg, SweepKind::tau, {"4:7", "8:3", "0:1"});
  CHECK(cells.size() == 2);
  CHECK(cells[0].config.strategy.schedule.tau_lpips == 7);
  CHECK(ablation_cells(cfg, SweepKind::tau, {}).size() == 10 * 12 - 36);
  CHECK(ablation_cells(cfg, SweepKind::particles, {}).size() == 3);
  CHECK_THROWS_AS(ablation_cells(cfg, SweepKind::particles, {"x"}), ConfigError);
  CHECK_THROWS_AS(ablation_cells(cfg, SweepKind::tau, {"3:20"}), ConfigError);
  CHECK(parse_sweep_kind("K") == SweepKind::neighbors);
}

TEST_CASE("parallel_for") {
  std::vector<int> hit(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hit[i]++; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw IoError("boom");
                               }),
                  IoError);
}
