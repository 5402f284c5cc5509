#include "iafs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "iafs/error.hpp"
#include "iafs/spectral.hpp"
#include "iafs/tensor_io.hpp"

namespace iafs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string pad(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

std::string shape_text(const Shape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

Shape parse_shape(const std::string& text) {
  Shape s{};
  if (std::sscanf(text.c_str(), "%zux%zux%zu", &s.channels, &s.height, &s.width) != 3) {
    throw IoError("manifest: bad shape '" + text + "'");
  }
  return s;
}

json metric_json(const MetricBlock& m) {
  return json{{"psnr", m.psnr},
              {"ssim", m.ssim},
              {"structural", m.structural},
              {"perceptual", m.perceptual},
              {"combined", m.combined}};
}

constexpr const char* kSentinel = "#complete";

}  // namespace

// --- dataset -----------------------------------------------------------------

std::pair<ImageTensor, ImageTensor> synthesize_pair(const HarnessConfig& cfg, std::size_t index) {
  Rng rng(cfg.dataset.seed + index);
  ImageTensor hr;
  if (cfg.model.kind == ModelKind::gmm) {
    hr = make_prior(cfg).sample(rng);
  } else {
    hr = synthesize_texture(cfg.dataset.texture, rng);
  }
  Rng degradation_rng = rng.split(99);
  ImageTensor lr = degrade(hr, cfg.dataset.degradation, degradation_rng);
  return {std::move(hr), std::move(lr)};
}

Manifest generate_dataset(const HarnessConfig& cfg, const fs::path& dir) {
  ensure_dir(dir);
  Manifest m;
  m.dir = dir;
  m.config_hash = cfg.hash_hex();
  std::ostringstream text;
  for (std::size_t i = 0; i < cfg.dataset.images; ++i) {
    auto [hr, lr] = synthesize_pair(cfg, i);
    DatasetEntry e;
    e.index = i;
    e.seed = cfg.dataset.seed + i;
    const std::string stem = "img_" + pad(i, 3);
    e.hr_file = stem + "_hr.tensor";
    e.lr_file = stem + "_lr.tensor";
    write_tensor(dir / e.hr_file, hr);
    write_tensor(dir / e.lr_file, lr);
    write_png(dir / (stem + "_hr.png"), hr);
    write_png(dir / (stem + "_lr.png"), lr);
    m.hr_shape = hr.shape();
    m.lr_shape = lr.shape();
    m.entries.push_back(e);
  }
  text << "# iafs dataset manifest\n"
       << "version = 1\n"
       << "config_hash = " << m.config_hash << "\n"
       << "model = " << to_string(cfg.model.kind) << "\n"
       << "images = " << m.entries.size() << "\n"
       << "hr_shape = " << shape_text(m.hr_shape) << "\n"
       << "lr_shape = " << shape_text(m.lr_shape) << "\n"
       << "factor = " << cfg.dataset.degradation.factor << "\n"
       << "blur_sigma = " << cfg.dataset.degradation.blur_sigma << "\n"
       << "noise_std = " << cfg.dataset.degradation.noise_std << "\n"
       << "# index seed hr lr\n";
  for (const auto& e : m.entries) {
    text << "image " << e.index << ' ' << e.seed << ' ' << e.hr_file << ' ' << e.lr_file << "\n";
  }
  write_text(dir / kManifestName, text.str());
  spdlog::info("wrote {} image pairs to {}", m.entries.size(), dir.string());
  return m;
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  if (!fs::exists(path)) {
    throw MissingInput("dataset manifest not found: " + path.string() + " (run gen-dataset first)");
  }
  Manifest m;
  m.dir = dir;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "image") {
      DatasetEntry e;
      if (!(ls >> e.index >> e.seed >> e.hr_file >> e.lr_file)) {
        throw IoError("manifest: malformed row '" + line + "'");
      }
      m.entries.push_back(e);
      continue;
    }
    std::string eq;
    std::string value;
    ls >> eq >> value;
    if (head == "config_hash") m.config_hash = value;
    if (head == "hr_shape") m.hr_shape = parse_shape(value);
    if (head == "lr_shape") m.lr_shape = parse_shape(value);
  }
  if (m.entries.empty()) throw IoError("manifest lists no images: " + path.string());
  return m;
}

// --- runs --------------------------------------------------------------------

std::string run_dir_name(StrategyKind kind, std::uint64_t seed, const std::string& hash) {
  return std::string(to_string(kind)) + "_" + std::to_string(seed) + "_" + hash;
}

RunOutcome run_single(const HarnessConfig& cfg, const Denoiser& denoiser, const ImageTensor& hr,
                      const ImageTensor& lr, std::size_t image, std::uint64_t seed,
                      bool save_latents) {
  StrategyConfig scfg = cfg.strategy;
  scfg.save_latents = save_latents;
  const Rng rng(seed, image);
  RunOutcome out;
  out.image = image;
  out.seed = seed;
  if (scfg.kind == StrategyKind::vanilla) {
    out.record = run_vanilla(denoiser, lr, rng, save_latents);
  } else {
    out.record = run_strategy(denoiser, lr, scfg, make_reward(cfg), rng);
  }
  out.metrics = compute_metrics(out.record.final_image, hr);
  for (const auto& x : out.record.iteration_outputs) {
    out.iteration_metrics.push_back(compute_metrics(x, hr));
  }
  return out;
}

std::string format_metric_block(const HarnessConfig& cfg, const RunOutcome& o) {
  json j;
  j["strategy"] = to_string(o.record.kind);
  j["seed"] = o.seed;
  j["image"] = o.image;
  j["config_hash"] = cfg.hash_hex();
  j["denoiser_calls"] = o.record.denoiser_calls;
  j["expected_denoiser_calls"] = expected_denoiser_calls(cfg.strategy, cfg.model.steps);
  j["metrics"] = metric_json(o.metrics);
  j["band_errors"] = o.metrics.band_errors;
  json iters = json::array();
  for (const auto& m : o.iteration_metrics) iters.push_back(metric_json(m));
  j["iterations"] = iters;
  return j.dump(2) + "\n" + kSentinel + "\n";
}

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(10);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ";" : "") << v[i];
  return s.str();
}

std::string trace_csv(const RunRecord& r) {
  std::ostringstream os;
  os.precision(10);
  os << "iteration,t,chosen,reward,mean_reward,segment,reference_used,neighbors,neighbor_weights,"
        "adain_mean_shift,adain_std_ratio,ess,resampled,wall_ms\n";
  for (const auto& row : r.trace) {
    os << row.iteration << ',' << row.t << ',' << row.chosen << ',' << row.reward << ','
       << row.mean_reward << ',' << row.segment << ',' << (row.reference_used ? 1 : 0) << ','
       << join(row.neighbors) << ',' << join(row.neighbor_weights) << ',' << row.adain_mean_shift
       << ',' << row.adain_std_ratio << ',' << row.ess << ',' << (row.resampled ? 1 : 0) << ','
       << row.wall_ms << '\n';
  }
  return os.str();
}

std::string latent_name(int iteration, int t) {
  return "i" + std::to_string(iteration) + "_t" + pad(static_cast<std::size_t>(t), 2) + ".tensor";
}

}  // namespace

void write_run_record(const fs::path& dir, const HarnessConfig& cfg, const RunOutcome& o) {
  ensure_dir(dir);
  // The sentinel makes metrics.json the commit point, so it is written last.
  std::error_code ec;
  fs::remove(dir / "metrics.json", ec);
  write_text(dir / "config.ini", cfg.canonical());
  write_text(dir / "trace.csv", trace_csv(o.record));
  write_tensor(dir / "final.tensor", o.record.final_image);
  write_png(dir / "final.png", o.record.final_image);
  if (!o.record.latents.empty()) {
    ensure_dir(dir / "latents");
    for (const auto& l : o.record.latents) {
      write_tensor(dir / "latents" / latent_name(l.iteration, l.t), l.latent);
    }
  }
  std::ostringstream timing;
  timing << "wall_ms = " << o.record.wall_ms << "\n"
         << "denoiser_calls = " << o.record.denoiser_calls << "\n";
  write_text(dir / "timing.txt", timing.str());
  write_text(dir / "metrics.json", format_metric_block(cfg, o));
}

std::vector<fs::path> cmd_run(const HarnessConfig& cfg, const fs::path& out,
                              const RunOptions& options) {
  const Manifest manifest = read_manifest(cfg.dataset.dir);
  const auto denoiser = make_denoiser(cfg);
  const std::string hash = cfg.hash_hex();
  struct Job {
    std::size_t entry;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < manifest.entries.size(); ++e) {
    for (std::uint64_t s : cfg.seeds) jobs.push_back({e, s});
  }
  std::vector<fs::path> dirs(jobs.size());
  parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const DatasetEntry& e = manifest.entries[jobs[j].entry];
    const ImageTensor hr = read_tensor(manifest.dir / e.hr_file);
    const ImageTensor lr = read_tensor(manifest.dir / e.lr_file);
    RunOutcome o = run_single(cfg, *denoiser, hr, lr, e.index, jobs[j].seed, options.save_latents);
    const fs::path dir = out / ("image_" + pad(e.index, 3)) /
                         run_dir_name(cfg.strategy.kind, jobs[j].seed, hash);
    write_run_record(dir, cfg, o);
    spdlog::info("{}: psnr {:.3f} ssim {:.4f} calls {} ({:.0f} ms)", dir.string(), o.metrics.psnr,
                 o.metrics.ssim, o.record.denoiser_calls, o.record.wall_ms);
    dirs[j] = dir;
  });
  return dirs;
}

// --- stored records ----------------------------------------------------------

std::optional<StoredRecord> read_record(const fs::path& dir) {
  const fs::path path = dir / "metrics.json";
  if (!fs::exists(path)) return std::nullopt;
  const std::string text = read_text(path);
  const auto pos = text.rfind(kSentinel);
  if (pos == std::string::npos || text.find_first_not_of(" \n\r\t", pos + 9) != std::string::npos) {
    return std::nullopt;
  }
  json j;
  try {
    j = json::parse(text.substr(0, pos));
  } catch (const json::exception& e) {
    throw IoError("corrupt record " + path.string() + ": " + e.what());
  }
  StoredRecord r;
  r.dir = dir;
  r.strategy = j.at("strategy").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [key, value] : j.at("metrics").items()) {
    r.metrics[key] = value.is_number() ? value.get<double>() : std::nan("");
  }
  r.metrics["denoiser_calls"] = j.at("denoiser_calls").get<double>();
  return r;
}

std::vector<StoredRecord> collect_records(const fs::path& root) {
  if (!fs::exists(root)) throw MissingInput("run directory not found: " + root.string());
  std::vector<fs::path> candidates;
  if (fs::exists(root / "metrics.json")) candidates.push_back(root);
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json" &&
        entry.path().parent_path() != root) {
      candidates.push_back(entry.path().parent_path());
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<StoredRecord> out;
  for (const auto& dir : candidates) {
    auto r = read_record(dir);
    if (!r) {
      spdlog::warn("skipping incomplete record {}", dir.string());
      continue;
    }
    out.push_back(std::move(*r));
  }
  return out;
}

std::string cmd_compare(const std::vector<fs::path>& dirs) {
  if (dirs.size() < 2) throw InvalidArgument("compare needs at least two run directories");
  struct Row {
    std::string label;
    std::map<std::string, std::vector<double>> values;
  };
  std::vector<Row> rows;
  std::set<std::string> keys;
  bool have_keys = false;
  fs::path key_source;
  for (const auto& dir : dirs) {
    const auto records = collect_records(dir);
    if (records.empty()) throw MissingInput("no complete records under " + dir.string());
    std::map<std::string, Row> by_strategy;
    for (const auto& r : records) {
      std::set<std::string> k;
      for (const auto& [name, v] : r.metrics) k.insert(name);
      if (!have_keys) {
        keys = k;
        have_keys = true;
        key_source = r.dir;
      } else if (k != keys) {
        std::string diff;
        for (const auto& name : k) {
          if (!keys.count(name)) diff += " +" + name;
        }
        for (const auto& name : keys) {
          if (!k.count(name)) diff += " -" + name;
        }
        throw InvalidArgument("metric keys of " + r.dir.string() + " differ from " +
                              key_source.string() + ":" + diff);
      }
      Row& row = by_strategy[r.strategy];
      row.label = r.strategy + " (" + dir.filename().string() + ")";
      for (const auto& [name, v] : r.metrics) row.values[name].push_back(v);
    }
    for (auto& [name, row] : by_strategy) rows.push_back(std::move(row));
  }

  std::vector<std::string> cols(keys.begin(), keys.end());
  std::vector<std::vector<double>> med(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) med[r][c] = median(rows[r].values[cols[c]]);
  }
  std::ostringstream os;
  os << "| method |";
  for (const auto& c : cols) os << ' ' << c << " |";
  os << "\n|---|";
  for (std::size_t c = 0; c < cols.size(); ++c) os << "---|";
  os << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << "| " << rows[r].label << " |";
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const bool ranked = cols[c] != "denoiser_calls";
      const bool lower_better = cols[c] == "structural";
      // Rank by distinct values so ties share a marker.
      std::vector<double> distinct;
      for (std::size_t q = 0; q < rows.size(); ++q) distinct.push_back(med[q][c]);
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (!lower_better) std::reverse(distinct.begin(), distinct.end());
      char buf[64];
      std::snprintf(buf, sizeof buf, cols[c] == "denoiser_calls" ? "%.0f" : "%.4f", med[r][c]);
      std::string cell = buf;
      if (ranked && distinct.size() > 1) {
        if (med[r][c] == distinct[0]) cell = "**" + cell + "**";
        else if (distinct.size() > 2 && med[r][c] == distinct[1]) cell = "_" + cell + "_";
      }
      os << ' ' << cell << " |";
    }
    os << '\n';
  }
  return os.str();
}

// --- ablations ---------------------------------------------------------------

SweepKind parse_sweep_kind(const std::string& text) {
  if (text == "N") return SweepKind::particles;
  if (text == "K") return SweepKind::neighbors;
  if (text == "n") return SweepKind::iterations;
  if (text == "tau") return SweepKind::tau;
  throw ConfigError("unknown sweep '" + text + "' (expected N, K, n or tau)");
}

const char* to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::particles: return "N";
    case SweepKind::neighbors: return "K";
    case SweepKind::iterations: return "n";
    case SweepKind::tau: return "tau";
  }
  return "?";
}

namespace {

std::size_t parse_count(const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) throw ConfigError("sweep value '" + text + "' is not an integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<AblationCell> ablation_cells(const HarnessConfig& base, SweepKind kind,
                                         const std::vector<std::string>& values) {
  std::vector<std::string> vals = values;
  if (vals.empty()) {
    switch (kind) {
      case SweepKind::particles: vals = {"5", "10", "20"}; break;
      case SweepKind::neighbors: vals = {"1", "2", "3", "4"}; break;
      case SweepKind::iterations: vals = {"1", "2", "3", "4", "5"}; break;
      case SweepKind::tau:
        for (int c = 0; c <= 9; ++c) {
          for (int l = 1; l <= 12; ++l) vals.push_back(std::to_string(c) + ":" + std::to_string(l));
        }
        break;
    }
  }
  std::vector<AblationCell> cells;
  for (const auto& v : vals) {
    AblationCell cell{v, base};
    StrategyConfig& s = cell.config.strategy;
    switch (kind) {
      case SweepKind::particles: s.particles = parse_count(v); break;
      case SweepKind::neighbors: s.afs.neighbors = parse_count(v); break;
      case SweepKind::iterations: s.iterations = static_cast<int>(parse_count(v)); break;
      case SweepKind::tau: {
        const auto colon = v.find(':');
        if (colon == std::string::npos) throw ConfigError("tau cell '" + v + "' must be c:l");
        const auto c = static_cast<int>(parse_count(v.substr(0, colon)));
        const auto l = static_cast<int>(parse_count(v.substr(colon + 1)));
        if (l < c) {
          spdlog::info("skipping tau cell {}: tau_lpips < tau_clipiqa", v);
          continue;
        }
        s.schedule.tau_clipiqa = c;
        s.schedule.tau_lpips = l;
        break;
      }
    }
    cell.config.validate();
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<AblationRow> cmd_ablate(const HarnessConfig& cfg, SweepKind kind,
                                    const std::vector<std::string>& values, std::size_t threads,
                                    const fs::path& csv) {
  const auto cells = ablation_cells(cfg, kind, values);
  const Manifest manifest = read_manifest(cfg.dataset.dir);
  const auto denoiser = make_denoiser(cfg);
  std::vector<std::pair<ImageTensor, ImageTensor>> pairs;
  for (const auto& e : manifest.entries) {
    pairs.emplace_back(read_tensor(manifest.dir / e.hr_file), read_tensor(manifest.dir / e.lr_file));
  }
  struct Job {
    std::size_t cell;
    std::size_t entry;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      for (std::uint64_t s : cfg.seeds) jobs.push_back({c, e, s});
    }
  }
  std::vector<MetricBlock> results(jobs.size());
  std::vector<std::size_t> calls(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto& [hr, lr] = pairs[job.entry];
    RunOutcome o = run_single(cells[job.cell].config, *denoiser, hr, lr,
                              manifest.entries[job.entry].index, job.seed, false);
    results[j] = o.metrics;
    calls[j] = o.record.denoiser_calls;
  });

  const char* names[] = {"psnr", "ssim", "structural", "perceptual", "combined", "denoiser_calls"};
  std::vector<AblationRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::map<std::string, std::vector<double>> vals;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].cell != c) continue;
      const MetricBlock& m = results[j];
      vals["psnr"].push_back(m.psnr);
      vals["ssim"].push_back(m.ssim);
      vals["structural"].push_back(m.structural);
      vals["perceptual"].push_back(m.perceptual);
      vals["combined"].push_back(m.combined);
      vals["denoiser_calls"].push_back(static_cast<double>(calls[j]));
    }
    for (const char* n : names) {
      rows.push_back({to_string(kind), cells[c].label, n, median(vals[n]), vals[n].size()});
    }
  }
  if (!csv.empty()) {
    if (csv.has_parent_path()) ensure_dir(csv.parent_path());
    std::ostringstream os;
    os.precision(10);
    os << "sweep,value,metric,median,runs\n";
    for (const auto& r : rows) {
      os << r.sweep << ',' << r.value << ',' << r.metric << ',' << r.median << ',' << r.runs << '\n';
    }
    write_text(csv, os.str());
  }
  return rows;
}

// --- spectra / metrics -------------------------------------------------------

std::vector<fs::path> cmd_spectra(const fs::path& record, const fs::path& out) {
  if (!fs::is_directory(record)) throw MissingInput("record directory not found: " + record.string());
  const fs::path latents = record / "latents";
  int last_iteration = 0;
  std::map<int, fs::path> by_t;
  if (fs::is_directory(latents)) {
    for (const auto& entry : fs::directory_iterator(latents)) {
      int i = 0;
      int t = 0;
      if (std::sscanf(entry.path().filename().string().c_str(), "i%d_t%d.tensor", &i, &t) != 2) {
        continue;
      }
      if (i > last_iteration) {
        last_iteration = i;
        by_t.clear();
      }
      if (i == last_iteration) by_t[t] = entry.path();
    }
  }
  if (by_t.empty()) {
    throw MissingInput("no saved latents in " + record.string() +
                       "; rerun with --save-latents");
  }
  const fs::path dir = out.empty() ? record / "spectra" : out;
  ensure_dir(dir);
  std::vector<fs::path> written;
  for (auto it = by_t.rbegin(); it != by_t.rend(); ++it) {
    const fs::path path = dir / ("rapsd_t" + pad(static_cast<std::size_t>(it->first), 2) + ".csv");
    write_rapsd_csv(path, rapsd(read_tensor(it->second)));
    written.push_back(path);
  }
  return written;
}

MetricBlock cmd_metrics(const fs::path& a, const fs::path& b, double structural_normalizer) {
  for (const auto& p : {a, b}) {
    if (!fs::exists(p)) throw MissingInput("tensor file not found: " + p.string());
  }
  return compute_metrics(read_tensor(a), read_tensor(b), structural_normalizer);
}

std::string format_metrics(const MetricBlock& m) {
  json j = metric_json(m);
  j["band_errors"] = m.band_errors;
  return j.dump(2) + "\n";
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace iafs
