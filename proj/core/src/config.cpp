#include "iafs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "iafs/error.hpp"
#include "iafs/rng.hpp"

namespace iafs {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::gmm ? "gmm" : "synthetic-sr";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "synthetic-sr") return ModelKind::synthetic_sr;
  if (text == "gmm") return ModelKind::gmm;
  throw ConfigError("unknown model kind '" + text + "'");
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + text + "'");
}

/// "0, 3, 5..9" -> {0, 3, 5, 6, 7, 8, 9}.
std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text) {
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::vector<std::uint64_t> seeds;
  std::string tok;
  while (in >> tok) {
    const auto dots = tok.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_number<std::uint64_t>(key, tok));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>(key, tok.substr(0, dots));
    const auto hi = parse_number<std::uint64_t>(key, tok.substr(dots + 2));
    if (hi < lo) throw ConfigError("config: descending seed range '" + tok + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("config: '" + key + "' is empty");
  return seeds;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

const char* split_name(SplitKind k) { return k == SplitKind::dft_mask ? "dft-mask" : "gaussian"; }

SplitKind parse_split(const std::string& text) {
  if (text == "gaussian") return SplitKind::spatial_gaussian;
  if (text == "dft-mask") return SplitKind::dft_mask;
  throw ConfigError("unknown afs split '" + text + "'");
}

const char* curve_name(ScheduleCurve c) { return c == ScheduleCurve::cosine ? "cosine" : "geometric"; }

ScheduleCurve parse_curve(const std::string& text) {
  if (text == "geometric") return ScheduleCurve::geometric;
  if (text == "cosine") return ScheduleCurve::cosine;
  throw ConfigError("unknown noise schedule '" + text + "'");
}

struct Field {
  std::string key;
  bool hashed = true;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <class T>
Field number(std::string key, T& ref) {
  return {key, true,
          [&ref] {
            if constexpr (std::is_floating_point_v<T>) return format_double(ref);
            else return std::to_string(ref);
          },
          [&ref, key](const std::string& s) { ref = parse_number<T>(key, s); }};
}

Field boolean(std::string key, bool& ref) {
  return {key, true, [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref, key](const std::string& s) { ref = parse_bool(key, s); }};
}

/// Every configurable setting. canonical() and the parser share this table,
/// so a key cannot be settable without also being hashed.
std::vector<Field> fields(HarnessConfig& c) {
  auto& d = c.dataset;
  auto& tx = d.texture;
  auto& dg = d.degradation;
  auto& m = c.model;
  auto& s = c.strategy;
  auto& a = s.afs;
  auto& rs = s.schedule;
  std::vector<Field> f;
  f.push_back({"dataset.dir", true, [&d] { return d.dir.generic_string(); },
               [&d](const std::string& v) { d.dir = v; }});
  f.push_back(number("dataset.images", d.images));
  f.push_back(number("dataset.seed", d.seed));
  f.push_back(number("texture.channels", tx.channels));
  f.push_back(number("texture.height", tx.height));
  f.push_back(number("texture.width", tx.width));
  f.push_back(number("texture.base_std", tx.base_std));
  f.push_back(number("texture.base_exponent", tx.base_exponent));
  f.push_back(number("texture.gratings", tx.gratings));
  f.push_back(number("texture.grating_amplitude", tx.grating_amplitude));
  f.push_back(number("texture.fine_std", tx.fine_std));
  f.push_back(number("texture.fine_exponent", tx.fine_exponent));
  f.push_back(number("texture.fine_cutoff", tx.fine_cutoff));
  f.push_back(number("texture.channel_jitter", tx.channel_jitter));
  f.push_back(number("degradation.blur_sigma", dg.blur_sigma));
  f.push_back(number("degradation.factor", dg.factor));
  f.push_back(number("degradation.noise_std", dg.noise_std));
  f.push_back({"model.kind", true, [&m] { return std::string(to_string(m.kind)); },
               [&m](const std::string& v) { m.kind = parse_model_kind(v); }});
  f.push_back(number("model.steps", m.steps));
  f.push_back({"model.schedule", true, [&m] { return std::string(curve_name(m.curve)); },
               [&m](const std::string& v) { m.curve = parse_curve(v); }});
  f.push_back(number("model.min_sigma", m.min_sigma));
  f.push_back(number("model.max_sigma", m.max_sigma));
  f.push_back(number("model.detail_gain", m.sr.detail_gain));
  f.push_back(number("model.fine_amplitude", m.sr.texture.fine_amplitude));
  f.push_back(number("model.fine_exponent", m.sr.texture.fine_exponent));
  f.push_back(number("model.coarse_amplitude", m.sr.texture.coarse_amplitude));
  f.push_back(number("model.components", m.components));
  f.push_back(number("model.component_std", m.component_std));
  f.push_back(number("model.mean_std", m.mean_std));
  f.push_back(number("model.mean_exponent", m.mean_exponent));
  f.push_back(number("model.prior_seed", m.prior_seed));
  f.push_back({"strategy.kind", true, [&s] { return std::string(to_string(s.kind)); },
               [&s](const std::string& v) { s.kind = parse_strategy_kind(v); }});
  f.push_back(number("strategy.particles", s.particles));
  f.push_back(number("strategy.iterations", s.iterations));
  f.push_back(number("strategy.beam_width", s.beam_width));
  f.push_back(number("strategy.branch", s.branch));
  f.push_back(number("strategy.fk_temperature", s.fk_temperature));
  f.push_back(number("strategy.kds_bandwidth", s.kds_bandwidth));
  f.push_back(number("strategy.kds_step", s.kds_step));
  f.push_back(boolean("afs.enabled", a.enabled));
  f.push_back(number("afs.neighbors", a.neighbors));
  f.push_back({"afs.split", true, [&a] { return std::string(split_name(a.split)); },
               [&a](const std::string& v) { a.split = parse_split(v); }});
  f.push_back(number("afs.kernel_size", a.kernel_size));
  f.push_back(number("afs.sigma", a.sigma));
  f.push_back(number("afs.mask_radius", a.mask_radius));
  f.push_back(number("afs.adain_eps", a.adain_eps));
  f.push_back(boolean("afs.similarity_on_clean", a.similarity_on_clean));
  f.push_back({"schedule.kind", true, [&rs] { return std::string(to_string(rs.kind)); },
               [&rs](const std::string& v) { rs.kind = parse_schedule_kind(v); }});
  f.push_back(number("schedule.tau_clipiqa", rs.tau_clipiqa));
  f.push_back(number("schedule.tau_lpips", rs.tau_lpips));
  f.push_back(number("reward.structural_normalizer", c.reward.structural_normalizer));
  f.push_back(number("reward.perceptual_cutoff", c.reward.perceptual_cutoff));
  f.push_back({"run.seeds", true, [&c] { return join_seeds(c.seeds); },
               [&c](const std::string& v) { c.seeds = parse_seed_list("run.seeds", v); }});
  f.push_back({"output.dir", false, [&c] { return c.output_dir.generic_string(); },
               [&c](const std::string& v) { c.output_dir = v; }});
  Field threads = number("output.threads", c.threads);
  threads.hashed = false;
  f.push_back(threads);
  return f;
}

}  // namespace

void HarnessConfig::validate() const {
  if (dataset.images == 0) throw ConfigError("dataset.images must be >= 1");
  const auto& tx = dataset.texture;
  if (tx.channels == 0 || tx.height == 0 || tx.width == 0) {
    throw ConfigError("texture: channels, height and width must be >= 1");
  }
  const auto f = dataset.degradation.factor;
  if (f == 0 || tx.height % f != 0 || tx.width % f != 0) {
    throw ConfigError("degradation.factor must divide texture height and width");
  }
  if (dataset.degradation.noise_std < 0.0) throw ConfigError("degradation.noise_std must be >= 0");
  if (model.steps < 1) throw ConfigError("model.steps must be >= 1");
  if (!(model.max_sigma > 0.0)) throw ConfigError("model.max_sigma must be > 0");
  if (model.curve == ScheduleCurve::geometric &&
      !(model.min_sigma > 0.0 && model.min_sigma <= model.max_sigma)) {
    throw ConfigError("model.min_sigma must be in (0, max_sigma]");
  }
  if (model.kind == ModelKind::synthetic_sr && model.sr.factor != f) {
    throw ConfigError("model factor must equal degradation.factor");
  }
  if (model.kind == ModelKind::gmm && model.components == 0) {
    throw ConfigError("model.components must be >= 1");
  }
  if (!(reward.structural_normalizer > 0.0)) {
    throw ConfigError("reward.structural_normalizer must be > 0");
  }
  if (seeds.empty()) throw ConfigError("run.seeds is empty");
  if (threads == 0) throw ConfigError("output.threads must be >= 1");
  if (strategy.schedule.steps != model.steps) {
    throw ConfigError("schedule T must equal model.steps");
  }
  strategy.validate();
}

std::string HarnessConfig::canonical() const {
  auto& self = const_cast<HarnessConfig&>(*this);
  std::vector<std::string> lines;
  for (const Field& f : fields(self)) {
    if (f.hashed) lines.push_back(f.key + " = " + f.get());
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t HarnessConfig::hash() const { return mix64(fnv1a64(canonical())); }

std::string HarnessConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

HarnessConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  HarnessConfig cfg;
  std::map<std::string, Field> table;
  for (Field& f : fields(cfg)) table.emplace(f.key, std::move(f));
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ConfigError("config: unknown key '" + full + "'");
      it->second.set(value.get_value<std::string>());
    }
  }
  cfg.strategy.schedule.steps = cfg.model.steps;
  cfg.model.sr.factor = cfg.dataset.degradation.factor;
  cfg.validate();
  return cfg;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("config file not found: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

NoiseSchedule make_schedule(const ModelConfig& model) {
  if (model.curve == ScheduleCurve::cosine) return NoiseSchedule::cosine(model.steps, model.max_sigma);
  return NoiseSchedule::geometric(model.steps, model.min_sigma, model.max_sigma);
}

GmmPrior make_prior(const HarnessConfig& cfg) {
  const auto& tx = cfg.dataset.texture;
  Rng rng(cfg.model.prior_seed);
  return make_texture_gmm(cfg.model.components, Shape{tx.channels, tx.height, tx.width},
                          cfg.model.component_std, cfg.model.mean_std, cfg.model.mean_exponent, rng);
}

std::unique_ptr<Denoiser> make_denoiser(const HarnessConfig& cfg) {
  if (cfg.model.kind == ModelKind::gmm) {
    return std::make_unique<GmmDenoiser>(make_prior(cfg), make_schedule(cfg.model));
  }
  return std::make_unique<SyntheticSrDenoiser>(cfg.model.sr, make_schedule(cfg.model));
}

RewardEvaluator make_reward(const HarnessConfig& cfg) {
  return make_proxy_evaluator(cfg.strategy.schedule, cfg.reward.structural_normalizer,
                              cfg.reward.perceptual_cutoff);
}

}  // namespace iafs
