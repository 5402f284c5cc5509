#include "iafs/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "iafs/error.hpp"

namespace iafs {

const char* to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::vanilla: return "vanilla";
    case StrategyKind::iafs: return "iafs";
    case StrategyKind::bon: return "bon";
    case StrategyKind::beam: return "beam";
    case StrategyKind::fk_smc: return "fk-smc";
    case StrategyKind::kds: return "kds";
  }
  return "?";
}

StrategyKind parse_strategy_kind(const std::string& text) {
  for (StrategyKind k : {StrategyKind::vanilla, StrategyKind::iafs, StrategyKind::bon,
                         StrategyKind::beam, StrategyKind::fk_smc, StrategyKind::kds}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown strategy '" + text + "'");
}

void StrategyConfig::validate() const {
  if (particles == 0) throw ConfigError("strategy: N must be >= 1");
  if (iterations < 1) throw ConfigError("strategy: n must be >= 1");
  if (beam_width * branch == 0) throw ConfigError("strategy: B * branch must be >= 1");
  if (!(fk_temperature > 0.0)) throw ConfigError("strategy: fk temperature must be > 0");
  if (!(kds_bandwidth > 0.0)) throw ConfigError("strategy: kds bandwidth must be > 0");
  if (!(kds_step > 0.0 && kds_step <= 1.0)) throw ConfigError("strategy: kds step must be in (0, 1]");
  afs.validate();
  schedule.validate();
}

std::size_t expected_denoiser_calls(const StrategyConfig& cfg, int steps) {
  const auto t = static_cast<std::size_t>(steps);
  const auto n = static_cast<std::size_t>(cfg.iterations);
  switch (cfg.kind) {
    case StrategyKind::vanilla: return t;
    case StrategyKind::beam: return n * cfg.beam_width * cfg.branch * t;
    default: return n * cfg.particles * t;
  }
}

Rng particle_stream(const Rng& root, int iteration, int t, std::size_t particle) {
  return root.split(static_cast<std::uint64_t>(iteration))
      .split(static_cast<std::uint64_t>(t))
      .split(particle);
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_weights,
                                          bool* degenerate) {
  const std::size_t n = log_weights.size();
  double top = -std::numeric_limits<double>::infinity();
  for (double l : log_weights) {
    if (std::isfinite(l)) top = std::max(top, l);
  }
  std::vector<double> w(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  if (!std::isfinite(top)) {
    if (degenerate) *degenerate = true;
    return w;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = std::isfinite(log_weights[k]) ? std::exp(log_weights[k] - top) : 0.0;
    total += w[k];
  }
  for (double& v : w) v /= total;
  if (degenerate) *degenerate = false;
  return w;
}

double effective_sample_size(const std::vector<double>& weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return s > 0.0 ? 1.0 / s : 0.0;
}

std::vector<std::size_t> multinomial_resample(const std::vector<double>& weights, Rng& rng) {
  const std::size_t n = weights.size();
  std::vector<double> cdf(n);
  std::partial_sum(weights.begin(), weights.end(), cdf.begin());
  std::vector<std::size_t> ancestors(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * cdf.back();
    ancestors[k] = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin(),
                                 static_cast<std::ptrdiff_t>(n) - 1));
  }
  return ancestors;
}

std::vector<ImageTensor> mean_shift_step(const std::vector<ImageTensor>& pool, double bandwidth,
                                         double step) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("mean_shift_step: bandwidth must be > 0");
  const std::size_t n = pool.size();
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 1.0));
  const double scale = std::isinf(bandwidth) ? 0.0 : 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double k = std::exp(-mean_squared_difference(pool[a], pool[b]) * scale);
      kernel[a][b] = kernel[b][a] = k;
    }
  }
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    double total = 0.0;
    for (double k : kernel[a]) total += k;
    ImageTensor target(pool[a].shape(), 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      const double w = kernel[a][b] / total;
      const auto src = pool[b].values();
      auto dst = target.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
    }
    out.push_back(linear_combination(pool[a], 1.0 - step, target, step));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

ImageTensor initial_state(const Denoiser& d, const ImageTensor& condition, const Rng& root,
                          int iteration, std::size_t particle) {
  ImageTensor x = d.initial_center(condition);
  Rng r = particle_stream(root, iteration, 0, particle);
  const double sigma = d.schedule().max_sigma();
  for (double& v : x.values()) v += sigma * r.normal();
  return x;
}

struct StepEval {
  std::vector<DenoiserOutput> outputs;
  std::vector<double> rewards;
  bool reference_used = false;
};

/// Denoises every state; scores clean predictions when `reward` is given.
StepEval evaluate(const Denoiser& d, const std::vector<ImageTensor>& states, int t,
                  const ImageTensor& condition, const RewardEvaluator* reward, int iteration,
                  const ReferenceHandle& reference) {
  StepEval ev;
  ev.outputs.reserve(states.size());
  for (const auto& x : states) ev.outputs.push_back(d.denoise(x, t, condition));
  if (reward != nullptr) {
    const std::size_t before = reference.accesses();
    ev.rewards.reserve(states.size());
    for (const auto& out : ev.outputs) {
      const double r = (*reward)(iteration, t, out.clean, reference);
      if (!std::isfinite(r)) {
        throw NumericalError("non-finite reward at t=" + std::to_string(t));
      }
      ev.rewards.push_back(r);
    }
    ev.reference_used = reference.accesses() != before;
  }
  return ev;
}

double average(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TraceRow make_row(int iteration, int t, const RewardEvaluator* reward) {
  TraceRow row;
  row.iteration = iteration;
  row.t = t;
  row.segment = reward ? to_string(reward->schedule().reward_case(iteration, t)) : "none";
  row.reward = std::numeric_limits<double>::quiet_NaN();
  row.mean_reward = std::numeric_limits<double>::quiet_NaN();
  return row;
}

void fill_selection(TraceRow& row, const StepEval& ev, std::size_t chosen) {
  row.chosen = chosen;
  row.reward = ev.rewards.at(chosen);
  row.mean_reward = average(ev.rewards);
  row.reference_used = ev.reference_used;
}

void check_schedule(const Denoiser& d, const StrategyConfig& cfg) {
  cfg.validate();
  if (cfg.schedule.steps != d.schedule().steps()) {
    throw ConfigError("reward schedule T=" + std::to_string(cfg.schedule.steps) +
                      " does not match the denoiser's T=" + std::to_string(d.schedule().steps()));
  }
}

/// Runs `body(iteration, reference, record)` n times, feeding each output back
/// as the next pseudo-GT. Iteration 1 receives a poisoned reference.
template <class Body>
RunRecord iterate(const Denoiser& inner, const StrategyConfig& cfg, StrategyKind kind,
                  const Rng& rng, Body body) {
  const auto start = Clock::now();
  CountingDenoiser d(inner);
  RunRecord record;
  record.kind = kind;
  record.seed = rng.seed();
  ImageTensor pseudo_gt;
  for (int i = 1; i <= cfg.iterations; ++i) {
    const ReferenceHandle ref = i == 1 ? ReferenceHandle::poisoned() : ReferenceHandle::of(pseudo_gt);
    ImageTensor out = body(d, i, ref, record);
    record.iteration_outputs.push_back(out);
    pseudo_gt = std::move(out);
  }
  record.final_image = record.iteration_outputs.back();
  record.denoiser_calls = d.calls();
  record.wall_ms = elapsed_ms(start);
  return record;
}

}  // namespace

RunRecord run_vanilla(const Denoiser& inner, const ImageTensor& condition, const Rng& rng,
                      bool save_latents) {
  const auto start = Clock::now();
  CountingDenoiser d(inner);
  const NoiseSchedule& sched = d.schedule();
  RunRecord record;
  record.kind = StrategyKind::vanilla;
  record.seed = rng.seed();
  ImageTensor x = initial_state(d, condition, rng, 1, 0);
  for (int t = sched.steps(); t >= 1; --t) {
    const auto step_start = Clock::now();
    TraceRow row = make_row(1, t, nullptr);
    if (save_latents) record.latents.push_back({1, t, x});
    const DenoiserOutput out = d.denoise(x, t, condition);
    Rng noise = particle_stream(rng, 1, t, 0);
    x = reverse_step(out.mean, sched.step_sigma(t), noise);
    row.wall_ms = elapsed_ms(step_start);
    record.trace.push_back(std::move(row));
  }
  record.final_image = x;
  record.iteration_outputs.push_back(x);
  record.denoiser_calls = d.calls();
  record.wall_ms = elapsed_ms(start);
  return record;
}

RunRecord run_iafs(const Denoiser& denoiser, const ImageTensor& condition,
                   const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  if (cfg.kind != StrategyKind::iafs) throw ConfigError("run_iafs: kind must be iafs");
  check_schedule(denoiser, cfg);
  return iterate(denoiser, cfg, StrategyKind::iafs, rng,
                 [&](const Denoiser& d, int i, const ReferenceHandle& ref, RunRecord& record) {
    const NoiseSchedule& sched = d.schedule();
    std::vector<ImageTensor> xs;
    for (std::size_t k = 0; k < cfg.particles; ++k) xs.push_back(initial_state(d, condition, rng, i, k));
    ImageTensor result;
    for (int t = sched.steps(); t >= 1; --t) {
      const auto step_start = Clock::now();
      TraceRow row = make_row(i, t, &reward);
      StepEval ev = evaluate(d, xs, t, condition, &reward, i, ref);

      ParticlePool pool;
      pool.particles = xs;
      pool.rewards = ev.rewards;
      for (const auto& o : ev.outputs) pool.clean.push_back(o.clean);
      const AfsResult afs = afs_refine(pool, cfg.afs);
      const std::size_t best = afs.chosen;
      fill_selection(row, ev, best);
      row.neighbors = afs.reference.neighbors;
      row.neighbor_weights = afs.reference.weights;
      row.adain_mean_shift = afs.mean_shift;
      row.adain_std_ratio = afs.std_ratio;
      if (cfg.save_latents) record.latents.push_back({i, t, afs.refined});

      // mu(x~) with x0_hat held at the chosen particle's prediction.
      ImageTensor mu = std::move(ev.outputs[best].mean);
      if (!afs.identity) {
        const double carry = sched.carry(t);
        const auto refined = afs.refined.values();
        const auto orig = xs[best].values();
        auto m = mu.values();
        for (std::size_t p = 0; p < m.size(); ++p) m[p] += carry * (refined[p] - orig[p]);
      }
      if (t > 1) {
        for (std::size_t k = 0; k < cfg.particles; ++k) {
          Rng noise = particle_stream(rng, i, t, k);
          xs[k] = reverse_step(mu, sched.step_sigma(t), noise);
        }
      } else {
        result = std::move(mu);
      }
      row.wall_ms = elapsed_ms(step_start);
      record.trace.push_back(std::move(row));
    }
    return result;
  });
}

RunRecord run_bon(const Denoiser& denoiser, const ImageTensor& condition,
                  const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  if (cfg.kind != StrategyKind::bon) throw ConfigError("run_bon: kind must be bon");
  check_schedule(denoiser, cfg);
  return iterate(denoiser, cfg, StrategyKind::bon, rng,
                 [&](const Denoiser& d, int i, const ReferenceHandle& ref, RunRecord& record) {
    const NoiseSchedule& sched = d.schedule();
    std::vector<ImageTensor> xs;
    for (std::size_t k = 0; k < cfg.particles; ++k) xs.push_back(initial_state(d, condition, rng, i, k));
    ImageTensor result;
    for (int t = sched.steps(); t >= 1; --t) {
      const auto step_start = Clock::now();
      TraceRow row = make_row(i, t, t == 1 ? &reward : nullptr);
      const StepEval ev = evaluate(d, xs, t, condition, t == 1 ? &reward : nullptr, i, ref);
      if (t > 1) {
        for (std::size_t k = 0; k < cfg.particles; ++k) {
          Rng noise = particle_stream(rng, i, t, k);
          xs[k] = reverse_step(ev.outputs[k].mean, sched.step_sigma(t), noise);
        }
        if (cfg.save_latents) record.latents.push_back({i, t, xs[0]});
      } else {
        const std::size_t best = select_best(ev.rewards);
        fill_selection(row, ev, best);
        result = ev.outputs[best].mean;
      }
      row.wall_ms = elapsed_ms(step_start);
      record.trace.push_back(std::move(row));
    }
    return result;
  });
}

RunRecord run_beam(const Denoiser& denoiser, const ImageTensor& condition,
                   const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  if (cfg.kind != StrategyKind::beam) throw ConfigError("run_beam: kind must be beam");
  check_schedule(denoiser, cfg);
  const std::size_t pool_size = cfg.beam_width * cfg.branch;
  return iterate(denoiser, cfg, StrategyKind::beam, rng,
                 [&](const Denoiser& d, int i, const ReferenceHandle& ref, RunRecord& record) {
    const NoiseSchedule& sched = d.schedule();
    std::vector<ImageTensor> xs;
    for (std::size_t k = 0; k < pool_size; ++k) xs.push_back(initial_state(d, condition, rng, i, k));
    ImageTensor result;
    for (int t = sched.steps(); t >= 1; --t) {
      const auto step_start = Clock::now();
      TraceRow row = make_row(i, t, &reward);
      const StepEval ev = evaluate(d, xs, t, condition, &reward, i, ref);
      std::vector<std::size_t> order(xs.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return ev.rewards[a] > ev.rewards[b]; });
      order.resize(std::min(cfg.beam_width, order.size()));
      fill_selection(row, ev, order.front());
      row.neighbors = order;  // surviving beams
      if (cfg.save_latents) record.latents.push_back({i, t, xs[order.front()]});
      if (t > 1) {
        for (std::size_t s = 0; s < order.size(); ++s) {
          for (std::size_t j = 0; j < cfg.branch; ++j) {
            const std::size_t slot = s * cfg.branch + j;
            Rng noise = particle_stream(rng, i, t, slot);
            xs[slot] = reverse_step(ev.outputs[order[s]].mean, sched.step_sigma(t), noise);
          }
        }
      } else {
        result = ev.outputs[order.front()].mean;
      }
      row.wall_ms = elapsed_ms(step_start);
      record.trace.push_back(std::move(row));
    }
    return result;
  });
}

RunRecord run_fk_smc(const Denoiser& denoiser, const ImageTensor& condition,
                     const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  if (cfg.kind != StrategyKind::fk_smc) throw ConfigError("run_fk_smc: kind must be fk-smc");
  check_schedule(denoiser, cfg);
  constexpr std::uint64_t kResampleStream = 0x5245'5341'4d50ULL;
  return iterate(denoiser, cfg, StrategyKind::fk_smc, rng,
                 [&](const Denoiser& d, int i, const ReferenceHandle& ref, RunRecord& record) {
    const NoiseSchedule& sched = d.schedule();
    const std::size_t n = cfg.particles;
    std::vector<ImageTensor> xs;
    for (std::size_t k = 0; k < n; ++k) xs.push_back(initial_state(d, condition, rng, i, k));
    std::vector<double> log_w(n, 0.0);
    ImageTensor result;
    for (int t = sched.steps(); t >= 1; --t) {
      const auto step_start = Clock::now();
      TraceRow row = make_row(i, t, &reward);
      const StepEval ev = evaluate(d, xs, t, condition, &reward, i, ref);
      const std::size_t best = select_best(ev.rewards);
      fill_selection(row, ev, best);
      if (cfg.save_latents) record.latents.push_back({i, t, xs[best]});
      for (std::size_t k = 0; k < n; ++k) log_w[k] += ev.rewards[k] / cfg.fk_temperature;
      bool degenerate = false;
      const std::vector<double> w = normalize_log_weights(log_w, &degenerate);
      if (degenerate) spdlog::warn("fk-smc: degenerate weights at t={}, resampling uniformly", t);
      row.ess = effective_sample_size(w);
      if (t > 1) {
        std::vector<std::size_t> ancestors(n);
        std::iota(ancestors.begin(), ancestors.end(), 0);
        if (degenerate || row.ess < 0.5 * static_cast<double>(n)) {
          Rng r = rng.split(kResampleStream).split(static_cast<std::uint64_t>(i)).split(
              static_cast<std::uint64_t>(t));
          ancestors = multinomial_resample(w, r);
          std::fill(log_w.begin(), log_w.end(), 0.0);
          row.resampled = true;
        }
        for (std::size_t k = 0; k < n; ++k) {
          Rng noise = particle_stream(rng, i, t, k);
          xs[k] = reverse_step(ev.outputs[ancestors[k]].mean, sched.step_sigma(t), noise);
        }
      } else {
        result = ev.outputs[best].mean;
      }
      row.wall_ms = elapsed_ms(step_start);
      record.trace.push_back(std::move(row));
    }
    return result;
  });
}

RunRecord run_kds(const Denoiser& denoiser, const ImageTensor& condition,
                  const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  if (cfg.kind != StrategyKind::kds) throw ConfigError("run_kds: kind must be kds");
  check_schedule(denoiser, cfg);
  return iterate(denoiser, cfg, StrategyKind::kds, rng,
                 [&](const Denoiser& d, int i, const ReferenceHandle& ref, RunRecord& record) {
    const NoiseSchedule& sched = d.schedule();
    const std::size_t n = cfg.particles;
    std::vector<ImageTensor> xs;
    for (std::size_t k = 0; k < n; ++k) xs.push_back(initial_state(d, condition, rng, i, k));
    ImageTensor result;
    for (int t = sched.steps(); t >= 1; --t) {
      const auto step_start = Clock::now();
      TraceRow row = make_row(i, t, t == 1 ? &reward : nullptr);
      StepEval ev = evaluate(d, xs, t, condition, nullptr, i, ref);
      std::vector<ImageTensor> clean;
      for (const auto& o : ev.outputs) clean.push_back(o.clean);
      const std::vector<ImageTensor> shifted = mean_shift_step(clean, cfg.kds_bandwidth, cfg.kds_step);
      const double gain = 1.0 - sched.carry(t);
      std::vector<ImageTensor> mus;
      for (std::size_t k = 0; k < n; ++k) {
        mus.push_back(ev.outputs[k].mean + (shifted[k] - clean[k]) * gain);
      }
      if (cfg.save_latents) record.latents.push_back({i, t, xs[0]});
      if (t > 1) {
        for (std::size_t k = 0; k < n; ++k) {
          Rng noise = particle_stream(rng, i, t, k);
          xs[k] = reverse_step(mus[k], sched.step_sigma(t), noise);
        }
      } else {
        const std::size_t before = ref.accesses();
        for (const auto& m : mus) ev.rewards.push_back(reward(i, t, m, ref));
        ev.reference_used = ref.accesses() != before;
        const std::size_t best = select_best(ev.rewards);
        fill_selection(row, ev, best);
        result = mus[best];
      }
      row.wall_ms = elapsed_ms(step_start);
      record.trace.push_back(std::move(row));
    }
    return result;
  });
}

RunRecord run_strategy(const Denoiser& denoiser, const ImageTensor& condition,
                       const StrategyConfig& cfg, const RewardEvaluator& reward, const Rng& rng) {
  switch (cfg.kind) {
    case StrategyKind::vanilla: return run_vanilla(denoiser, condition, rng, cfg.save_latents);
    case StrategyKind::iafs: return run_iafs(denoiser, condition, cfg, reward, rng);
    case StrategyKind::bon: return run_bon(denoiser, condition, cfg, reward, rng);
    case StrategyKind::beam: return run_beam(denoiser, condition, cfg, reward, rng);
    case StrategyKind::fk_smc: return run_fk_smc(denoiser, condition, cfg, reward, rng);
    case StrategyKind::kds: return run_kds(denoiser, condition, cfg, reward, rng);
  }
  throw ConfigError("run_strategy: unknown kind");
}

}  // namespace iafs
