#include <benchmark/benchmark.h>

#include "iafs/afs.hpp"
#include "iafs/metrics.hpp"
#include "iafs/spectral.hpp"
#include "iafs/strategies.hpp"
#include "iafs/texture.hpp"

namespace {

using namespace iafs;

ImageTensor texture(std::size_t size) {
  Rng r(1);
  TextureParams p;
  p.height = p.width = size;
  return synthesize_texture(p, r);
}

void BM_Dft2(benchmark::State& state) {
  const auto x = texture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dft2(x));
}
BENCHMARK(BM_Dft2)->Arg(32)->Arg(64)->Arg(128);

void BM_GaussianSplit(benchmark::State& state) {
  const auto x = texture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_split(x));
}
BENCHMARK(BM_GaussianSplit)->Arg(32)->Arg(64)->Arg(128);

void BM_Rapsd(benchmark::State& state) {
  const auto x = texture(64);
  for (auto _ : state) benchmark::DoNotOptimize(rapsd(x));
}
BENCHMARK(BM_Rapsd);

void BM_Ssim(benchmark::State& state) {
  const auto x = texture(64);
  Rng r(2);
  const auto y = x + sample_standard_normal(r, x.shape()) * 0.02;
  for (auto _ : state) benchmark::DoNotOptimize(ssim(x, y));
}
BENCHMARK(BM_Ssim);

void BM_SrDenoise(benchmark::State& state) {
  const auto hr = texture(64);
  Rng dr(3);
  const auto lr = degrade(hr, DegradationOperator{}, dr);
  SyntheticSrDenoiser d(SyntheticSrParams{}, NoiseSchedule::geometric(15, 0.004, 1.0));
  Rng r(4);
  const auto x = d.initial_center(lr) + sample_standard_normal(r, hr.shape());
  for (auto _ : state) benchmark::DoNotOptimize(d.denoise(x, 8, lr));
}
BENCHMARK(BM_SrDenoise);

void BM_AfsRefine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng r(5);
  ParticlePool pool;
  const auto base = texture(64);
  for (std::size_t k = 0; k < n; ++k) {
    pool.particles.push_back(base + sample_standard_normal(r, base.shape()) * 0.1);
    pool.clean.push_back(pool.particles.back());
    pool.rewards.push_back(r.uniform());
  }
  const AfsConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(afs_refine(pool, cfg));
}
BENCHMARK(BM_AfsRefine)->Arg(5)->Arg(10)->Arg(20);

void BM_StrategyRun(benchmark::State& state) {
  const auto hr = texture(64);
  Rng dr(6);
  const auto lr = degrade(hr, DegradationOperator{}, dr);
  SyntheticSrDenoiser d(SyntheticSrParams{}, NoiseSchedule::geometric(15, 0.004, 1.0));
  const auto reward = make_proxy_evaluator(RewardSchedule{});
  StrategyConfig cfg;
  cfg.kind = static_cast<StrategyKind>(state.range(0));
  cfg.iterations = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_strategy(d, lr, cfg, reward, Rng(7)));
  state.SetLabel(to_string(cfg.kind));
}
BENCHMARK(BM_StrategyRun)
    ->DenseRange(0, 5)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
