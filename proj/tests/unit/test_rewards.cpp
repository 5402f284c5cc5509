#include <doctest.h>

#include <cmath>

#include "iafs/diffusion.hpp"
#include "iafs/rewards.hpp"
#include "iafs/spectral.hpp"
#include "iafs/texture.hpp"
#include "oracles.hpp"

using namespace iafs;

namespace {

double oracle_perceptual(const ImageTensor& x, double cutoff) {
  double total = 0, high = 0;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto s = oracle::dft_plane(x, c);
    for (std::size_t ky = 0; ky < x.height(); ++ky)
      for (std::size_t kx = 0; kx < x.width(); ++kx) {
        if (ky == 0 && kx == 0) continue;
        const double p = std::norm(s[ky * x.width() + kx]);
        total += p;
        const double fy = static_cast<double>(ky <= x.height() / 2 ? ky : x.height() - ky);
        const double fx = static_cast<double>(kx <= x.width() / 2 ? kx : x.width() - kx);
        if (std::hypot(fy, fx) > cutoff) high += p;
      }
  }
  return high / total;
}

ImageTensor texture(std::uint64_t seed) {
  Rng r(seed);
  TextureParams p;
  p.height = p.width = 32;
  return synthesize_texture(p, r);
}

}  // namespace

TEST_CASE("perceptual proxy") {
  CHECK(perceptual_proxy(ImageTensor({3, 16, 16}, 0.7)) == 0.0);
  const auto x = texture(1);
  CHECK(perceptual_proxy(x) == doctest::Approx(oracle_perceptual(x, 4.0)).epsilon(1e-9));
  CHECK(perceptual_proxy(x, 6.0) == doctest::Approx(oracle_perceptual(x, 6.0)).epsilon(1e-9));

  Rng r(2);
  const auto noise = sample_standard_normal(r, {1, 32, 32});
  CHECK(perceptual_proxy(noise) > perceptual_proxy(gaussian_blur(noise, 9, 2.0)));

  // Adding small high-frequency detail raises the score monotonically.
  const auto hf = FrequencyMask::ideal_highpass(32, 32, 8.0);
  const auto detail = idft2(apply_mask(dft2(noise), hf)).image;
  const auto base = gaussian_blur(noise, 9, 2.0);
  double prev = perceptual_proxy(base);
  for (double eps : {0.01, 0.02, 0.05, 0.1}) {
    const double v = perceptual_proxy(base + detail * eps);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("structural proxy closed form and band sensitivity") {
  const ImageTensor ref({3, 16, 16}, 0.5);
  for (double c : {0.1, -0.03}) {
    const ImageTensor x = ref + ImageTensor({3, 16, 16}, c);
    CHECK(structural_proxy(x, ref) == doctest::Approx(std::abs(c)).epsilon(1e-12));
    CHECK(structural_proxy(x, ref, 2.0) == doctest::Approx(std::abs(c) / 2.0).epsilon(1e-12));
  }
  CHECK(structural_proxy(ref, ref) == 0.0);

  // Equal-energy corruptions: low frequency costs more than a checkerboard.
  ImageTensor low({1, 16, 16}), high({1, 16, 16});
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      low.at(0, y, x) = 0.1 * std::cos(2 * M_PI * static_cast<double>(x) / 16.0);
      high.at(0, y, x) = 0.1 * (((x + y) % 2) ? 1.0 : -1.0) / std::sqrt(2.0);
    }
  CHECK(l2_norm(low) == doctest::Approx(l2_norm(high)));
  const ImageTensor zero({1, 16, 16}, 0.0);
  CHECK(structural_proxy(low, zero) > structural_proxy(high, zero));
  // The checkerboard vanishes after one pooling level.
  CHECK(structural_proxy(high, zero) == doctest::Approx(0.2 * 0.1 / std::sqrt(2.0)));

  CHECK_THROWS_AS(structural_proxy(zero, ImageTensor({1, 8, 8})), InvalidArgument);
  CHECK_THROWS_AS(structural_proxy(zero, zero, 0.0), InvalidArgument);
  const StructuralProxy sp;
  CHECK(sp.score(low, &zero) == -sp.distance(low, zero));
  CHECK_THROWS_AS((void)sp.score(low, nullptr), InvalidArgument);
}

TEST_CASE("reward schedule cases") {
  RewardSchedule s;
  s.validate();
  for (int t = 1; t <= 15; ++t) CHECK(s.reward_case(1, t) == RewardCase::perceptual);
  CHECK(s.reward_case(2, 15) == RewardCase::structural);
  CHECK(s.reward_case(2, 8) == RewardCase::structural);
  CHECK(s.reward_case(2, 7) == RewardCase::hybrid);
  CHECK(s.reward_case(3, 5) == RewardCase::hybrid);
  CHECK(s.reward_case(2, 4) == RewardCase::perceptual);
  CHECK(s.reward_case(2, 1) == RewardCase::perceptual);

  s.kind = ScheduleKind::lpips_only;
  CHECK(s.reward_case(2, 1) == RewardCase::structural);
  s.kind = ScheduleKind::constant_hybrid;
  CHECK(s.reward_case(4, 9) == RewardCase::hybrid);
  s.kind = ScheduleKind::linear;
  CHECK(s.reward_case(2, 9) == RewardCase::linear);

  CHECK(linear_weight(15, 15) == 0.0);
  CHECK(linear_weight(1, 15) == 1.0);
  CHECK(linear_weight(8, 15) == doctest::Approx(0.5));
  CHECK_THROWS_AS(linear_weight(1, 1), InvalidArgument);
  CHECK_THROWS_AS(linear_weight(0, 15), InvalidArgument);

  RewardSchedule bad;
  bad.tau_clipiqa = 8;
  bad.tau_lpips = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.tau_clipiqa = 0;
  bad.tau_lpips = 16;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_schedule_kind("constant-hybrid") == ScheduleKind::constant_hybrid);
  CHECK_THROWS_AS(parse_schedule_kind("nope"), ConfigError);
}

TEST_CASE("evaluator formulas and reference access") {
  const auto x = texture(3);
  const auto ref = texture(4);
  RewardSchedule s;
  const auto ev = make_proxy_evaluator(s);
  const double rc = perceptual_proxy(x);
  const double rl = structural_proxy(x, ref);
  const auto handle = ReferenceHandle::of(ref);
  CHECK(ev(2, 12, x, handle) == doctest::Approx(-rl));
  CHECK(ev(2, 6, x, handle) == doctest::Approx(rc - rl));
  CHECK(ev(2, 2, x, handle) == doctest::Approx(rc));
  s.kind = ScheduleKind::linear;
  const auto lin = make_proxy_evaluator(s);
  const double a = linear_weight(5, 15);
  CHECK(lin(2, 5, x, handle) == doctest::Approx(a * rc - (1 - a) * rl));

  // Iteration 1 and perceptual cells never touch the reference.
  const auto poisoned = ReferenceHandle::poisoned();
  for (int t = 1; t <= 15; ++t) CHECK_NOTHROW((void)ev(1, t, x, poisoned));
  CHECK_NOTHROW((void)ev(2, 3, x, poisoned));
  CHECK(poisoned.accesses() == 0);
  CHECK_THROWS_AS((void)ev(2, 12, x, poisoned), PoisonedReference);
  CHECK(poisoned.accesses() == 1);
  CHECK_THROWS_AS((void)ev(2, 12, x, ReferenceHandle()), InvalidArgument);
}
