#include <doctest.h>

#include <cmath>

#include "iafs/diffusion.hpp"
#include "iafs/error.hpp"
#include "iafs/spectral.hpp"
#include "iafs/texture.hpp"

using namespace iafs;

TEST_CASE("geometric schedule endpoints and monotonicity") {
  const auto s = NoiseSchedule::geometric(15, 0.004, 1.0);
  CHECK(s.steps() == 15);
  CHECK(s.cumulative_sigma(0) == 0.0);
  CHECK(s.cumulative_sigma(1) == doctest::Approx(0.004));
  CHECK(s.cumulative_sigma(15) == 1.0);
  CHECK(s.signal_level(0) == 1.0);
  for (int t = 1; t <= 15; ++t) {
    CHECK(s.cumulative_sigma(t) > s.cumulative_sigma(t - 1));
    CHECK(s.signal_level(t) == doctest::Approx(1.0 / (1.0 + std::pow(s.cumulative_sigma(t), 2))));
  }
  CHECK(s.cumulative_sigma(8) / s.cumulative_sigma(7) ==
        doctest::Approx(s.cumulative_sigma(3) / s.cumulative_sigma(2)));
  CHECK(s.carry(1) == 0.0);
  CHECK(s.step_sigma(1) == 0.0);
  CHECK_THROWS_AS((void)s.carry(0), InvalidArgument);
  CHECK_THROWS_AS((void)s.cumulative_sigma(16), InvalidArgument);
  CHECK_THROWS_AS(NoiseSchedule::geometric(15, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("reverse step preserves the marginal noise level") {
  for (const auto& s : {NoiseSchedule::geometric(15, 0.004, 1.0), NoiseSchedule::cosine(15, 10.0)}) {
    for (int t = 1; t <= s.steps(); ++t) {
      const double c = s.carry(t);
      CHECK(c >= 0.0);
      CHECK(c < 1.0);
      const double var = c * c * std::pow(s.cumulative_sigma(t), 2) + std::pow(s.step_sigma(t), 2);
      CHECK(var == doctest::Approx(std::pow(s.cumulative_sigma(t - 1), 2)).epsilon(1e-12));
    }
  }
  CHECK(NoiseSchedule::cosine(15, 10.0).max_sigma() == 10.0);
}

TEST_CASE("reverse_step noise") {
  const ImageTensor mu({1, 4, 4}, 0.25);
  Rng r(1);
  CHECK(reverse_step(mu, 0.0, r) == mu);
  CHECK_THROWS_AS(reverse_step(mu, -1.0, r), InvalidArgument);
  const ImageTensor zero({1, 2, 2}, 0.0);
  std::vector<double> s2(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto x = reverse_step(zero, 1.0, r);
    for (int p = 0; p < 4; ++p) s2[p] += x[p] * x[p];
  }
  for (double v : s2) CHECK(std::abs(std::sqrt(v / n) - 1.0) < 0.02);
  Rng a(5), b(5);
  CHECK(reverse_step(mu, 0.3, a) == reverse_step(mu, 0.3, b));
}

TEST_CASE("single-component GMM is linear shrinkage") {
  GmmPrior prior;
  prior.means = {ImageTensor({1, 2, 3}, 0.4)};
  prior.weights = {1.0};
  prior.variance = 0.01;
  Rng r(3);
  const auto x = sample_standard_normal(r, {1, 2, 3});
  const double sigma = 0.2;
  const auto post = gmm_posterior_mean(x, sigma, prior);
  const double s2 = prior.variance, n2 = sigma * sigma;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(post[i] == doctest::Approx((s2 * x[i] + n2 * 0.4) / (s2 + n2)).epsilon(1e-12));
  }
}

TEST_CASE("shrinkage slope matches Monte Carlo regression") {
  // For x0 ~ N(m, s^2) and xt = x0 + sigma eps, E[x0 | xt] has slope Cov / Var.
  const double m = 0.3, s = 0.1, sigma = 0.15;
  Rng r(17);
  const int n = 1000000;
  double sx = 0, sy = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double x0 = m + s * r.normal();
    const double xt = x0 + sigma * r.normal();
    sx += x0;
    sy += xt;
    sxy += x0 * xt;
    syy += xt * xt;
  }
  const double cov = sxy / n - sx / n * sy / n;
  const double var = syy / n - sy / n * sy / n;
  GmmPrior prior;
  prior.means = {ImageTensor({1, 1, 1}, m)};
  prior.weights = {1.0};
  prior.variance = s * s;
  const double a = gmm_posterior_mean(ImageTensor({1, 1, 1}, 1.0), sigma, prior)[0];
  const double b = gmm_posterior_mean(ImageTensor({1, 1, 1}, 0.0), sigma, prior)[0];
  CHECK(a - b == doctest::Approx(cov / var).epsilon(0.01));
}

TEST_CASE("GMM limits and symmetry") {
  GmmPrior prior;
  prior.means = {ImageTensor({1, 2, 2}, -1.0), ImageTensor({1, 2, 2}, 1.0)};
  prior.weights = {0.5, 0.5};
  prior.variance = 1e-3;
  const auto at_mean = gmm_posterior_mean(prior.means[1], 1e-4, prior);
  CHECK(max_abs_difference(at_mean, prior.means[1]) < 1e-6);
  const auto mid = gmm_posterior_mean(ImageTensor({1, 2, 2}, 0.0), 0.5, prior);
  CHECK(max_abs_difference(mid, ImageTensor({1, 2, 2}, 0.0)) < 1e-12);
  CHECK(prior.nearest_component(ImageTensor({1, 2, 2}, 0.2)) == 1);
  GmmPrior bad = prior;
  bad.weights = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("GMM denoiser output is the schedule posterior mean") {
  Rng r(1);
  GmmPrior prior = make_texture_gmm(4, {1, 8, 8}, 0.03, 0.1, 2.0, r);
  const auto sched = NoiseSchedule::cosine(15, 10.0);
  GmmDenoiser d(prior, sched);
  const auto x = sample_standard_normal(r, {1, 8, 8});
  const auto out = d.denoise(x, 7, ImageTensor());
  CHECK(max_abs_difference(out.clean, gmm_posterior_mean(x, sched.cumulative_sigma(7), prior)) == 0.0);
  CHECK(max_abs_difference(out.mean, posterior_mean(x, out.clean, sched.carry(7))) == 0.0);
  CHECK_THROWS_AS(d.denoise(ImageTensor({1, 4, 4}), 7, ImageTensor()), InvalidArgument);
}

TEST_CASE("synthetic SR surrogate") {
  Rng r(2);
  TextureParams tp;
  const auto hr = synthesize_texture(tp, r);
  Rng dr(3);
  const auto lr = degrade(hr, DegradationOperator{}, dr);
  const auto sched = NoiseSchedule::geometric(15, 0.004, 1.0);

  SUBCASE("zero detail gain collapses to the upsampled condition") {
    SyntheticSrParams p;
    p.detail_gain = 0.0;
    SyntheticSrDenoiser d(p, sched);
    const auto base = upsample_bicubic(lr, 4);
    Rng nr(4);
    const auto x = sample_standard_normal(nr, d.state_shape(lr));
    for (int t = 1; t <= 15; ++t) CHECK(d.denoise(x, t, lr).clean == base);
  }
  SUBCASE("detail opens as t decreases") {
    SyntheticSrDenoiser d(SyntheticSrParams{}, sched);
    Rng nr(5);
    const ImageTensor x = d.initial_center(lr) + sample_standard_normal(nr, d.state_shape(lr)) * 0.5;
    const auto high_power = [&](int t) {
      const auto p = rapsd(d.denoise(x, t, lr).clean - upsample_bicubic(lr, 4));
      double e = 0;
      for (std::size_t b = 9; b < p.bins(); ++b) e += p.power[b] * p.counts[b];
      return e;
    };
    CHECK(high_power(15) <= high_power(1));
    CHECK(high_power(15) <= high_power(8));
  }
  SUBCASE("density budgets per band") {
    SyntheticSrDenoiser d(SyntheticSrParams{}, sched);
    const auto v = d.detail_density(64, 64);
    double fine = 0, coarse = 0;
    for (std::size_t ky = 0; ky < 64; ++ky)
      for (std::size_t kx = 0; kx < 64; ++kx)
        (frequency_radius(ky, kx, 64, 64) > 8.0 ? fine : coarse) += v[ky * 64 + kx];
    CHECK(fine / 4096 == doctest::Approx(0.035 * 0.035));
    CHECK(coarse / 4096 == doctest::Approx(0.01 * 0.01));
  }
  SUBCASE("pure and shape-checked") {
    SyntheticSrDenoiser d(SyntheticSrParams{}, sched);
    Rng nr(6);
    const auto x = sample_standard_normal(nr, d.state_shape(lr));
    CHECK(d.denoise(x, 3, lr).clean == d.denoise(x, 3, lr).clean);
    CHECK_THROWS_AS(d.denoise(ImageTensor({3, 32, 32}), 3, lr), InvalidArgument);
  }
}

TEST_CASE("counting decorator") {
  GmmPrior prior;
  prior.means = {ImageTensor({1, 2, 2}, 0.0)};
  prior.weights = {1.0};
  GmmDenoiser d(prior, NoiseSchedule::cosine(5, 2.0));
  CountingDenoiser c(d);
  for (int i = 0; i < 7; ++i) (void)c.denoise(ImageTensor({1, 2, 2}, 0.1), 3, ImageTensor());
  CHECK(c.calls() == 7);
  CHECK(c.schedule().steps() == 5);
}
