#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iafs/afs.hpp"
#include "iafs/error.hpp"
#include "oracles.hpp"

using namespace iafs;

namespace {

ParticlePool random_pool(std::size_t n, std::uint64_t seed, Shape shape = {3, 16, 16}) {
  Rng r(seed);
  ParticlePool p;
  const auto base = sample_standard_normal(r, shape);
  for (std::size_t k = 0; k < n; ++k) {
    p.particles.push_back(base + sample_standard_normal(r, shape) * (0.3 + 0.2 * k));
    p.clean.push_back(p.particles.back() * 0.5);
    p.rewards.push_back(r.uniform());
  }
  return p;
}

/// Straight-line re-derivation of the refinement for a pool.
ImageTensor oracle_refine(const ParticlePool& pool, const AfsConfig& cfg) {
  const std::size_t n = pool.size();
  const std::size_t chosen = static_cast<std::size_t>(
      std::max_element(pool.rewards.begin(), pool.rewards.end()) - pool.rewards.begin());
  const auto& x = pool.particles;
  std::vector<std::pair<double, std::size_t>> sims;
  const double cn = std::sqrt(oracle::dot(x[chosen], x[chosen]));
  for (std::size_t k = 0; k < n; ++k) {
    if (k == chosen) continue;
    sims.emplace_back(oracle::dot(x[k], x[chosen]) / (cn * std::sqrt(oracle::dot(x[k], x[k]))), k);
  }
  std::stable_sort(sims.begin(), sims.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  sims.resize(std::min(cfg.neighbors, n - 1));
  double total = 0;
  for (const auto& s : sims) total += s.first;
  ImageTensor ref(x[chosen].shape(), 0.0);
  for (const auto& s : sims) {
    const auto low = split_bands(x[s.second], cfg).low;
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += s.first / total * low[i];
  }
  const auto bands = split_bands(x[chosen], cfg);
  ImageTensor out = bands.high;
  for (std::size_t c = 0; c < out.channels(); ++c) {
    double ms, ss, mr, sr;
    oracle::channel_moments(bands.low, c, ms, ss);
    oracle::channel_moments(ref, c, mr, sr);
    for (std::size_t y = 0; y < out.height(); ++y)
      for (std::size_t xx = 0; xx < out.width(); ++xx)
        out.at(c, y, xx) += sr / ss * (bands.low.at(c, y, xx) - ms) + mr;
  }
  return out;
}

}  // namespace

TEST_CASE("select_best") {
  CHECK(select_best({0.1, 0.5, 0.2}) == 1);
  CHECK(select_best({0.5, 0.5, 0.2}) == 0);
  CHECK(select_best({-3.0}) == 0);
  CHECK_THROWS_AS(select_best({}), InvalidArgument);
}

TEST_CASE("similarity weights") {
  const ImageTensor a({1, 2, 2}, 1.0);
  const ImageTensor neg = a * -1.0;
  const ImageTensor zero({1, 2, 2}, 0.0);
  ImageTensor ortho({1, 2, 2}, 0.0);
  ortho[0] = 1;
  ortho[1] = -1;
  const auto w = similarity_weights({a, neg, zero, ortho, a * 3.0}, 0);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(-1.0));
  CHECK(w[2] == 0.0);
  CHECK(w[3] == doctest::Approx(0.0));
  CHECK(w[4] == doctest::Approx(1.0));
  const auto pool = random_pool(5, 1);
  const auto ws = similarity_weights(pool.particles, 2);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& x = pool.particles;
    const double ref = oracle::dot(x[k], x[2]) /
                       std::sqrt(oracle::dot(x[k], x[k]) * oracle::dot(x[2], x[2]));
    CHECK(ws[k] == doctest::Approx(ref).epsilon(1e-12));
  }
  CHECK_THROWS_AS(similarity_weights({a}, 1), InvalidArgument);
}

TEST_CASE("low-frequency reference") {
  AfsConfig cfg;
  SUBCASE("K = 1 picks the most similar neighbour") {
    auto pool = random_pool(4, 2);
    cfg.neighbors = 1;
    const auto ref = lowfreq_reference(pool, 0, cfg);
    CHECK(ref.neighbors == std::vector<std::size_t>{1});
    CHECK(ref.weights == std::vector<double>{1.0});
    CHECK(ref.low == split_bands(pool.particles[1], cfg).low);
  }
  SUBCASE("equal similarities average equally") {
    ParticlePool pool;
    const ImageTensor base({1, 8, 8}, 1.0);
    for (int k = 0; k < 3; ++k) {
      ImageTensor x = base;
      if (k > 0) x[static_cast<std::size_t>(k)] += 0.5;
      pool.particles.push_back(x);
      pool.clean.push_back(x);
      pool.rewards.push_back(k == 0 ? 1.0 : 0.0);
    }
    cfg.neighbors = 2;
    const auto ref = lowfreq_reference(pool, 0, cfg);
    REQUIRE(ref.weights.size() == 2);
    CHECK(ref.weights[0] == doctest::Approx(0.5));
    CHECK(ref.weights[1] == doctest::Approx(0.5));
  }
  SUBCASE("K clamps to N - 1 and negative neighbours are dropped") {
    ParticlePool pool;
    const ImageTensor a({1, 4, 4}, 1.0);
    pool.particles = {a, a * -1.0, a * -2.0};
    pool.clean = pool.particles;
    pool.rewards = {1, 0, 0};
    cfg.neighbors = 5;
    const auto ref = lowfreq_reference(pool, 0, cfg);
    CHECK(ref.fallback);
    CHECK(ref.neighbors.empty());
  }
}

TEST_CASE("refinement matches the oracle") {
  for (const auto split : {SplitKind::spatial_gaussian, SplitKind::dft_mask}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      AfsConfig cfg;
      cfg.split = split;
      cfg.neighbors = 3;
      const auto pool = random_pool(6, 100 + seed);
      const auto res = afs_refine(pool, cfg);
      CHECK_FALSE(res.identity);
      CHECK(res.reference.neighbors.size() == 3);
      CHECK(max_abs_difference(res.refined, oracle_refine(pool, cfg)) < 1e-10);
      const auto chosen_bands = split_bands(pool.particles[res.chosen], cfg);
      const auto out_bands = split_bands(res.refined, cfg);
      CHECK(max_abs_difference(res.refined - res.adapted_low, chosen_bands.high) < 1e-12);
      // Refined low band carries the reference statistics.
      const auto rs = channel_stats(res.reference.low);
      const auto as = channel_stats(res.adapted_low);
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(as.mean[c] == doctest::Approx(rs.mean[c]).epsilon(1e-9));
        CHECK(as.std[c] == doctest::Approx(rs.std[c]).epsilon(1e-9));
      }
      (void)out_bands;
    }
  }
}

TEST_CASE("identity cases") {
  AfsConfig cfg;
  const auto one = random_pool(1, 3);
  auto r1 = afs_refine(one, cfg);
  CHECK(r1.identity);
  CHECK(r1.refined == one.particles[0]);

  const auto pool = random_pool(4, 4);
  cfg.enabled = false;
  const auto r2 = afs_refine(pool, cfg);
  CHECK(r2.identity);
  CHECK(r2.refined == pool.particles[select_best(pool.rewards)]);

  // A pool of identical particles is a fixed point.
  ParticlePool same;
  const auto base = random_pool(1, 5).particles[0];
  for (int k = 0; k < 4; ++k) {
    same.particles.push_back(base);
    same.clean.push_back(base);
    same.rewards.push_back(0.1 * k);
  }
  cfg.enabled = true;
  const auto r3 = afs_refine(same, cfg);
  CHECK(max_abs_difference(r3.refined, base) < 1e-12);
  CHECK(r3.mean_shift < 1e-12);
  CHECK(r3.std_ratio == doctest::Approx(1.0));
}

TEST_CASE("pool and config validation") {
  ParticlePool bad = random_pool(3, 6);
  bad.rewards.pop_back();
  CHECK_THROWS_AS(afs_refine(bad, AfsConfig{}), InvalidArgument);
  bad = random_pool(3, 6);
  bad.rewards[1] = std::nan("");
  CHECK_THROWS_AS(afs_refine(bad, AfsConfig{}), InvalidArgument);
  CHECK_THROWS_AS(afs_refine(ParticlePool{}, AfsConfig{}), InvalidArgument);
  AfsConfig cfg;
  cfg.neighbors = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = AfsConfig{};
  cfg.kernel_size = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
