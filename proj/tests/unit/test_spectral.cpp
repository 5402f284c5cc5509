#include <doctest.h>

#include <cmath>

#include "iafs/error.hpp"
#include "iafs/spectral.hpp"
#include "oracles.hpp"

using namespace iafs;

namespace {

ImageTensor noise(std::uint64_t seed, Shape s) {
  Rng r(seed);
  return sample_standard_normal(r, s);
}

}  // namespace

TEST_CASE("dft2 matches the naive DFT") {
  for (Shape s : {Shape{1, 8, 8}, Shape{2, 6, 10}, Shape{1, 7, 5}}) {
    const auto x = noise(11, s);
    const auto f = dft2(x);
    for (std::size_t c = 0; c < s.channels; ++c) {
      const auto ref = oracle::dft_plane(x, c);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        REQUIRE(std::abs(f.plane(c)[i] - ref[i]) < 1e-9);
      }
    }
  }
}

TEST_CASE("constant plane has only DC") {
  const ImageTensor x({1, 6, 8}, 0.75);
  const auto f = dft2(x);
  CHECK(std::abs(f.at(0, 0, 0) - std::complex<double>(0.75 * 48, 0)) < 1e-12);
  for (std::size_t i = 1; i < f.size(); ++i) CHECK(std::abs(f.values()[i]) < 1e-12);
}

TEST_CASE("cosine maps to two conjugate bins") {
  const std::size_t h = 8, w = 16, k = 3;
  ImageTensor x({1, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t xx = 0; xx < w; ++xx) x.at(0, y, xx) = std::cos(2 * M_PI * k * xx / w);
  const auto f = dft2(x);
  CHECK(std::abs(f.at(0, 0, k) - std::complex<double>(h * w / 2.0, 0)) < 1e-9);
  CHECK(std::abs(f.at(0, 0, w - k) - std::complex<double>(h * w / 2.0, 0)) < 1e-9);
  double rest = 0;
  for (std::size_t ky = 0; ky < h; ++ky)
    for (std::size_t kx = 0; kx < w; ++kx)
      if (!(ky == 0 && (kx == k || kx == w - k))) rest += std::abs(f.at(0, ky, kx));
  CHECK(rest < 1e-8);
}

TEST_CASE("Parseval and round trip") {
  const auto x = noise(5, {3, 16, 12});
  const auto f = dft2(x);
  double e = 0;
  for (auto v : f.values()) e += std::norm(v);
  CHECK(std::abs(dot(x, x) - e / (16 * 12)) < 1e-6 * dot(x, x));
  const auto back = idft2(f);
  CHECK(max_abs_difference(back.image, x) < 1e-6);
  CHECK(back.max_imag_residue < 1e-9);
}

TEST_CASE("DC-only spectrum inverts to a constant image") {
  ComplexTensor s({1, 4, 5});
  s.at(0, 0, 0) = 20.0;
  const auto x = idft2(s).image;
  for (double v : x.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-Hermitian spectrum is reported") {
  ComplexTensor s({1, 4, 4});
  s.at(0, 0, 1) = {5.0, 0.0};
  CHECK_THROWS_AS(idft2(s), NumericalError);
}

TEST_CASE("symmetric masks keep images real") {
  const auto x = noise(2, {2, 16, 16});
  for (const auto& m : {FrequencyMask::ideal_lowpass(16, 16, 3.0),
                        FrequencyMask::gaussian_lowpass(16, 16, 2.5),
                        FrequencyMask::ideal_highpass(16, 16, 5.0)}) {
    CHECK(idft2(apply_mask(dft2(x), m)).max_imag_residue < 1e-8);
  }
}

TEST_CASE("mask identities") {
  const auto x = noise(8, {1, 8, 8});
  const auto f = dft2(x);
  const auto ones = FrequencyMask::ideal_lowpass(8, 8, 100.0);
  const auto zeros = FrequencyMask::ideal_highpass(8, 8, 100.0);
  const auto fo = apply_mask(f, ones);
  const auto fz = apply_mask(f, zeros);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(fo.values()[i] == f.values()[i]);
    CHECK(fz.values()[i] == std::complex<double>(0, 0));
  }
  for (double r : {0.5, 2.0, 3.3}) {
    const auto low = FrequencyMask::ideal_lowpass(8, 8, r);
    const auto sum = apply_mask(f, low) + apply_mask(f, low.complement());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(sum.values()[i] == f.values()[i]);
  }
  CHECK(default_cutoff_radius(64, 32) == 4.0);
}

TEST_CASE("frequency radius helpers") {
  CHECK(signed_frequency(3, 8) == 3);
  CHECK(signed_frequency(4, 8) == 4);
  CHECK(signed_frequency(5, 8) == -3);
  CHECK(frequency_radius(0, 0, 8, 8) == 0.0);
  CHECK(frequency_radius(3, 4, 8, 8) == doctest::Approx(5.0));
  CHECK(frequency_radius(7, 0, 8, 8) == doctest::Approx(1.0));
}

TEST_CASE("gaussian split of constant and impulse") {
  const ImageTensor c({2, 12, 12}, 0.3);
  const auto s = gaussian_split(c, 9, 1.0);
  CHECK(max_abs_difference(s.low, c) < 1e-12);
  CHECK(l2_norm(s.high) < 1e-12);

  ImageTensor impulse({1, 21, 21}, 0.0);
  impulse.at(0, 10, 10) = 1.0;
  const auto low = gaussian_blur(impulse, 9, 1.0);
  double total = 0;
  for (int dy = -4; dy <= 4; ++dy) {
    for (int dx = -4; dx <= 4; ++dx) {
      const double g = std::exp(-(dx * dx + dy * dy) / 2.0);
      total += g;
    }
  }
  for (int dy = -10; dy <= 10; ++dy) {
    for (int dx = -10; dx <= 10; ++dx) {
      const double expect =
          (std::abs(dy) <= 4 && std::abs(dx) <= 4) ? std::exp(-(dx * dx + dy * dy) / 2.0) / total : 0.0;
      REQUIRE(low.at(0, 10 + dy, 10 + dx) == doctest::Approx(expect).epsilon(1e-12).scale(1e-15));
    }
  }
}

TEST_CASE("spatial split reconstructs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = noise(seed, {3, 13, 17});
    const auto s = gaussian_split(x, 9, 1.0);
    CHECK(max_abs_difference(s.low + s.high, x) < 1e-12);
  }
}

TEST_CASE("kernel and reflect padding") {
  const auto k = gaussian_kernel_1d(9, 1.0);
  double s = 0;
  for (double v : k) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k[0] == doctest::Approx(k[8]));
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK_THROWS_AS(gaussian_kernel_1d(8, 1.0), InvalidArgument);
}

TEST_CASE("adain contract") {
  const auto src = noise(1, {3, 10, 10});
  auto ref = noise(2, {3, 10, 10}) * 0.3;
  ref += 0.5;
  const auto out = adain(src, ref);
  for (std::size_t c = 0; c < 3; ++c) {
    double mo, so, mr, sr;
    oracle::channel_moments(out, c, mo, so);
    oracle::channel_moments(ref, c, mr, sr);
    CHECK(std::abs(mo - mr) < 1e-9);
    CHECK(std::abs(so - sr) < 1e-9);
  }
  CHECK(max_abs_difference(adain(out, ref), out) < 1e-9);
  CHECK(max_abs_difference(adain(ref, ref), ref) < 1e-9);

  ImageTensor flat({3, 10, 10}, 0.2);
  const auto f = adain(flat, ref);
  const auto rs = channel_stats(ref);
  for (std::size_t c = 0; c < 3; ++c)
    for (double v : f.plane(c)) CHECK(v == doctest::Approx(rs.mean[c]));
}

TEST_CASE("rapsd of constant image") {
  const auto p = rapsd(ImageTensor({1, 16, 16}, 2.0));
  CHECK(p.power[0] > 0);
  for (std::size_t r = 1; r < p.bins(); ++r) CHECK(p.power[r] < 1e-20);
}

TEST_CASE("rapsd energy bookkeeping") {
  const auto x = noise(3, {2, 16, 16});
  const auto p = rapsd(x);
  double e = 0;
  for (auto v : dft2(x).values()) e += std::norm(v);
  CHECK(p.total_energy() == doctest::Approx(e).epsilon(1e-10));
}

TEST_CASE("white noise is flat and blurred noise decays") {
  std::vector<double> flat, blurred;
  for (int s = 0; s < 1000; ++s) {
    const auto x = noise(100 + s, {1, 16, 16});
    const auto p = rapsd(x);
    const auto q = rapsd(gaussian_blur(x, 9, 1.0));
    if (flat.empty()) {
      flat.assign(p.bins(), 0.0);
      blurred.assign(q.bins(), 0.0);
    }
    for (std::size_t r = 0; r < p.bins(); ++r) {
      flat[r] += p.power[r];
      blurred[r] += q.power[r];
    }
  }
  double lo = 1e300, hi = 0;
  for (std::size_t r = 1; r < flat.size(); ++r) {
    lo = std::min(lo, flat[r]);
    hi = std::max(hi, flat[r]);
  }
  CHECK(hi / lo < 1.25);
  CHECK(lo / hi > 0.8);
  std::vector<double> idx, val;
  for (std::size_t r = 1; r < blurred.size(); ++r) {
    idx.push_back(static_cast<double>(r));
    val.push_back(blurred[r]);
  }
  CHECK(oracle::spearman(idx, val) < -0.9);
}

TEST_CASE("gaussian characteristic function") {
  CHECK(gaussian_char_magnitude(0.7, 0.0) == 1.0);
  CHECK(gaussian_char_magnitude(1.0, 1.0) == doctest::Approx(0.60653065971));
  Rng r(77);
  const double sigma = 0.7;
  std::vector<std::vector<double>> xs(100000, std::vector<double>(2));
  for (auto& x : xs) {
    x[0] = 0.3 + sigma * r.normal();
    x[1] = -0.2 + sigma * r.normal();
  }
  for (double w : {0.5, 1.0, 2.0}) {
    const double emp = oracle::empirical_char_magnitude(xs, {w, 0.0});
    CHECK(std::abs(emp - gaussian_char_magnitude(sigma, w)) / gaussian_char_magnitude(sigma, w) < 0.02);
  }
}
