#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "mitoforge/error.hpp"
#include "mitoforge/fda.hpp"
#include "mitoforge/fft.hpp"
#include "oracles.hpp"

using namespace mitoforge;

namespace {

std::vector<double> channel(const ImageBuffer& img, std::size_t c) {
  std::vector<double> out(img.height() * img.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.data()[i * 3 + c];
  return out;
}

std::vector<double> channel(const std::vector<double>& interleaved, std::size_t c) {
  std::vector<double> out(interleaved.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = interleaved[i * 3 + c];
  return out;
}

double wrapped_phase_diff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  if (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return std::abs(d);
}

double mean_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("fft2d agrees with the direct DFT") {
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{8, 6}, {5, 7}, {4, 4}}) {
    std::mt19937_64 gen(rows * 31 + cols);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(rows * cols);
    for (double& v : f) v = u(gen);
    const auto fast = fft2d(f, rows, cols);
    const auto slow = oracle::naive_dft2d(f, rows, cols);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-10);
  }
}

TEST_CASE("forward + inverse round trip") {
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{32, 32}, {15, 21}, {224, 224}}) {
    const auto img = testing::random_image(rows, cols, rows + cols);
    const auto f = channel(img, 1);
    const auto back = ifft2d(fft2d(f, rows, cols), rows, cols);
    for (std::size_t i = 0; i < f.size(); ++i) {
      CHECK(std::abs(back[i].real() - f[i]) <= 1e-6);
      CHECK(std::abs(back[i].imag()) <= 1e-6);
    }
  }
}

TEST_CASE("window geometry") {
  SUBCASE("beta = 0 keeps only the DC bin") {
    const auto w = fda_window(32, 30, 0.0);
    std::size_t count = 0;
    for (std::size_t u = 0; u < 32; ++u)
      for (std::size_t v = 0; v < 30; ++v) count += in_fda_window(u, v, 32, 30, w);
    CHECK(count == 1);
    CHECK(in_fda_window(0, 0, 32, 30, w));
  }
  SUBCASE("beta = 1 covers the whole spectrum") {
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{32, 32}, {9, 14}, {7, 7}}) {
      const auto w = fda_window(r, c, 1.0);
      for (std::size_t u = 0; u < r; ++u)
        for (std::size_t v = 0; v < c; ++v) CHECK(in_fda_window(u, v, r, c, w));
    }
  }
  SUBCASE("half extents") {
    const auto w = fda_window(224, 200, 0.1);
    CHECK(w.half_rows == 11);
    CHECK(w.half_cols == 10);
    CHECK(signed_frequency(0, 8) == 0);
    CHECK(signed_frequency(3, 8) == 3);
    CHECK(signed_frequency(4, 8) == -4);
    CHECK(signed_frequency(7, 8) == -1);
    CHECK(signed_frequency(3, 7) == 3);
    CHECK(signed_frequency(4, 7) == -3);
  }
  SUBCASE("monotone in beta and closed under the conjugate mirror") {
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{32, 32}, {16, 11}}) {
      for (double b1 = 0.0; b1 <= 1.0; b1 += 0.05) {
        const auto w1 = fda_window(r, c, b1);
        const auto w2 = fda_window(r, c, std::min(1.0, b1 + 0.07));
        for (std::size_t u = 0; u < r; ++u)
          for (std::size_t v = 0; v < c; ++v) {
            if (!in_fda_window(u, v, r, c, w1)) continue;
            CHECK(in_fda_window(u, v, r, c, w2));
            CHECK(in_fda_window((r - u) % r, (c - v) % c, r, c, w1));
          }
      }
    }
  }
}

TEST_CASE("self transfer is the identity") {
  const auto img = testing::random_image(32, 32, 21);
  for (double beta : {0.0, 0.01, 0.1, 0.5, 1.0}) {
    const auto out = fda_transfer(img, img, {beta});
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(out.data()[i] - img.data()[i]) <= 1e-5);
  }
  const auto odd = testing::random_image(17, 23, 2);
  const auto out = fda_transfer(odd, odd, {0.3});
  for (std::size_t i = 0; i < odd.size(); ++i) CHECK(std::abs(out.data()[i] - odd.data()[i]) <= 1e-5);
}

TEST_CASE("beta = 1 takes the target amplitude and keeps the source phase") {
  // Narrow value ranges keep the output inside [0, 1], so clamping does not
  // disturb the spectrum being checked.
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto src = testing::random_image(32, 32, 100 + seed, 0.45, 0.55);
    const auto tgt = testing::random_image(32, 32, 200 + seed, 0.45, 0.55);
    const auto raw = fda_transfer_unclamped(src, tgt, {1.0});
    const auto out = fda_transfer(src, tgt, {1.0});
    for (std::size_t i = 0; i < raw.size(); ++i) REQUIRE(out.data()[i] == raw[i]);

    for (std::size_t c = 0; c < 3; ++c) {
      const auto o = oracle::naive_dft2d(channel(out, c), 32, 32);
      const auto s = oracle::naive_dft2d(channel(src, c), 32, 32);
      const auto t = oracle::naive_dft2d(channel(tgt, c), 32, 32);
      for (std::size_t i = 0; i < o.size(); ++i) {
        CHECK(std::abs(std::abs(o[i]) - std::abs(t[i])) <= 1e-4 * std::abs(t[i]));
        if (std::abs(o[i]) > 1e-6 && std::abs(s[i]) > 1e-6) {
          CHECK(wrapped_phase_diff(std::arg(o[i]), std::arg(s[i])) <= 1e-3);
        }
      }
    }
  }
}

TEST_CASE("phase is preserved for every beta") {
  const auto src = testing::random_image(16, 16, 7);
  const auto tgt = testing::random_image(16, 16, 8);
  for (double beta : {0.0, 0.2, 0.5, 0.8}) {
    const auto raw = fda_transfer_unclamped(src, tgt, {beta});
    const auto window = fda_window(16, 16, beta);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto o = oracle::naive_dft2d(channel(raw, c), 16, 16);
      const auto s = oracle::naive_dft2d(channel(src, c), 16, 16);
      const auto t = oracle::naive_dft2d(channel(tgt, c), 16, 16);
      for (std::size_t u = 0; u < 16; ++u)
        for (std::size_t v = 0; v < 16; ++v) {
          const std::size_t i = u * 16 + v;
          const double expected_amp =
              in_fda_window(u, v, 16, 16, window) ? std::abs(t[i]) : std::abs(s[i]);
          CHECK(std::abs(std::abs(o[i]) - expected_amp) <= 1e-8 * (1.0 + expected_amp));
          if (std::abs(o[i]) > 1e-6 && std::abs(s[i]) > 1e-6) {
            CHECK(wrapped_phase_diff(std::arg(o[i]), std::arg(s[i])) <= 1e-3);
          }
        }
    }
  }
}

TEST_CASE("beta = 0 matches the target mean") {
  const auto src = testing::random_image(24, 24, 31, 0.3, 0.5);
  const auto tgt = testing::random_image(24, 24, 32, 0.5, 0.7);
  const auto raw = fda_transfer_unclamped(src, tgt, {0.0});
  for (std::size_t c = 0; c < 3; ++c) {
    double mean_out = 0.0;
    double mean_tgt = 0.0;
    for (std::size_t i = 0; i < 24 * 24; ++i) {
      mean_out += raw[i * 3 + c];
      mean_tgt += tgt.data()[i * 3 + c];
    }
    CHECK(mean_out == doctest::Approx(mean_tgt).epsilon(1e-12));
  }
}

TEST_CASE("deviation from the source grows with beta on average") {
  const std::vector<double> betas{0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  std::vector<double> avg(betas.size(), 0.0);
  for (std::uint64_t pair = 0; pair < 100; ++pair) {
    const auto src = testing::random_image(16, 16, 1000 + pair);
    const auto tgt = testing::random_image(16, 16, 5000 + pair);
    for (std::size_t b = 0; b < betas.size(); ++b) {
      avg[b] += mean_abs_diff(fda_transfer(src, tgt, {betas[b]}), src) / 100.0;
    }
  }
  for (std::size_t b = 1; b < betas.size(); ++b) CHECK(avg[b] >= avg[b - 1]);
}

TEST_CASE("target is fitted to the source shape") {
  const auto src = testing::random_image(32, 32, 1);
  const auto tgt = testing::random_image(48, 64, 2);
  const auto out = fda_transfer(src, tgt, {0.1});
  CHECK(out.height() == 32);
  CHECK(out.width() == 32);
  const auto direct = fda_transfer(src, resize_pad(tgt, 32), {0.1});
  CHECK(out == direct);
}

TEST_CASE("invalid beta") {
  const auto img = testing::random_image(8, 8, 1);
  CHECK_THROWS_AS(fda_transfer(img, img, {-0.01}), Error);
  CHECK_THROWS_AS(fda_transfer(img, img, {1.01}), Error);
  CHECK_THROWS_AS(fda_transfer(ImageBuffer(), img, {0.1}), Error);
}
