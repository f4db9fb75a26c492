#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "choroid/niblack.hpp"
#include "test_util.hpp"

using namespace choroid;

namespace {

// Direct per-pixel window statistics with edge replication. Values are
// multiples of 1/256, so the sums below are exact in integer units.
BinaryMask brute_force(const Image& img, const BinaryMask& region, std::size_t w, double k) {
  const long rows = static_cast<long>(img.rows()), cols = static_cast<long>(img.cols());
  const long h = static_cast<long>(w / 2);
  BinaryMask out(img.rows(), img.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      if (!region(r, c)) continue;
      long long s = 0, ss = 0;
      for (long dr = -h; dr <= h; ++dr) {
        for (long dc = -h; dc <= h; ++dc) {
          const long rr = std::clamp(r + dr, 0L, rows - 1);
          const long cc = std::clamp(c + dc, 0L, cols - 1);
          const auto u = std::lround(img(rr, cc) * 256.0f);
          s += u;
          ss += u * u;
        }
      }
      const long double n = static_cast<long double>(w * w);
      const long double mean = s / n / 256.0L;
      const long double var = (n * ss - static_cast<long double>(s) * s) / (n * n) / 65536.0L;
      const long double t = mean + k * std::sqrt(var);
      out(r, c) = img(r, c) < t ? 1 : 0;
    }
  }
  return out;
}

BinaryMask random_region(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BinaryMask m(rows, cols);
  for (auto& v : m.pixels()) v = rng() % 4 != 0;
  return m;
}

/// 3x3 image whose single window (centre pixel) has mean 0.5 and
/// population standard deviation 0.2, with the given centre value.
Image window_with_stats(float centre) {
  // Four corners a and four edges b; solve a + b and a^2 + b^2.
  const double rest_sum = 4.5 - centre;
  const double rest_sq = 9.0 * (0.04 + 0.25) - static_cast<double>(centre) * centre;
  const double p = rest_sum / 4.0, q = rest_sq / 4.0;  // a + b, a^2 + b^2
  const double d = std::sqrt(2.0 * q - p * p);
  const auto a = static_cast<float>((p + d) / 2.0), b = static_cast<float>((p - d) / 2.0);
  Image img(3, 3, b);
  img(0, 0) = img(0, 2) = img(2, 0) = img(2, 2) = a;
  img(1, 1) = centre;
  return img;
}

}  // namespace

TEST(Niblack, HandComputedThreshold) {
  BinaryMask centre_only(3, 3);
  centre_only(1, 1) = 1;
  const NiblackParams p{3, -0.05};  // threshold 0.5 - 0.05 * 0.2 = 0.49
  EXPECT_EQ(niblack_segment(window_with_stats(0.45f), centre_only, p)(1, 1), 1);
  EXPECT_EQ(niblack_segment(window_with_stats(0.50f), centre_only, p)(1, 1), 0);
}

TEST(Niblack, ConstantRegionHasNoVessels) {
  const Image img(40, 40, 0.37f);
  const BinaryMask region(40, 40, 1);
  EXPECT_EQ(count(niblack_segment(img, region)), 0u);
}

TEST(Niblack, ZeroKThresholdsAtLocalMean) {
  const Image img = testutil::dyadic_noise(32, 32, 4);
  const BinaryMask region(32, 32, 1);
  EXPECT_EQ(niblack_segment(img, region, {5, 0.0}), brute_force(img, region, 5, 0.0));
}

TEST(Niblack, MatchesBruteForce) {
  const Image img = testutil::dyadic_noise(64, 64, 17);
  const BinaryMask region = random_region(64, 64, 5);
  for (std::size_t w : {3u, 7u, 51u}) {
    for (double k : {-0.05, -0.5, 0.2}) {
      EXPECT_EQ(niblack_segment(img, region, {w, k}), brute_force(img, region, w, k))
          << "window " << w << " k " << k;
    }
  }
}

TEST(Niblack, OutputWithinRegionAndMonotoneInK) {
  const Image img = testutil::dyadic_noise(48, 56, 23);
  const BinaryMask region = random_region(48, 56, 9);
  std::size_t prev = SIZE_MAX;
  for (double k : {0.5, 0.1, 0.0, -0.05, -0.3, -1.0}) {
    const auto m = niblack_segment(img, region, {11, k});
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.pixels()[i]) ASSERT_TRUE(region.pixels()[i]);
    }
    ASSERT_LE(count(m), prev);
    prev = count(m);
  }
}

TEST(Niblack, RejectsBadWindows) {
  const Image img(10, 10, 0.5f);
  const BinaryMask region(10, 10, 1);
  for (std::size_t w : {0u, 1u, 2u, 50u}) {
    try {
      niblack_segment(img, region, {w, -0.05});
      FAIL() << w;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidWindow);
    }
  }
}
