#include <gtest/gtest.h>

#include "choroid/fovea.hpp"

using namespace choroid;

TEST(EncodeFovea, TargetValues) {
  const auto t = encode_fovea_target({384, 300}, 768, 768);
  EXPECT_FLOAT_EQ(t(300, 384), 1.0f);
  EXPECT_FLOAT_EQ(t(310, 384), 0.95f);
  EXPECT_FLOAT_EQ(t(275, 384), 0.95f);
  EXPECT_FLOAT_EQ(t(274, 384), 0.01f);  // outside the 51-row window
  EXPECT_NEAR(t(300, 393), 0.05f, 1e-6);
  EXPECT_NEAR(t(300, 375), 0.05f, 1e-6);
  EXPECT_FLOAT_EQ(t(300, 394), 0.01f);
  EXPECT_FLOAT_EQ(t(0, 0), 0.01f);
  EXPECT_NEAR(t(320, 388), 0.95f - 0.4f, 1e-6);
}

TEST(EncodeFovea, WindowClippedAtBorder) {
  const auto t = encode_fovea_target({2, 3}, 100, 100);
  EXPECT_FLOAT_EQ(t(3, 2), 1.0f);
  EXPECT_FLOAT_EQ(t(0, 0), 0.95f - 0.2f);
}

TEST(EncodeFovea, Errors) {
  try {
    encode_fovea_target({10, std::nullopt}, 50, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingRow);
  }
  try {
    encode_fovea_target({50, 10}, 50, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfBounds);
  }
}

TEST(DecodeFovea, RoundTripAtCentre) {
  EXPECT_EQ(decode_fovea_column(encode_fovea_target({384, 400}, 768, 768)).column, 384);
}

TEST(DecodeFovea, RoundTripOverInteriorColumns) {
  for (long c = 10; c <= 757; ++c) {
    for (long row : {0L, 384L, 767L}) {
      ASSERT_EQ(decode_fovea_column(encode_fovea_target({c, row}, 768, 768)).column, c)
          << c << "," << row;
    }
  }
}

TEST(DecodeFovea, LonePeak) {
  ProbabilityMap m(50, 200, 0.0f);
  m(17, 100) = 1.0f;
  const auto d = decode_fovea_column(m);
  EXPECT_EQ(d.column, 100);
  EXPECT_DOUBLE_EQ(d.score, 11.0);
}

// The zero-padded triangle gives the 11-column-wide interior plateau of a
// uniform map the same score; the first plateau column wins. An all-zero map
// ties everywhere and decodes to column 0.
TEST(DecodeFovea, UniformAndZeroMaps) {
  EXPECT_EQ(decode_fovea_column(ProbabilityMap(10, 100, 0.5f)).column, 10);
  EXPECT_EQ(decode_fovea_column(ProbabilityMap(10, 100, 0.0f)).column, 0);
}

TEST(DecodeFovea, TranslationEquivariantAndScaleInvariant) {
  const auto base = encode_fovea_target({200, 50}, 100, 400);
  const long c0 = decode_fovea_column(base).column;
  for (long shift : {-150L, -7L, 1L, 33L, 150L}) {
    ProbabilityMap shifted(100, 400, 0.01f);
    for (std::size_t r = 0; r < 100; ++r)
      for (long c = 0; c < 400; ++c) {
        const long src = c - shift;
        if (src >= 0 && src < 400) shifted(r, static_cast<std::size_t>(c)) = base(r, static_cast<std::size_t>(src));
      }
    EXPECT_EQ(decode_fovea_column(shifted).column, c0 + shift);
  }
  ProbabilityMap scaled = base;
  for (auto& v : scaled.pixels()) v *= 0.37f;
  EXPECT_EQ(decode_fovea_column(scaled).column, c0);
}

TEST(ColumnError, Examples) {
  EXPECT_EQ(column_to_target_error(384, 384), 0);
  EXPECT_EQ(column_to_target_error(381, 384), 3);
  EXPECT_EQ(column_to_target_error(0, 767), 767);
}
