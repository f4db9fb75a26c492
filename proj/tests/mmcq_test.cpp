#include <map>
#include <stdexcept>

#include <gtest/gtest.h>

#include "choroid/enhance.hpp"
#include "choroid/mmcq.hpp"
#include "choroid/phantom.hpp"
#include "test_util.hpp"

using namespace choroid;

namespace {

const SuiteMember& member(const std::string& name) {
  static const auto suite = standard_suite(3);
  for (const auto& m : suite)
    if (m.spec.name == name) return m;
  throw std::runtime_error("no member " + name);
}

const PhantomRender& rendered(const std::string& name) {
  static std::map<std::string, PhantomRender> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, render(member(name).spec)).first;
  return it->second;
}

Image stripes(std::size_t n, std::size_t width, float dark, float bright) {
  Image img(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) img(r, c) = (r / width) % 2 == 0 ? dark : bright;
  return img;
}

}  // namespace

TEST(MmcqConfig, Validation) {
  MmcqConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.dark_clusters = cfg.global_clusters;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.scales = {};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.scales = {4};
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.vote_threshold = 26;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EnhanceMultiscale, ConstantRegionStaysConstant) {
  const Image img(40, 50, 0.43f);
  BinaryMask region = testutil::band(40, 50, 5, 35);
  const auto out = enhance_multiscale(img, region, {});
  EXPECT_EQ(out, img);
}

TEST(EnhanceMultiscale, SingleLevelPatchIsConstant) {
  Image img(64, 64);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c) img(r, c) = c < 32 ? 0.2f : 0.8f;
  const BinaryMask region(64, 64, 1);
  MmcqConfig cfg;
  cfg.scales = {16};
  const auto out = enhance_multiscale(img, region, cfg);
  // Columns whose every covering patch lies within one half.
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 16; ++c) ASSERT_EQ(out(r, c), 0.2f);
    for (std::size_t c = 48; c < 64; ++c) ASSERT_EQ(out(r, c), 0.8f);
  }
}

TEST(EnhanceMultiscale, PixelsOutsideRegionPassThrough) {
  const Image img = testutil::dyadic_noise(60, 70, 2);
  const BinaryMask region = testutil::band(60, 70, 20, 45);
  const auto out = enhance_multiscale(img, region, {});
  for (std::size_t r = 0; r < 60; ++r)
    for (std::size_t c = 0; c < 70; ++c)
      if (!region(r, c)) ASSERT_EQ(out(r, c), img(r, c));
}

TEST(EnhanceMultiscale, VesselContrastDoesNotDecrease) {
  const auto& p = rendered("flat_vessels");
  const auto out = enhance_multiscale(p.image, p.region, {});
  auto contrast = [&](const Image& img) {
    double sv = 0, sb = 0;
    std::size_t nv = 0, nb = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (!p.region.pixels()[i]) continue;
      if (p.vessel.pixels()[i]) sv += img.pixels()[i], ++nv;
      else sb += img.pixels()[i], ++nb;
    }
    return sb / nb - sv / nv;
  };
  EXPECT_GE(contrast(out), contrast(p.image));
}

TEST(SegmentOnce, TwoLevelsWithTwoClusters) {
  const Image img = stripes(64, 4, 0.2f, 0.8f);
  const BinaryMask region(64, 64, 1);
  MmcqConfig cfg;
  cfg.scales = {16};
  cfg.global_clusters = 2;
  cfg.dark_clusters = 1;
  const auto vessel = segment_once(img, region, cfg);
  for (std::size_t i = 0; i < img.size(); ++i) {
    ASSERT_EQ(vessel.pixels()[i], img.pixels()[i] == 0.2f ? 1 : 0) << i;
  }
}

TEST(SegmentOnce, PhantomVesselFractionIsPlausible) {
  const auto& p = rendered("flat_vessels");
  const auto vessel = segment_once(p.image, p.region, {});
  const double frac = static_cast<double>(count(vessel)) / static_cast<double>(count(p.region));
  EXPECT_GE(frac, 0.25);
  EXPECT_LE(frac, 0.55);
}

TEST(SegmentEnsemble, MatchesIndependentRecount) {
  for (const char* name : {"flat_vessels", "wavy_thin"}) {
    const auto& p = rendered(name);
    const MmcqConfig cfg;
    const auto ens = segment_ensemble(p.image, p.region, cfg);

    const auto grid = build_variant_grid(p.image);
    std::vector<int> votes(p.image.size(), 0);
    for (const auto& v : grid.variants) {
      const auto once = segment_once(v, p.region, cfg);
      for (std::size_t i = 0; i < votes.size(); ++i) votes[i] += once.pixels()[i];
    }
    for (std::size_t i = 0; i < votes.size(); ++i) {
      ASSERT_EQ(ens.votes.votes.pixels()[i], votes[i]) << name << " " << i;
      ASSERT_EQ(ens.vessel.pixels()[i], votes[i] >= 15 ? 1 : 0);
    }
  }
}

TEST(SegmentEnsemble, InvariantsOnPhantom) {
  const auto& p = rendered("sinusoid_mid");
  const auto a = segment_ensemble(p.image, p.region);
  const auto b = segment_ensemble(p.image, p.region);
  EXPECT_EQ(a.votes.votes, b.votes.votes);
  for (std::size_t i = 0; i < p.region.size(); ++i) {
    ASSERT_LE(a.votes.votes.pixels()[i], 25);
    if (!p.region.pixels()[i]) {
      ASSERT_EQ(a.votes.votes.pixels()[i], 0);
      ASSERT_EQ(a.vessel.pixels()[i], 0);
    }
  }
  std::size_t prev = count(votes_to_mask(a.votes, 1));
  for (std::size_t t = 2; t <= 25; ++t) {
    const auto mask = votes_to_mask(a.votes, t);
    ASSERT_LE(count(mask), prev);
    prev = count(mask);
  }
}

TEST(VotesToMask, FifteenIsVesselFourteenIsNot) {
  VesselVoteMap votes{Raster<std::uint8_t>(1, 4)};
  votes.votes(0, 0) = 14;
  votes.votes(0, 1) = 15;
  votes.votes(0, 2) = 25;
  votes.votes(0, 3) = 0;
  const auto mask = votes_to_mask(votes, MmcqConfig{}.vote_threshold);
  EXPECT_EQ(mask(0, 0), 0);
  EXPECT_EQ(mask(0, 1), 1);
  EXPECT_EQ(mask(0, 2), 1);
  EXPECT_EQ(mask(0, 3), 0);
  const auto prob = vote_fraction(votes);
  EXPECT_FLOAT_EQ(prob(0, 1), 15.0f / 25.0f);
}

TEST(SegmentEnsemble, EmptyRegionThrows) {
  const Image img = testutil::dyadic_noise(20, 20, 1);
  try {
    segment_ensemble(img, BinaryMask(20, 20));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyRegion);
  }
}
