#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "choroid/raster.hpp"

namespace choroid {

/// Result of 1-D median-cut quantisation. Cluster indices are ordered by
/// ascending mean, so index 0 is always the darkest cluster.
struct IntensityClusters {
  std::size_t cluster_count = 0;
  std::vector<std::uint32_t> assignment;  // one entry per input value
  std::vector<double> cluster_means;      // strictly increasing
};

/// Median-cut clustering of scalar intensities. Repeatedly splits the bucket
/// with the widest value range at its (lower) median until `k` buckets exist
/// or nothing is splittable. Values equal to the median go to the lower bucket
/// unless that would leave the upper bucket empty, in which case the median's
/// ties move up instead. Throws kEmptyInput on an empty span.
IntensityClusters median_cut(std::span<const float> values, std::size_t k);

/// 256-bin CDF equalisation: v -> P(X <= bin(v)). A raster whose values all
/// fall in one bin is returned unchanged.
Image hist_equalize(const Image& img);

struct GammaResult {
  Image image;
  double gamma = 1.0;
};

inline constexpr double kGammaMin = 0.05;
inline constexpr double kGammaMax = 20.0;

/// Finds gamma in [0.05, 20] by bisection such that mean(img^gamma) hits
/// `target_mean`. Throws kUnreachableTarget if no gamma in range reaches it
/// within 1e-3.
GammaResult adjust_gamma_to_mean(const Image& img, double target_mean);

/// clamp(mean + factor * (v - mean), 0, 1) with the image mean as pivot.
Image adjust_contrast(const Image& img, double factor);

struct VariantGrid {
  std::array<double, 5> target_means{};
  std::array<double, 5> gammas{};
  std::array<double, 5> contrasts{};
  /// 25 variants, index = gamma_index * 5 + contrast_index.
  std::vector<Image> variants;
};

/// Mean-brightness targets linspace(0.2, 0.5, 5) crossed with contrast
/// factors linspace(0.5, 3, 5).
VariantGrid build_variant_grid(const Image& img);

namespace detail {

/// Half-open [begin, end) ranges over an ascending-sorted buffer.
using Buckets = std::vector<std::pair<std::size_t, std::size_t>>;

/// Median-cut over already sorted values; returns buckets in value order.
Buckets median_cut_sorted(std::span<const float> sorted, std::size_t k);

/// Equalised value for each bucket when every member is first replaced by
/// its bucket mean. Fills `out` with one value per bucket.
void quantize_equalize(std::span<const float> sorted, const Buckets& buckets,
                       std::vector<float>& out);

inline std::size_t equalize_bin(double v) {
  const auto bin = static_cast<long>(v * 256.0);
  return static_cast<std::size_t>(bin < 0 ? 0 : (bin > 255 ? 255 : bin));
}

}  // namespace detail

}  // namespace choroid
