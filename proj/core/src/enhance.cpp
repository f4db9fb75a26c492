#include "choroid/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace choroid {

namespace detail {

Buckets median_cut_sorted(std::span<const float> sorted, std::size_t k) {
  Buckets buckets;
  if (sorted.empty()) return buckets;
  buckets.emplace_back(0, sorted.size());
  while (buckets.size() < k) {
    // Widest range wins; ties go to the darker bucket.
    std::size_t pick = buckets.size();
    float widest = 0.0f;
    for (std::size_t i = 0; i < buckets.size(); ++i) {
      const auto [b, e] = buckets[i];
      const float range = sorted[e - 1] - sorted[b];
      if (range > widest) {
        widest = range;
        pick = i;
      }
    }
    if (pick == buckets.size()) break;

    const auto [b, e] = buckets[pick];
    const auto first = sorted.begin() + static_cast<std::ptrdiff_t>(b);
    const auto last = sorted.begin() + static_cast<std::ptrdiff_t>(e);
    const float median = sorted[b + (e - b - 1) / 2];
    auto split = std::upper_bound(first, last, median);
    if (split == last) split = std::lower_bound(first, last, median);
    const auto mid = static_cast<std::size_t>(split - sorted.begin());

    buckets[pick] = {b, mid};
    buckets.insert(buckets.begin() + static_cast<std::ptrdiff_t>(pick) + 1, {mid, e});
  }
  return buckets;
}

void quantize_equalize(std::span<const float> sorted, const Buckets& buckets,
                       std::vector<float>& out) {
  out.resize(buckets.size());
  std::array<std::size_t, 256> hist{};
  std::vector<std::size_t> bins(buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto [b, e] = buckets[i];
    double sum = 0.0;
    for (std::size_t j = b; j < e; ++j) sum += sorted[j];
    const double mean = sum / static_cast<double>(e - b);
    out[i] = static_cast<float>(mean);
    bins[i] = equalize_bin(mean);
    hist[bins[i]] += e - b;
  }
  if (std::all_of(bins.begin(), bins.end(), [&](std::size_t bin) { return bin == bins[0]; })) {
    return;  // single-bin: quantised values pass through
  }
  std::array<std::size_t, 256> cdf{};
  std::partial_sum(hist.begin(), hist.end(), cdf.begin());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(cdf[bins[i]]) / n);
  }
}

}  // namespace detail

IntensityClusters median_cut(std::span<const float> values, std::size_t k) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median_cut needs at least one value");
  if (k == 0) k = 1;

  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  std::vector<float> sorted(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = values[order[i]];

  const auto buckets = detail::median_cut_sorted(sorted, k);

  IntensityClusters out;
  out.cluster_count = buckets.size();
  out.assignment.resize(values.size());
  out.cluster_means.reserve(buckets.size());
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    const auto [b, e] = buckets[c];
    double sum = 0.0;
    for (std::size_t j = b; j < e; ++j) {
      sum += sorted[j];
      out.assignment[order[j]] = static_cast<std::uint32_t>(c);
    }
    out.cluster_means.push_back(sum / static_cast<double>(e - b));
  }
  return out;
}

Image hist_equalize(const Image& img) {
  validate_intensity(img);
  std::array<std::size_t, 256> hist{};
  for (float v : img.pixels()) ++hist[detail::equalize_bin(v)];
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](auto n) { return n > 0; });
  if (occupied <= 1) return img;

  std::array<std::size_t, 256> cdf{};
  std::partial_sum(hist.begin(), hist.end(), cdf.begin());
  const double n = static_cast<double>(img.size());
  Image out(img.rows(), img.cols());
  auto dst = out.pixels();
  auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(static_cast<double>(cdf[detail::equalize_bin(src[i])]) / n);
  }
  return out;
}

GammaResult adjust_gamma_to_mean(const Image& img, double target_mean) {
  validate_intensity(img);
  if (!(target_mean > 0.0 && target_mean < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target mean must lie in (0, 1)");
  }

  // The mean only depends on the multiset of values, so bisect over the
  // distinct levels (at most 256 / 65536 for images read from disk).
  std::vector<float> sorted(img.pixels().begin(), img.pixels().end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> levels;  // (value, count)
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    levels.emplace_back(sorted[i], static_cast<double>(j - i));
    i = j;
  }
  const double n = static_cast<double>(sorted.size());
  auto mean_at = [&](double gamma) {
    double sum = 0.0;
    for (const auto& [v, c] : levels) sum += c * std::pow(v, gamma);
    return sum / n;
  };

  constexpr double kTolerance = 1e-3;
  const double brightest = mean_at(kGammaMin);
  const double darkest = mean_at(kGammaMax);
  if (target_mean > brightest + kTolerance || target_mean < darkest - kTolerance) {
    throw Error(ErrorCode::kUnreachableTarget,
                "mean " + std::to_string(target_mean) + " unreachable for gamma in [0.05, 20]");
  }

  // mean(img^gamma) is non-increasing in gamma.
  double lo = kGammaMin, hi = kGammaMax;
  double gamma = 1.0;
  for (int iter = 0; iter < 60; ++iter) {
    gamma = 0.5 * (lo + hi);
    const double m = mean_at(gamma);
    if (m > target_mean) lo = gamma;
    else hi = gamma;
  }
  gamma = 0.5 * (lo + hi);
  if (std::abs(mean_at(gamma) - target_mean) > kTolerance) {
    throw Error(ErrorCode::kUnreachableTarget, "bisection did not reach the target mean");
  }

  GammaResult result{Image(img.rows(), img.cols()), gamma};
  auto dst = result.image.pixels();
  auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::pow(static_cast<double>(src[i]), gamma));
  }
  return result;
}

Image adjust_contrast(const Image& img, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "contrast factor must be > 0");
  double sum = 0.0;
  for (float v : img.pixels()) sum += v;
  const double mean = img.empty() ? 0.0 : sum / static_cast<double>(img.size());
  Image out(img.rows(), img.cols());
  auto dst = out.pixels();
  auto src = img.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = mean + factor * (static_cast<double>(src[i]) - mean);
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

VariantGrid build_variant_grid(const Image& img) {
  VariantGrid grid;
  for (std::size_t i = 0; i < 5; ++i) {
    grid.target_means[i] = 0.2 + 0.3 * static_cast<double>(i) / 4.0;
    grid.contrasts[i] = 0.5 + 2.5 * static_cast<double>(i) / 4.0;
  }
  grid.variants.reserve(25);
  for (std::size_t g = 0; g < 5; ++g) {
    auto bright = adjust_gamma_to_mean(img, grid.target_means[g]);
    grid.gammas[g] = bright.gamma;
    for (std::size_t c = 0; c < 5; ++c) {
      grid.variants.push_back(adjust_contrast(bright.image, grid.contrasts[c]));
    }
  }
  return grid;
}

}  // namespace choroid
