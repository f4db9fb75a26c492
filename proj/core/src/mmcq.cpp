#include "choroid/mmcq.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "choroid/enhance.hpp"

namespace choroid {

void MmcqConfig::validate() const {
  if (scales.empty()) throw Error(ErrorCode::kInvalidConfig, "mmcq needs at least one scale");
  for (auto s : scales) {
    if (s < 8) throw Error(ErrorCode::kInvalidConfig, "mmcq scales must be >= 8 px");
  }
  if (clusters_per_patch < 1) throw Error(ErrorCode::kInvalidConfig, "clusters_per_patch < 1");
  if (dark_clusters < 1 || dark_clusters >= global_clusters) {
    throw Error(ErrorCode::kInvalidConfig, "need 1 <= dark_clusters < global_clusters");
  }
  if (vote_threshold < 1 || vote_threshold > kVariantCount) {
    throw Error(ErrorCode::kInvalidConfig, "vote_threshold must be in [1, 25]");
  }
}

namespace {

struct Box {
  std::size_t r0 = 0, c0 = 0, rows = 0, cols = 0;
};

Box bounding_box(const BinaryMask& region) {
  std::size_t r_min = region.rows(), r_max = 0, c_min = region.cols(), c_max = 0;
  bool any = false;
  for (std::size_t r = 0; r < region.rows(); ++r) {
    const auto row = region.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c]) continue;
      any = true;
      r_min = std::min(r_min, r);
      r_max = std::max(r_max, r);
      c_min = std::min(c_min, c);
      c_max = std::max(c_max, c);
    }
  }
  if (!any) throw Error(ErrorCode::kEmptyRegion, "region mask has no pixels");
  return {r_min, c_min, r_max - r_min + 1, c_max - c_min + 1};
}

/// Patch origins along one axis: half-overlapping, last patch flush with the end.
std::vector<std::size_t> patch_starts(std::size_t extent, std::size_t patch) {
  std::vector<std::size_t> starts;
  const std::size_t stride = std::max<std::size_t>(1, patch / 2);
  for (std::size_t p = 0;; p += stride) {
    if (p + patch >= extent) {
      starts.push_back(extent - patch);
      break;
    }
    starts.push_back(p);
  }
  return starts;
}

// Non-negative floats order the same as their bit patterns, so value and
// pixel index pack into one sortable key.
inline std::uint64_t sort_key(float v, std::uint32_t idx) {
  return (static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(v)) << 32) | idx;
}
inline float key_value(std::uint64_t key) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(key >> 32));
}
inline std::uint32_t key_index(std::uint64_t key) { return static_cast<std::uint32_t>(key); }

/// Sorted (value, index) keys for every region pixel of `img` in `box`.
void collect_sorted(const Image& img, const BinaryMask& region, std::size_t r0, std::size_t c0,
                    std::size_t rows, std::size_t cols, std::vector<std::uint64_t>& keys) {
  keys.clear();
  for (std::size_t r = r0; r < r0 + rows; ++r) {
    const auto mrow = region.row(r);
    const auto irow = img.row(r);
    for (std::size_t c = c0; c < c0 + cols; ++c) {
      if (mrow[c]) {
        // +0.0f normalises a possible -0.0f
        keys.push_back(sort_key(irow[c] + 0.0f, static_cast<std::uint32_t>(r * img.cols() + c)));
      }
    }
  }
  std::sort(keys.begin(), keys.end());
}

/// Patch layout of the region's bounding box at every scale, with each
/// patch's region pixels (box-local indices) ordered by source intensity.
/// Any monotone non-decreasing remap of the source keeps that order, and
/// median-cut buckets are delimited by values, so one plan serves all 25
/// brightness/contrast variants.
struct PatchPlan {
  Box box;
  struct Scale {
    std::vector<std::uint32_t> order;    // concatenated per-patch pixel lists
    std::vector<std::size_t> offsets;    // patch p spans [offsets[p], offsets[p+1])
  };
  std::vector<Scale> scales;
};

PatchPlan make_plan(const Image& img, const BinaryMask& region, const MmcqConfig& cfg) {
  PatchPlan plan;
  plan.box = bounding_box(region);
  const Box& box = plan.box;
  std::vector<std::uint64_t> keys;
  for (const std::size_t scale : cfg.scales) {
    PatchPlan::Scale sp;
    sp.offsets.push_back(0);
    const std::size_t ph = std::min(scale, box.rows);
    const std::size_t pw = std::min(scale, box.cols);
    for (const std::size_t pr : patch_starts(box.rows, ph)) {
      for (const std::size_t pc : patch_starts(box.cols, pw)) {
        keys.clear();
        for (std::size_t r = pr; r < pr + ph; ++r) {
          const auto mrow = region.row(box.r0 + r);
          const auto irow = img.row(box.r0 + r);
          for (std::size_t c = pc; c < pc + pw; ++c) {
            if (mrow[box.c0 + c]) {
              keys.push_back(sort_key(irow[box.c0 + c] + 0.0f,
                                      static_cast<std::uint32_t>(r * box.cols + c)));
            }
          }
        }
        if (keys.empty()) continue;
        std::sort(keys.begin(), keys.end());
        for (auto k : keys) sp.order.push_back(key_index(k));
        sp.offsets.push_back(sp.order.size());
      }
    }
    plan.scales.push_back(std::move(sp));
  }
  return plan;
}

/// Enhances `img` using a plan whose orderings are valid for it. Returns
/// false (leaving `out` unspecified) if the ordering is violated.
bool enhance_with_plan(const Image& img, const BinaryMask& region, const PatchPlan& plan,
                       const MmcqConfig& cfg, Image& out) {
  const Box& box = plan.box;
  const std::size_t box_size = box.rows * box.cols;

  std::vector<float> local(box_size);
  for (std::size_t r = 0; r < box.rows; ++r) {
    const auto irow = img.row(box.r0 + r);
    std::copy(irow.begin() + static_cast<std::ptrdiff_t>(box.c0),
              irow.begin() + static_cast<std::ptrdiff_t>(box.c0 + box.cols),
              local.begin() + static_cast<std::ptrdiff_t>(r * box.cols));
  }

  std::vector<double> total(box_size, 0.0);
  std::vector<double> scale_sum(box_size);
  std::vector<std::uint16_t> scale_count(box_size);
  std::vector<float> sorted;
  std::vector<float> mapped;

  for (const auto& sp : plan.scales) {
    std::fill(scale_sum.begin(), scale_sum.end(), 0.0);
    std::fill(scale_count.begin(), scale_count.end(), 0);
    for (std::size_t p = 0; p + 1 < sp.offsets.size(); ++p) {
      const std::size_t b0 = sp.offsets[p];
      const std::size_t n = sp.offsets[p + 1] - b0;
      sorted.resize(n);
      for (std::size_t i = 0; i < n; ++i) sorted[i] = local[sp.order[b0 + i]] + 0.0f;
      for (std::size_t i = 1; i < n; ++i) {
        if (sorted[i] < sorted[i - 1]) return false;
      }
      const auto buckets = detail::median_cut_sorted(sorted, cfg.clusters_per_patch);
      detail::quantize_equalize(sorted, buckets, mapped);
      for (std::size_t b = 0; b < buckets.size(); ++b) {
        const double v = mapped[b];
        for (std::size_t j = buckets[b].first; j < buckets[b].second; ++j) {
          const std::uint32_t idx = sp.order[b0 + j];
          scale_sum[idx] += v;
          ++scale_count[idx];
        }
      }
    }
    for (std::size_t i = 0; i < box_size; ++i) {
      if (scale_count[i]) total[i] += scale_sum[i] / scale_count[i];
    }
  }

  out = img;
  const double n_scales = static_cast<double>(plan.scales.size());
  for (std::size_t r = 0; r < box.rows; ++r) {
    for (std::size_t c = 0; c < box.cols; ++c) {
      if (region(box.r0 + r, box.c0 + c)) {
        out(box.r0 + r, box.c0 + c) = static_cast<float>(total[r * box.cols + c] / n_scales);
      }
    }
  }
  return true;
}

BinaryMask classify(const Image& enhanced, const BinaryMask& region, const MmcqConfig& cfg) {
  std::vector<std::uint64_t> keys;
  collect_sorted(enhanced, region, 0, 0, enhanced.rows(), enhanced.cols(), keys);
  std::vector<float> sorted(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) sorted[i] = key_value(keys[i]);
  const auto buckets = detail::median_cut_sorted(sorted, cfg.global_clusters);

  std::size_t dark = cfg.dark_clusters;
  if (buckets.size() < cfg.global_clusters) dark = std::min(dark, buckets.size() - 1);

  BinaryMask vessel(enhanced.rows(), enhanced.cols());
  auto out = vessel.pixels();
  for (std::size_t b = 0; b < dark; ++b) {
    for (std::size_t j = buckets[b].first; j < buckets[b].second; ++j) out[key_index(keys[j])] = 1;
  }
  return vessel;
}

}  // namespace

Image enhance_multiscale(const Image& img, const BinaryMask& region, const MmcqConfig& cfg) {
  cfg.validate();
  require_same_shape(img, region, "image and region differ in shape");
  Image out;
  enhance_with_plan(img, region, make_plan(img, region, cfg), cfg, out);  // own plan: always ordered
  return out;
}

BinaryMask segment_once(const Image& img, const BinaryMask& region, const MmcqConfig& cfg) {
  return classify(enhance_multiscale(img, region, cfg), region, cfg);
}

EnsembleResult segment_ensemble(const Image& img, const BinaryMask& region,
                                const MmcqConfig& cfg) {
  cfg.validate();
  require_same_shape(img, region, "image and region differ in shape");
  if (count(region) == 0) throw Error(ErrorCode::kEmptyRegion, "region mask has no pixels");

  const VariantGrid grid = build_variant_grid(img);
  EnsembleResult result;
  result.votes.votes = Raster<std::uint8_t>(img.rows(), img.cols());
  auto votes = result.votes.votes.pixels();
  const PatchPlan plan = make_plan(img, region, cfg);
  Image enhanced;
  for (const Image& variant : grid.variants) {
    if (!enhance_with_plan(variant, region, plan, cfg, enhanced)) {
      enhanced = enhance_multiscale(variant, region, cfg);
    }
    const BinaryMask once = classify(enhanced, region, cfg);
    const auto labels = once.pixels();
    for (std::size_t i = 0; i < labels.size(); ++i) votes[i] += labels[i];
  }
  result.vessel = votes_to_mask(result.votes, cfg.vote_threshold);
  return result;
}

BinaryMask votes_to_mask(const VesselVoteMap& votes, std::size_t threshold) {
  BinaryMask mask(votes.votes.rows(), votes.votes.cols());
  auto out = mask.pixels();
  auto in = votes.votes.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] >= threshold ? 1 : 0;
  return mask;
}

ProbabilityMap vote_fraction(const VesselVoteMap& votes) {
  ProbabilityMap prob(votes.votes.rows(), votes.votes.cols());
  auto out = prob.pixels();
  auto in = votes.votes.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = static_cast<float>(in[i]) / static_cast<float>(kVariantCount);
  }
  return prob;
}

}  // namespace choroid
