#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "choroid/raster.hpp"

namespace choroid {

/// Multi-scale median cut quantisation (MMCQ) parameters.
struct MmcqConfig {
  std::vector<std::size_t> scales{32, 64, 128};  // square patch sizes, px
  std::size_t clusters_per_patch = 8;
  std::size_t global_clusters = 4;
  std::size_t dark_clusters = 2;  // darkest global clusters labelled vessel
  std::size_t vote_threshold = 15;  // out of 25 variants

  /// Throws kInvalidConfig when an invariant is violated.
  void validate() const;
};

inline constexpr std::size_t kVariantCount = 25;

/// Per-pixel count of variants (0..25) that labelled the pixel vessel.
struct VesselVoteMap {
  Raster<std::uint8_t> votes;
};

struct EnsembleResult {
  BinaryMask vessel;
  VesselVoteMap votes;
};

/// Patch-wise quantise-then-equalise at every scale, averaged over overlapping
/// (half-stride) patches and then over scales. Pixels outside `region` are
/// copied from `img`.
Image enhance_multiscale(const Image& img, const BinaryMask& region, const MmcqConfig& cfg);

/// One MMCQ pass: enhance, cluster the region globally, label the darkest
/// clusters as vessel. When fewer clusters than requested exist, at least the
/// brightest cluster stays non-vessel.
BinaryMask segment_once(const Image& img, const BinaryMask& region, const MmcqConfig& cfg);

/// Runs segment_once over the 25-variant brightness/contrast grid and keeps
/// pixels with votes >= cfg.vote_threshold.
EnsembleResult segment_ensemble(const Image& img, const BinaryMask& region,
                                const MmcqConfig& cfg = {});

/// Thresholds an existing vote map.
BinaryMask votes_to_mask(const VesselVoteMap& votes, std::size_t threshold);

/// votes / 25 as a probability map (used for soft vascular index and AUC).
ProbabilityMap vote_fraction(const VesselVoteMap& votes);

}  // namespace choroid
