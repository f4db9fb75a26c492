#pragma once

#include <cstddef>
#include <vector>

#include "choroid/fovea.hpp"
#include "choroid/raster.hpp"

namespace choroid {

/// Sub-pixel boundary row per column. Pixel centres sit on integer rows, so
/// the top edge of pixel r is r - 0.5 and the bottom edge r + 0.5.
struct BoundaryTrace {
  std::vector<double> rows;
  std::vector<bool> valid;

  std::size_t size() const noexcept { return rows.size(); }
};

struct ChoroidBoundaries {
  BoundaryTrace rpe_c;  // upper (retinal pigment epithelium / choroid)
  BoundaryTrace c_s;    // lower (choroid / sclera)
};

/// Top edge of the first and bottom edge of the last region pixel per column.
/// Throws kEmptyRegion for an empty mask.
ChoroidBoundaries extract_boundaries(const BinaryMask& region);

/// Direction in image coordinates: x along columns, y along rows (down).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr std::size_t kDefaultTangentHalfWindow = 15;

/// Unit tangent of the least-squares line row = a + b * col fitted to the
/// valid samples in [column - half_window, column + half_window]; always
/// oriented towards increasing column. Throws kInsufficientSupport if fewer
/// than 3 valid samples fall in the window.
Vec2 local_tangent(const BoundaryTrace& trace, std::size_t column,
                   std::size_t half_window = kDefaultTangentHalfWindow);

/// Perpendicular to `tangent`, oriented towards increasing row.
inline Vec2 downward_normal(Vec2 tangent) {
  Vec2 n{-tangent.y, tangent.x};
  if (n.y < 0.0 || (n.y == 0.0 && n.x < 0.0)) n = {-n.x, -n.y};
  return n;
}

inline constexpr double kRoiHalfWidthUm = 3000.0;

/// Fovea-centred region of interest, inclusive column range.
struct RoiSpec {
  long centre_column = 0;
  double half_width_um = kRoiHalfWidthUm;
  long lo = 0;
  long hi = 0;
  bool clipped = false;
};

/// ROI of +-round(half_width_um / microns_per_px_x) columns around the fovea
/// (or the middle column for volume scans), clipped to the image. Throws
/// kNoFoveaRoi for peripapillary scans and kMissingFovea when a fovea-centred
/// scan has no fovea.
RoiSpec build_roi(const std::optional<FoveaLocation>& fovea, const ScanMeta& meta,
                  std::size_t image_width, double half_width_um = kRoiHalfWidthUm);

}  // namespace choroid
