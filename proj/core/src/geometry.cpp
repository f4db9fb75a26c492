#include "choroid/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace choroid {

ChoroidBoundaries extract_boundaries(const BinaryMask& region) {
  const std::size_t cols = region.cols();
  ChoroidBoundaries b;
  b.rpe_c.rows.assign(cols, 0.0);
  b.rpe_c.valid.assign(cols, false);
  b.c_s.rows.assign(cols, 0.0);
  b.c_s.valid.assign(cols, false);

  std::vector<long> first(cols, -1), last(cols, -1);
  for (std::size_t r = 0; r < region.rows(); ++r) {
    const auto row = region.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c]) continue;
      if (first[c] < 0) first[c] = static_cast<long>(r);
      last[c] = static_cast<long>(r);
    }
  }
  bool any = false;
  for (std::size_t c = 0; c < cols; ++c) {
    if (first[c] < 0) continue;
    any = true;
    b.rpe_c.rows[c] = static_cast<double>(first[c]) - 0.5;
    b.c_s.rows[c] = static_cast<double>(last[c]) + 0.5;
    b.rpe_c.valid[c] = true;
    b.c_s.valid[c] = true;
  }
  if (!any) throw Error(ErrorCode::kEmptyRegion, "region mask has no pixels");
  return b;
}

Vec2 local_tangent(const BoundaryTrace& trace, std::size_t column, std::size_t half_window) {
  const long n_cols = static_cast<long>(trace.size());
  const long centre = static_cast<long>(column);
  const long w = static_cast<long>(half_window);
  const long lo = std::max(0L, centre - w);
  const long hi = std::min(n_cols - 1, centre + w);

  // Centre x on the query column for conditioning.
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (long c = lo; c <= hi; ++c) {
    if (!trace.valid[static_cast<std::size_t>(c)]) continue;
    const double x = static_cast<double>(c - centre);
    const double y = trace.rows[static_cast<std::size_t>(c)];
    n += 1.0;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (n < 3.0) {
    throw Error(ErrorCode::kInsufficientSupport,
                "fewer than 3 valid boundary samples around column " + std::to_string(column));
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double norm = std::hypot(1.0, slope);
  return {1.0 / norm, slope / norm};
}

RoiSpec build_roi(const std::optional<FoveaLocation>& fovea, const ScanMeta& meta,
                  std::size_t image_width, double half_width_um) {
  meta.pixel_scale.validate();
  RoiSpec roi;
  roi.half_width_um = half_width_um;
  if (meta.scan_type == ScanType::kPeripapillary) {
    throw Error(ErrorCode::kNoFoveaRoi, "peripapillary scans have no fovea-centred ROI");
  }
  if (meta.scan_type == ScanType::kVolume) {
    roi.centre_column = static_cast<long>(image_width / 2);
  } else {
    if (!fovea) throw Error(ErrorCode::kMissingFovea, "fovea-centred scan without a fovea");
    roi.centre_column = fovea->column;
  }
  const long width = static_cast<long>(image_width);
  if (roi.centre_column < 0 || roi.centre_column >= width) {
    throw Error(ErrorCode::kOutOfBounds, "ROI centre outside the image");
  }
  const long half = std::lround(half_width_um / meta.pixel_scale.microns_per_px_x);
  roi.lo = roi.centre_column - half;
  roi.hi = roi.centre_column + half;
  if (roi.lo < 0) {
    roi.lo = 0;
    roi.clipped = true;
  }
  if (roi.hi > width - 1) {
    roi.hi = width - 1;
    roi.clipped = true;
  }
  return roi;
}

}  // namespace choroid
