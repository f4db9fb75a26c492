#include "choroid/metrics.hpp"

#include <cmath>
#include <limits>

#include "choroid/imagecore.hpp"

namespace choroid {

namespace {

/// Distance in pixels-of-ray-parameter from `origin` along `dir` to the first
/// crossing of the C-S polyline, or nullopt.
std::optional<double> ray_to_trace(const BoundaryTrace& trace, Vec2 origin, Vec2 dir) {
  const long cols = static_cast<long>(trace.size());
  constexpr double kEps = 1e-12;
  if (std::abs(dir.x) < kEps) {
    const long c = std::lround(origin.x);
    if (c < 0 || c >= cols || !trace.valid[static_cast<std::size_t>(c)]) return std::nullopt;
    const double t = (trace.rows[static_cast<std::size_t>(c)] - origin.y) / dir.y;
    if (t < 0.0) return std::nullopt;
    return t;
  }
  std::optional<double> best;
  for (long j = 0; j + 1 < cols; ++j) {
    const auto sj = static_cast<std::size_t>(j);
    if (!trace.valid[sj] || !trace.valid[sj + 1]) continue;
    const double y0 = trace.rows[sj];
    const double slope = trace.rows[sj + 1] - y0;
    // origin + t*dir == (j + u, y0 + u*slope)
    const double denom = dir.y - dir.x * slope;
    if (std::abs(denom) < kEps) continue;
    const double t = (y0 + (origin.x - static_cast<double>(j)) * slope - origin.y) / denom;
    if (t < 0.0) continue;
    const double u = origin.x + t * dir.x - static_cast<double>(j);
    if (u < -1e-9 || u > 1.0 + 1e-9) continue;
    if (!best || t < *best) best = t;
  }
  return best;
}

long count_in_roi(const BinaryMask& mask, const RoiSpec& roi) {
  long n = 0;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    const auto row = mask.row(r);
    for (long c = roi.lo; c <= roi.hi; ++c) n += row[static_cast<std::size_t>(c)] != 0;
  }
  return n;
}

void check_roi(const RoiSpec& roi, std::size_t cols) {
  if (roi.lo < 0 || roi.hi >= static_cast<long>(cols) || roi.lo > roi.hi) {
    throw Error(ErrorCode::kOutOfBounds, "ROI column range outside the image");
  }
}

double ratio(double vessel, double total, VesselIndexConvention convention) {
  if (total <= 0.0) throw Error(ErrorCode::kUndefinedIndex, "no region pixels inside the ROI");
  if (convention == VesselIndexConvention::kVesselToTotal) return vessel / total;
  const double rest = total - vessel;
  if (rest <= 0.0) throw Error(ErrorCode::kUndefinedIndex, "no non-vessel pixels inside the ROI");
  return vessel / rest;
}

}  // namespace

ThicknessResult thickness(const ChoroidBoundaries& bounds, const RoiSpec& roi,
                          const PixelScale& scale, std::size_t tangent_half_window) {
  scale.validate();
  check_roi(roi, bounds.rpe_c.size());
  ThicknessResult out;
  out.columns = {roi.lo, roi.centre_column, roi.hi};
  double sum = 0.0;
  int valid = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto col = static_cast<std::size_t>(out.columns[i]);
    out.failed[i] = true;
    if (!bounds.rpe_c.valid[col]) continue;
    Vec2 tangent;
    try {
      tangent = local_tangent(bounds.rpe_c, col, tangent_half_window);
    } catch (const Error&) {
      continue;
    }
    // Perpendicular in microns, then mapped back to pixel steps.
    const Vec2 normal_um = downward_normal({tangent.x * scale.microns_per_px_x,
                                            tangent.y * scale.microns_per_px_y});
    const Vec2 dir{normal_um.x / scale.microns_per_px_x, normal_um.y / scale.microns_per_px_y};
    const Vec2 origin{static_cast<double>(col), bounds.rpe_c.rows[col]};
    const auto t = ray_to_trace(bounds.c_s, origin, dir);
    if (!t) continue;
    const double um = *t * std::hypot(dir.x * scale.microns_per_px_x,
                                      dir.y * scale.microns_per_px_y);
    out.points_um[i] = um;
    out.failed[i] = false;
    sum += um;
    ++valid;
  }
  if (valid > 0) out.mean_um = sum / valid;
  return out;
}

ThicknessResult thickness(const BinaryMask& region, const RoiSpec& roi, const PixelScale& scale) {
  return thickness(extract_boundaries(region), roi, scale);
}

double area_mm2(const BinaryMask& region, const RoiSpec& roi, const PixelScale& scale) {
  scale.validate();
  check_roi(roi, region.cols());
  return static_cast<double>(count_in_roi(region, roi)) * scale.pixel_area_um2() / 1e6;
}

double vascular_index(const BinaryMask& region, const BinaryMask& vessel, const RoiSpec& roi,
                      VesselIndexConvention convention) {
  require_same_shape(region, vessel, "region and vessel masks differ in shape");
  check_roi(roi, region.cols());
  long total = 0, hits = 0;
  for (std::size_t r = 0; r < region.rows(); ++r) {
    const auto reg = region.row(r);
    const auto ves = vessel.row(r);
    for (long c = roi.lo; c <= roi.hi; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      if (!reg[sc]) continue;
      ++total;
      hits += ves[sc] != 0;
    }
  }
  return ratio(static_cast<double>(hits), static_cast<double>(total), convention);
}

double soft_vascular_index(const BinaryMask& region, const ProbabilityMap& vessel_prob,
                           const RoiSpec& roi, VesselIndexConvention convention) {
  require_same_shape(region, vessel_prob, "region mask and vessel map differ in shape");
  check_roi(roi, region.cols());
  long total = 0;
  double mass = 0.0;
  for (std::size_t r = 0; r < region.rows(); ++r) {
    const auto reg = region.row(r);
    const auto prob = vessel_prob.row(r);
    for (long c = roi.lo; c <= roi.hi; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      if (!reg[sc]) continue;
      ++total;
      mass += static_cast<double>(prob[sc]);
    }
  }
  return ratio(mass, static_cast<double>(total), convention);
}

MetricInputs inputs_from_probabilities(const ProbabilityMap& region_prob,
                                       const ProbabilityMap& vessel_prob, ScanMeta meta,
                                       std::optional<FoveaLocation> fovea) {
  require_same_shape(region_prob, vessel_prob, "region and vessel maps differ in shape");
  MetricInputs in;
  in.region = binarize(region_prob, kRegionThreshold);
  in.vessel = binarize(vessel_prob, kVesselThreshold);
  in.vessel_prob = vessel_prob;
  in.meta = std::move(meta);
  in.fovea = fovea;
  return in;
}

ChoroidMetrics compute_all(const MetricInputs& in, const MetricsOptions& opts) {
  return compute_all(in, in.fovea, opts);
}

ChoroidMetrics compute_all(const MetricInputs& in, const std::optional<FoveaLocation>& fovea,
                           const MetricsOptions& opts) {
  require_same_shape(in.region, in.vessel, "region and vessel masks differ in shape");
  ChoroidMetrics m;
  m.source_id = in.meta.source_id;
  m.roi = build_roi(fovea, in.meta, in.region.cols(), opts.roi_half_width_um);
  m.fovea_column = fovea ? fovea->column : m.roi.centre_column;
  m.area_mm2 = area_mm2(in.region, m.roi, in.meta.pixel_scale);
  m.vascular_index = vascular_index(in.region, in.vessel, m.roi, opts.vi_convention);
  if (in.vessel_prob) {
    m.soft_vascular_index =
        soft_vascular_index(in.region, *in.vessel_prob, m.roi, opts.vi_convention);
  }
  m.thickness = thickness(extract_boundaries(in.region), m.roi, in.meta.pixel_scale,
                          opts.tangent_half_window);
  m.thickness_mean_um = m.thickness.mean_um.value_or(0.0);
  return m;
}

}  // namespace choroid
