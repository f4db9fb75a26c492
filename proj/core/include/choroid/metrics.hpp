#pragma once

#include <array>
#include <optional>

#include "choroid/fovea.hpp"
#include "choroid/geometry.hpp"
#include "choroid/raster.hpp"

namespace choroid {

enum class VesselIndexConvention {
  kVesselToTotal,     // vessel / region  (default)
  kVesselToNonVessel  // vessel / (region - vessel)
};

struct MetricsOptions {
  VesselIndexConvention vi_convention = VesselIndexConvention::kVesselToTotal;
  std::size_t tangent_half_window = kDefaultTangentHalfWindow;
  double roi_half_width_um = kRoiHalfWidthUm;
};

struct ThicknessResult {
  std::array<long, 3> columns{};         // roi.lo, roi.centre, roi.hi
  std::array<double, 3> points_um{};     // 0 where failed
  std::array<bool, 3> failed{};
  std::optional<double> mean_um;         // mean of the non-failed points
};

/// Choroid thickness at the ROI edges and centre, measured from the RPE-C
/// boundary along the boundary's local normal (perpendicular in physical
/// units) to the C-S boundary. A point whose ray finds no C-S crossing is
/// flagged and left out of the mean.
ThicknessResult thickness(const ChoroidBoundaries& bounds, const RoiSpec& roi,
                          const PixelScale& scale, std::size_t tangent_half_window =
                                                       kDefaultTangentHalfWindow);
ThicknessResult thickness(const BinaryMask& region, const RoiSpec& roi, const PixelScale& scale);

/// Region pixels inside the ROI columns times the pixel area, in mm^2.
double area_mm2(const BinaryMask& region, const RoiSpec& roi, const PixelScale& scale);

/// |vessel & region & ROI| over |region & ROI| (or over the non-vessel part
/// under kVesselToNonVessel). Throws kUndefinedIndex for an empty denominator.
double vascular_index(const BinaryMask& region, const BinaryMask& vessel, const RoiSpec& roi,
                      VesselIndexConvention convention = VesselIndexConvention::kVesselToTotal);

/// Same ratio with vessel probabilities summed in place of vessel counts.
double soft_vascular_index(const BinaryMask& region, const ProbabilityMap& vessel_prob,
                           const RoiSpec& roi,
                           VesselIndexConvention convention =
                               VesselIndexConvention::kVesselToTotal);

struct ChoroidMetrics {
  std::string source_id;
  long fovea_column = 0;
  RoiSpec roi;
  ThicknessResult thickness;
  double thickness_mean_um = 0.0;
  double area_mm2 = 0.0;
  double vascular_index = 0.0;
  std::optional<double> soft_vascular_index;
};

struct MetricInputs {
  BinaryMask region;
  BinaryMask vessel;
  std::optional<ProbabilityMap> vessel_prob;  // enables soft VI
  ScanMeta meta;
  std::optional<FoveaLocation> fovea;
};

/// Binarisation thresholds for probability-map inputs.
inline constexpr double kRegionThreshold = 0.5;
inline constexpr double kVesselThreshold = 0.5;
inline constexpr double kPeripapillaryVesselThreshold = 0.25;

inline double vessel_threshold_for(ScanType type) {
  return type == ScanType::kPeripapillary ? kPeripapillaryVesselThreshold : kVesselThreshold;
}

/// Builds MetricInputs from probability maps: region and vessel binarised at
/// 0.5, raw vessel probabilities kept for the soft index.
MetricInputs inputs_from_probabilities(const ProbabilityMap& region_prob,
                                       const ProbabilityMap& vessel_prob, ScanMeta meta,
                                       std::optional<FoveaLocation> fovea);

/// ROI, thickness, area, vascular index and (when probabilities are given)
/// soft vascular index. Throws kNoFoveaRoi for peripapillary scans and
/// kUndefinedIndex when the ROI holds no region pixels.
ChoroidMetrics compute_all(const MetricInputs& in, const MetricsOptions& opts = {});
/// As above with `fovea` in place of in.fovea.
ChoroidMetrics compute_all(const MetricInputs& in, const std::optional<FoveaLocation>& fovea,
                           const MetricsOptions& opts = {});

}  // namespace choroid
