#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "choroid/fovea.hpp"
#include "choroid/geometry.hpp"
#include "choroid/raster.hpp"

namespace choroid {

/// Dark vessel lumen. Centre and semi-axes are in pixel units with pixel
/// centres on integer coordinates; `angle` rotates the major (x) axis.
struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;
  double b = 1.0;
  double angle = 0.0;
  double intensity = 0.25;

  bool contains(double x, double y) const noexcept;
  double area() const noexcept;
  /// Half extents of the axis-aligned bounding box.
  double half_width() const noexcept;
  double half_height() const noexcept;
};

enum class NoiseLevel { kNone, kLow, kModerate, kHigh };
std::string to_string(NoiseLevel level);

/// Synthetic B-scan description. Row coordinates grow downwards.
///
/// RPE-C boundary: rpe(x) = rpe_offset + rpe_slope * (x - xc)
///                        + rpe_curvature * (x - xc)^2
///                        + rpe_amplitude * sin(2 pi x / rpe_period + rpe_phase),
/// with xc = (cols - 1) / 2. C-S boundary: rpe(x) + t(x) / microns_per_px_y
/// where the vertical thickness t(x) = thickness_um
///                        + thickness_taper_um * ((x - fovea_column) / (cols / 2))^2.
struct PhantomSpec {
  std::string name = "phantom";
  std::size_t rows = 768;
  std::size_t cols = 768;
  PixelScale scale{9000.0 / 768.0, 3.87};
  ScanType scan_type = ScanType::kHorizontal;

  double rpe_offset = 400.0;
  double rpe_slope = 0.0;
  double rpe_curvature = 0.0;
  double rpe_amplitude = 0.0;
  double rpe_period = 400.0;
  double rpe_phase = 0.0;

  double thickness_um = 350.0;
  double thickness_taper_um = 0.0;

  double retina_thickness_um = 280.0;

  std::vector<Ellipse> vessels;

  double vitreous_mean = 0.04;
  double retina_mean = 0.32;
  double rpe_mean = 0.85;
  double stroma_mean = 0.62;
  double sclera_mean = 0.45;

  double speckle = 0.0;  // multiplicative, value * (1 + speckle * N(0,1))
  NoiseLevel noise = NoiseLevel::kNone;

  long fovea_row = 0;
  long fovea_column = 384;
  std::uint64_t seed = 0;

  double rpe_row(double x) const noexcept;
  double rpe_derivative(double x) const noexcept;
  double vertical_thickness_um(double x) const noexcept;
  double cs_row(double x) const noexcept;
  ScanMeta meta() const;

  /// Throws kInvalidSpec when the boundaries leave the image, the scale is
  /// invalid, a vessel leaves the choroid or a vessel is brighter than stroma.
  void validate() const;
};

struct VesselLayout {
  double fraction = 0.4;        // target vessel share of the choroid
  double cell_width_px = 60.0;  // columns per vessel cell
  double layer_height_px = 50.0;
  double vessel_mean = 0.22;
  double size_jitter = 0.3;     // alternating +-jitter on cell vessel area
};

/// Fills spec.vessels with non-overlapping ellipses, one per cell of a
/// column x depth grid that follows the band, each sized so the vessel area
/// of its column strip is `fraction` of the strip's choroid area (shrunk only
/// when it cannot fit). Deterministic in spec.seed.
void place_vessels(PhantomSpec& spec, const VesselLayout& layout);

/// Quantities from the continuous geometry, independent of pixelisation.
struct PhantomTruth {
  std::vector<double> thickness_profile_um;  // perpendicular, per column
  double vessel_fraction = 0.0;              // total ellipse area / choroid area
  std::optional<RoiSpec> roi;                // standard fovea-centred ROI
  std::array<double, 3> roi_thickness_um{};  // at roi.lo, centre, hi
  double roi_thickness_mean_um = 0.0;
  double roi_area_mm2 = 0.0;
};

struct PhantomRender {
  Image image;
  BinaryMask region;
  BinaryMask vessel;
  FoveaLocation fovea;
  PhantomTruth truth;
};

/// Perpendicular choroid thickness (microns) at column x from the continuous
/// boundaries, or NaN when the normal leaves the image first.
double analytic_thickness_um(const PhantomSpec& spec, double x);
/// Choroid area between columns lo and hi (inclusive pixel columns) in mm^2.
double analytic_area_mm2(const PhantomSpec& spec, long lo, long hi);
double analytic_vessel_fraction(const PhantomSpec& spec);

PhantomRender render(const PhantomSpec& spec);

struct SuiteMember {
  PhantomSpec spec;
  bool has_vessels = true;
};

inline constexpr std::size_t kSuiteSize = 24;

/// Fixed catalogue of 24 phantoms (names are stable; vessel layout and noise
/// depend on `seed`).
std::vector<SuiteMember> standard_suite(std::uint64_t seed);

}  // namespace choroid
