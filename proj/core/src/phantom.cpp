#include "choroid/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace choroid {

namespace {

constexpr double kPi = std::numbers::pi;

/// Uniform [0, 1) from the raw generator; std distributions are
/// implementation-defined and would break cross-platform reproducibility.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Box-Muller standard normal.
double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double centre_x(const PhantomSpec& s) { return (static_cast<double>(s.cols) - 1.0) / 2.0; }

double retina_top(const PhantomSpec& s, double x) {
  const double full = s.retina_thickness_um / s.scale.microns_per_px_y;
  const double d = (x - static_cast<double>(s.fovea_column)) / 40.0;
  return s.rpe_row(x) - full * (1.0 - 0.6 * std::exp(-d * d));
}

/// Choroid area in px^2 between continuous columns x0 < x1.
double band_area_px2(const PhantomSpec& s, double x0, double x1) {
  // t(x)/uy is quadratic in x, so the integral is closed form.
  const double half = static_cast<double>(s.cols) / 2.0;
  const double f = static_cast<double>(s.fovea_column);
  const double cubic = (std::pow(x1 - f, 3) - std::pow(x0 - f, 3)) / 3.0;
  const double um = s.thickness_um * (x1 - x0) + s.thickness_taper_um * cubic / (half * half);
  return um / s.scale.microns_per_px_y;
}

}  // namespace

bool Ellipse::contains(double x, double y) const noexcept {
  const double dx = x - cx, dy = y - cy;
  const double c = std::cos(angle), s = std::sin(angle);
  const double u = (dx * c + dy * s) / a;
  const double v = (-dx * s + dy * c) / b;
  return u * u + v * v <= 1.0;
}

double Ellipse::area() const noexcept { return kPi * a * b; }

double Ellipse::half_width() const noexcept {
  const double c = std::cos(angle), s = std::sin(angle);
  return std::sqrt(a * a * c * c + b * b * s * s);
}

double Ellipse::half_height() const noexcept {
  const double c = std::cos(angle), s = std::sin(angle);
  return std::sqrt(a * a * s * s + b * b * c * c);
}

std::string to_string(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kNone: return "none";
    case NoiseLevel::kLow: return "low";
    case NoiseLevel::kModerate: return "moderate";
    case NoiseLevel::kHigh: return "high";
  }
  return "none";
}

double PhantomSpec::rpe_row(double x) const noexcept {
  const double d = x - centre_x(*this);
  return rpe_offset + rpe_slope * d + rpe_curvature * d * d +
         rpe_amplitude * std::sin(2.0 * kPi * x / rpe_period + rpe_phase);
}

double PhantomSpec::rpe_derivative(double x) const noexcept {
  const double d = x - centre_x(*this);
  return rpe_slope + 2.0 * rpe_curvature * d +
         rpe_amplitude * 2.0 * kPi / rpe_period * std::cos(2.0 * kPi * x / rpe_period + rpe_phase);
}

double PhantomSpec::vertical_thickness_um(double x) const noexcept {
  const double half = static_cast<double>(cols) / 2.0;
  const double d = (x - static_cast<double>(fovea_column)) / half;
  return thickness_um + thickness_taper_um * d * d;
}

double PhantomSpec::cs_row(double x) const noexcept {
  return rpe_row(x) + vertical_thickness_um(x) / scale.microns_per_px_y;
}

ScanMeta PhantomSpec::meta() const {
  ScanMeta m;
  m.scan_type = scan_type;
  m.pixel_scale = scale;
  m.source_id = name;
  m.eye = Eye::kRight;
  m.fovea_column_gt = fovea_column;
  m.fovea_row_gt = fovea_row;
  return m;
}

void PhantomSpec::validate() const {
  if (rows < 8 || cols < 8) throw Error(ErrorCode::kInvalidSpec, name + ": image too small");
  try {
    scale.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidSpec, name + ": " + e.what());
  }
  if (!(stroma_mean > 0.0 && stroma_mean <= 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, name + ": stroma mean outside (0, 1]");
  }
  if (fovea_column < 0 || fovea_column >= static_cast<long>(cols)) {
    throw Error(ErrorCode::kInvalidSpec, name + ": fovea column outside the image");
  }
  const double max_row = static_cast<double>(rows) - 0.5;
  for (std::size_t c = 0; c < cols; ++c) {
    const double x = static_cast<double>(c);
    const double top = rpe_row(x), bottom = cs_row(x);
    if (!(top >= -0.5 && bottom <= max_row && bottom > top)) {
      throw Error(ErrorCode::kInvalidSpec, name + ": choroid boundaries leave the image at column " +
                                               std::to_string(c));
    }
  }
  for (const auto& e : vessels) {
    if (!(e.intensity < stroma_mean)) {
      throw Error(ErrorCode::kInvalidSpec, name + ": vessel brighter than stroma");
    }
    for (int k = 0; k < 64; ++k) {
      const double t = 2.0 * kPi * k / 64.0;
      const double px = e.cx + e.a * std::cos(t) * std::cos(e.angle) - e.b * std::sin(t) * std::sin(e.angle);
      const double py = e.cy + e.a * std::cos(t) * std::sin(e.angle) + e.b * std::sin(t) * std::cos(e.angle);
      if (px < -0.5 || px > static_cast<double>(cols) - 0.5 || py < rpe_row(px) ||
          py >= cs_row(px)) {
        throw Error(ErrorCode::kInvalidSpec, name + ": vessel leaves the choroid");
      }
    }
  }
}

void place_vessels(PhantomSpec& spec, const VesselLayout& layout) {
  spec.vessels.clear();
  if (layout.fraction <= 0.0) return;
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + 1);

  const double left = -0.5, right = static_cast<double>(spec.cols) - 0.5;
  const auto n_strips = std::max<long>(
      1, static_cast<long>(std::floor((right - left) / layout.cell_width_px)));
  const double strip_w = (right - left) / static_cast<double>(n_strips);
  std::size_t cell_index = 0;

  for (long s = 0; s < n_strips; ++s) {
    const double x0 = left + strip_w * static_cast<double>(s);
    const double x1 = x0 + strip_w;
    double top = -std::numeric_limits<double>::infinity();
    double bottom = std::numeric_limits<double>::infinity();
    for (double x = x0; x <= x1 + 1e-9; x += 0.25) {
      top = std::max(top, spec.rpe_row(x));
      bottom = std::min(bottom, spec.cs_row(x));
    }
    top += 1.0;
    bottom -= 1.0;
    if (bottom - top < 4.0) continue;

    const auto n_layers = std::max<long>(1, std::lround((bottom - top) / layout.layer_height_px));
    const double layer_h = (bottom - top) / static_cast<double>(n_layers);
    const double strip_area = band_area_px2(spec, x0, x1);
    const double half_w_max = strip_w / 2.0 - 1.0;
    const double half_h_max = layer_h / 2.0 - 0.5;
    if (half_w_max < 1.0 || half_h_max < 1.0) continue;

    for (long l = 0; l < n_layers; ++l, ++cell_index) {
      const double jitter = cell_index % 2 ? -layout.size_jitter : layout.size_jitter;
      double target = layout.fraction * strip_area / static_cast<double>(n_layers) * (1.0 + jitter);

      Ellipse e;
      e.intensity = layout.vessel_mean + uniform(rng, -0.04, 0.04);
      double rho = uniform(rng, 1.1, 2.2);
      e.angle = uniform(rng, -0.3, 0.3);
      bool fits = false;
      for (int attempt = 0; attempt < 3 && !fits; ++attempt) {
        if (attempt == 1) {
          e.angle = 0.0;
          rho = half_w_max / half_h_max;
        } else if (attempt == 2) {
          target = std::min(target, 0.95 * kPi * half_w_max * half_h_max);
        }
        e.b = std::sqrt(target / (kPi * rho));
        e.a = rho * e.b;
        fits = e.half_width() <= half_w_max && e.half_height() <= half_h_max;
      }
      if (!fits) {
        e.angle = 0.0;
        e.a = 0.97 * half_w_max;
        e.b = 0.97 * half_h_max;
      }
      const double ltop = top + layer_h * static_cast<double>(l);
      const double hw = e.half_width(), hh = e.half_height();
      e.cx = uniform(rng, x0 + 1.0 + hw, x1 - 1.0 - hw);
      e.cy = uniform(rng, ltop + hh + 0.25, ltop + layer_h - hh - 0.25);
      spec.vessels.push_back(e);
    }
  }
}

double analytic_thickness_um(const PhantomSpec& spec, double x) {
  const double ux = spec.scale.microns_per_px_x, uy = spec.scale.microns_per_px_y;
  // Physical tangent (ux, slope * uy); downward unit normal in microns.
  const double slope = spec.rpe_derivative(x);
  const double nx_um = -slope * uy, ny_um = ux;
  const double norm = std::hypot(nx_um, ny_um);
  const double dx = nx_um / norm / ux, dy = ny_um / norm / uy;  // px per micron
  const double y0 = spec.rpe_row(x);
  const double lo_x = -0.5, hi_x = static_cast<double>(spec.cols) - 0.5;

  auto gap = [&](double t) { return (y0 + t * dy) - spec.cs_row(x + t * dx); };
  double lo = 0.0, hi = 0.0;
  const double step = 1.0;
  for (double t = step;; t += step) {
    const double px = x + t * dx;
    if (px < lo_x || px > hi_x || t > 1e5) return std::numeric_limits<double>::quiet_NaN();
    if (gap(t) >= 0.0) {
      lo = t - step;
      hi = t;
      break;
    }
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) >= 0.0) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

double analytic_area_mm2(const PhantomSpec& spec, long lo, long hi) {
  const double px2 = band_area_px2(spec, static_cast<double>(lo) - 0.5, static_cast<double>(hi) + 0.5);
  return px2 * spec.scale.pixel_area_um2() / 1e6;
}

double analytic_vessel_fraction(const PhantomSpec& spec) {
  double vessel = 0.0;
  for (const auto& e : spec.vessels) vessel += e.area();
  return vessel / band_area_px2(spec, -0.5, static_cast<double>(spec.cols) - 0.5);
}

PhantomRender render(const PhantomSpec& spec) {
  spec.validate();
  const std::size_t rows = spec.rows, cols = spec.cols;
  PhantomRender out;
  out.image = Image(rows, cols);
  out.region = BinaryMask(rows, cols);
  out.vessel = BinaryMask(rows, cols);
  Raster<float> vessel_level(rows, cols, 0.0f);

  for (const auto& e : spec.vessels) {
    const auto c0 = static_cast<long>(std::floor(e.cx - e.half_width()));
    const auto c1 = static_cast<long>(std::ceil(e.cx + e.half_width()));
    const auto r0 = static_cast<long>(std::floor(e.cy - e.half_height()));
    const auto r1 = static_cast<long>(std::ceil(e.cy + e.half_height()));
    for (long r = std::max(0L, r0); r <= std::min<long>(static_cast<long>(rows) - 1, r1); ++r) {
      for (long c = std::max(0L, c0); c <= std::min<long>(static_cast<long>(cols) - 1, c1); ++c) {
        if (e.contains(static_cast<double>(c), static_cast<double>(r))) {
          out.vessel(r, c) = 1;
          vessel_level(r, c) = static_cast<float>(e.intensity);
        }
      }
    }
  }

  std::mt19937_64 rng(spec.seed ^ 0xD1B54A32D192ED03ULL);
  const double rpe_band = std::max(3.0, 20.0 / spec.scale.microns_per_px_y);
  for (std::size_t c = 0; c < cols; ++c) {
    const double x = static_cast<double>(c);
    const double rpe = spec.rpe_row(x), cs = spec.cs_row(x), surface = retina_top(spec, x);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = static_cast<double>(r);
      double v;
      if (y < surface) {
        v = spec.vitreous_mean;
      } else if (y < rpe - rpe_band) {
        v = spec.retina_mean;
      } else if (y < rpe) {
        v = spec.rpe_mean;
      } else if (y < cs) {
        out.region(r, c) = 1;
        v = out.vessel(r, c) ? vessel_level(r, c) : spec.stroma_mean;
      } else {
        v = spec.sclera_mean * (1.0 - 0.5 * std::min(1.0, (y - cs) / 150.0));
      }
      out.image(r, c) = static_cast<float>(v);
    }
  }
  // Vessels are placed inside the band; keep the mask a strict subset anyway.
  for (std::size_t i = 0; i < out.vessel.size(); ++i) {
    out.vessel.pixels()[i] &= out.region.pixels()[i];
  }

  // Speckle in row-major order, then 8-bit quantisation like a stored B-scan.
  for (float& v : out.image.pixels()) {
    double value = v;
    if (spec.speckle > 0.0) value *= 1.0 + spec.speckle * gaussian(rng);
    value = std::clamp(value, 0.0, 1.0);
    v = static_cast<float>(std::round(value * 255.0) / 255.0);
  }

  out.fovea = {spec.fovea_column, spec.fovea_row};

  auto& truth = out.truth;
  truth.thickness_profile_um.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    truth.thickness_profile_um[c] = analytic_thickness_um(spec, static_cast<double>(c));
  }
  truth.vessel_fraction = analytic_vessel_fraction(spec);
  if (spec.scan_type != ScanType::kPeripapillary) {
    const RoiSpec roi = build_roi(out.fovea, spec.meta(), cols);
    truth.roi = roi;
    const std::array<long, 3> at{roi.lo, roi.centre_column, roi.hi};
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      truth.roi_thickness_um[i] = analytic_thickness_um(spec, static_cast<double>(at[i]));
      sum += truth.roi_thickness_um[i];
    }
    truth.roi_thickness_mean_um = sum / 3.0;
    truth.roi_area_mm2 = analytic_area_mm2(spec, roi.lo, roi.hi);
  }
  return out;
}

namespace {

struct MemberRecipe {
  const char* name;
  double thickness_um;
  double taper_um = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
  double amplitude = 0.0;
  double period = 400.0;
  double fraction = 0.4;
  NoiseLevel noise = NoiseLevel::kModerate;
  ScanType type = ScanType::kHorizontal;
  long fovea_column = 384;
  double uy = 3.87;
  double ux = 9000.0 / 768.0;
  std::size_t rows = 768;
  std::size_t cols = 768;
  double rpe_offset = 400.0;
  double cell_width = 60.0;
};

double speckle_for(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kNone: return 0.0;
    case NoiseLevel::kLow: return 0.06;
    case NoiseLevel::kModerate: return 0.15;
    case NoiseLevel::kHigh: return 0.35;
  }
  return 0.0;
}

}  // namespace

std::vector<SuiteMember> standard_suite(std::uint64_t seed) {
  using enum NoiseLevel;
  const std::vector<MemberRecipe> recipes = {
      // Flat bands with integer pixel thickness for exact metric checks.
      {.name = "flat_clean", .thickness_um = 400, .fraction = 0.0, .noise = kNone, .uy = 4.0,
       .rpe_offset = 300.0},
      {.name = "flat_vessels", .thickness_um = 400, .fraction = 0.40, .noise = kLow, .uy = 4.0,
       .rpe_offset = 300.0},
      // 45 degrees in physical space: isotropic pixels, slope 1.
      {.name = "tilted45", .thickness_um = 450, .slope = 1.0, .fraction = 0.25, .noise = kLow,
       .uy = 9.0, .ux = 9.0, .rows = 900, .rpe_offset = 404.0, .cell_width = 14.0},
      {.name = "curved_thick", .thickness_um = 600, .taper_um = -150, .curvature = -0.0003,
       .fraction = 0.45},
      {.name = "curved_thin", .thickness_um = 150, .curvature = -0.00025, .fraction = 0.35},
      {.name = "sinusoid_mid", .thickness_um = 350, .amplitude = 15, .period = 400,
       .fraction = 0.40},
      {.name = "sparse_vessels", .thickness_um = 400, .curvature = -0.0001, .fraction = 0.25},
      {.name = "dense_vessels", .thickness_um = 450, .curvature = -0.0001, .fraction = 0.50},
      {.name = "high_speckle_a", .thickness_um = 400, .curvature = -0.0002, .fraction = 0.40,
       .noise = kHigh},
      {.name = "high_speckle_b", .thickness_um = 300, .curvature = -0.0003, .fraction = 0.45,
       .noise = kHigh},
      {.name = "low_noise_thick", .thickness_um = 550, .curvature = -0.0002, .fraction = 0.45,
       .noise = kLow},
      {.name = "thin_dense", .thickness_um = 200, .curvature = -0.0002, .fraction = 0.50},
      {.name = "tilt_gentle", .thickness_um = 380, .slope = 0.1, .fraction = 0.40},
      {.name = "tilt_negative", .thickness_um = 420, .slope = -0.15, .fraction = 0.38},
      {.name = "taper_strong", .thickness_um = 500, .taper_um = -220, .curvature = -0.0002,
       .fraction = 0.42},
      {.name = "radial_scan", .thickness_um = 330, .curvature = -0.0002, .fraction = 0.36,
       .type = ScanType::kRadial, .uy = 2.6, .rpe_offset = 420.0},
      {.name = "vertical_scan", .thickness_um = 360, .curvature = -0.00015, .fraction = 0.44,
       .type = ScanType::kVertical},
      {.name = "offcentre_fovea_a", .thickness_um = 400, .taper_um = -100, .curvature = -0.0002,
       .fraction = 0.40, .fovea_column = 300},
      {.name = "offcentre_fovea_b", .thickness_um = 350, .curvature = -0.0002, .fraction = 0.30,
       .fovea_column = 470},
      {.name = "wavy_thin", .thickness_um = 180, .amplitude = 8, .period = 250, .fraction = 0.30},
      {.name = "volume_style", .thickness_um = 400, .curvature = -0.0002, .fraction = 0.40,
       .type = ScanType::kVolume, .fovea_column = 330},
      {.name = "peripapillary_style", .thickness_um = 250, .amplitude = 10, .period = 600,
       .fraction = 0.35, .type = ScanType::kPeripapillary, .fovea_column = 768, .cols = 1536},
      {.name = "clean_vessels", .thickness_um = 400, .curvature = -0.0002, .fraction = 0.40,
       .noise = kNone},
      {.name = "heidelberg_scale", .thickness_um = 420, .curvature = -0.00025, .fraction = 0.40},
  };

  std::vector<SuiteMember> suite;
  suite.reserve(recipes.size());
  for (std::size_t i = 0; i < recipes.size(); ++i) {
    const auto& rc = recipes[i];
    PhantomSpec spec;
    spec.name = rc.name;
    spec.rows = rc.rows;
    spec.cols = rc.cols;
    spec.scale = {rc.ux, rc.uy};
    spec.scan_type = rc.type;
    spec.rpe_offset = rc.rpe_offset;
    spec.rpe_slope = rc.slope;
    spec.rpe_curvature = rc.curvature;
    spec.rpe_amplitude = rc.amplitude;
    spec.rpe_period = rc.period;
    spec.thickness_um = rc.thickness_um;
    spec.thickness_taper_um = rc.taper_um;
    spec.fovea_column = rc.fovea_column;
    spec.noise = rc.noise;
    spec.speckle = speckle_for(rc.noise);
    spec.seed = seed * 1000003ULL + i;
    spec.fovea_row = std::lround(retina_top(spec, static_cast<double>(spec.fovea_column)));

    VesselLayout layout;
    layout.fraction = rc.fraction;
    layout.cell_width_px = rc.cell_width;
    place_vessels(spec, layout);
    suite.push_back({std::move(spec), rc.fraction > 0.0});
  }
  return suite;
}

}  // namespace choroid
