#pragma once

#include <filesystem>
#include <optional>

#include "choroid/raster.hpp"

namespace choroid {

/// Horizontal spacing assumed for a 30 degree (9 mm) scan over 768 columns
/// when a scan has no sidecar.
inline constexpr double kDefaultMicronsPerPxX = 9000.0 / 768.0;

struct LoadOptions {
  /// Used only when the sidecar is missing. Without it such scans are rejected.
  std::optional<double> microns_per_px_y;
};

struct LoadedScan {
  Image image;
  ScanMeta meta;
};

/// `<dir>/<stem>.meta.json` for an image at `<dir>/<stem>.<ext>`.
std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

/// Reads an 8/16-bit grayscale PNG or TIFF, dividing by the bit-depth maximum.
Image read_grayscale(const std::filesystem::path& path);

/// Loads an image plus its sidecar (or defaults). Throws kMissingFile,
/// kUnreadableImage, kMalformedSidecar or kInvalidPixelScale.
LoadedScan load_image(const std::filesystem::path& path, const LoadOptions& opts = {});

ScanMeta read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const ScanMeta& meta);

/// Writes at 8 or 16 bits; values are rounded to the nearest level.
void save_image(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Masks are stored as 8-bit 0/255.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);
/// Reads any grayscale raster and thresholds it at `threshold` (inclusive).
BinaryMask load_mask(const std::filesystem::path& path, double threshold = 0.5);
BinaryMask binarize(const ProbabilityMap& prob, double threshold = 0.5);

/// Bilinear resampling with half-pixel centres (edge samples clamped).
Image resize_bilinear(const Image& img, std::size_t rows, std::size_t cols);

/// 992x1024 Topcon B-scan -> 768x768: drop 16 columns per side, resize.
Image topcon_normalize(const Image& img);

/// 768x768 window of a 768x1536 peripapillary scan starting at `offset`,
/// which must be one of 0, 192, 384, 576, 768.
Image crop_peripapillary(const Image& img, std::size_t offset);

}  // namespace choroid
