#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "choroid/error.hpp"

namespace choroid {

/// Dense row-major single-channel raster. Pixel (row, col) lives at
/// data[row * cols + col]. A default-constructed raster is empty (0x0).
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Raster(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::kShapeMismatch, "raster data length does not match rows x cols");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * cols_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * cols_ + col];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Intensity image, values in [0, 1].
using Image = Raster<float>;
/// Per-pixel probability in [0, 1].
using ProbabilityMap = Raster<float>;
/// Per-pixel boolean stored as 0 / 1.
using BinaryMask = Raster<std::uint8_t>;

/// Throws kInvalidArgument unless the image is nonempty and every value is
/// finite and inside [0, 1].
void validate_intensity(const Image& img);

std::size_t count(const BinaryMask& mask) noexcept;

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShapeMismatch, what);
}

/// Physical pixel size; horizontal and vertical spacing generally differ.
struct PixelScale {
  double microns_per_px_x = 0.0;
  double microns_per_px_y = 0.0;

  /// Throws kInvalidPixelScale unless both spacings are finite and > 0.
  void validate() const;
  double pixel_area_um2() const noexcept { return microns_per_px_x * microns_per_px_y; }
};

enum class ScanType { kHorizontal, kVertical, kRadial, kVolume, kPeripapillary };
enum class Eye { kRight, kLeft };

std::string to_string(ScanType type);
ScanType parse_scan_type(const std::string& text);

/// Horizontal, vertical and radial line scans are centred on the fovea.
constexpr bool is_fovea_centred(ScanType type) noexcept {
  return type == ScanType::kHorizontal || type == ScanType::kVertical ||
         type == ScanType::kRadial;
}

struct ScanMeta {
  ScanType scan_type = ScanType::kHorizontal;
  PixelScale pixel_scale;
  std::optional<Eye> eye;
  std::string source_id;
  std::optional<long> fovea_column_gt;
  std::optional<long> fovea_row_gt;
};

}  // namespace choroid
