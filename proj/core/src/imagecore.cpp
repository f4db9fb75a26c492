#include "choroid/imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

namespace choroid {

namespace fs = std::filesystem;
using json = nlohmann::json;

void validate_intensity(const Image& img) {
  if (img.empty()) throw Error(ErrorCode::kInvalidArgument, "image is empty");
  for (float v : img.pixels()) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw Error(ErrorCode::kInvalidArgument, "intensity outside [0,1]");
    }
  }
}

std::size_t count(const BinaryMask& mask) noexcept {
  std::size_t n = 0;
  for (auto v : mask.pixels()) n += v != 0;
  return n;
}

void PixelScale::validate() const {
  if (!std::isfinite(microns_per_px_x) || !std::isfinite(microns_per_px_y) ||
      microns_per_px_x <= 0.0 || microns_per_px_y <= 0.0) {
    throw Error(ErrorCode::kInvalidPixelScale, "pixel scale must be finite and positive");
  }
}

std::string to_string(ScanType type) {
  switch (type) {
    case ScanType::kHorizontal: return "horizontal";
    case ScanType::kVertical: return "vertical";
    case ScanType::kRadial: return "radial";
    case ScanType::kVolume: return "volume";
    case ScanType::kPeripapillary: return "peripapillary";
  }
  return "horizontal";
}

ScanType parse_scan_type(const std::string& text) {
  if (text == "horizontal") return ScanType::kHorizontal;
  if (text == "vertical") return ScanType::kVertical;
  if (text == "radial") return ScanType::kRadial;
  if (text == "volume") return ScanType::kVolume;
  if (text == "peripapillary") return ScanType::kPeripapillary;
  throw Error(ErrorCode::kMalformedSidecar, "unknown scan_type '" + text + "'");
}

fs::path sidecar_path(const fs::path& image_path) {
  fs::path p = image_path;
  p.replace_extension(".meta.json");
  return p;
}

Image read_grayscale(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingFile, path.string());
  cv::Mat raw;
  try {
    raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kUnreadableImage, path.string() + ": " + e.what());
  }
  if (raw.empty()) throw Error(ErrorCode::kUnreadableImage, path.string());
  if (raw.channels() != 1) {
    throw Error(ErrorCode::kUnreadableImage, path.string() + ": not single-channel grayscale");
  }
  double max_level = 0.0;
  switch (raw.depth()) {
    case CV_8U: max_level = 255.0; break;
    case CV_16U: max_level = 65535.0; break;
    default:
      throw Error(ErrorCode::kUnreadableImage, path.string() + ": expected 8- or 16-bit samples");
  }
  Image img(static_cast<std::size_t>(raw.rows), static_cast<std::size_t>(raw.cols));
  for (int r = 0; r < raw.rows; ++r) {
    for (int c = 0; c < raw.cols; ++c) {
      const double level = raw.depth() == CV_8U ? raw.at<std::uint8_t>(r, c)
                                                : raw.at<std::uint16_t>(r, c);
      img(r, c) = static_cast<float>(level / max_level);
    }
  }
  return img;
}

ScanMeta read_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  ScanMeta meta;
  try {
    const json j = json::parse(in);
    meta.scan_type = parse_scan_type(j.at("scan_type").get<std::string>());
    meta.pixel_scale.microns_per_px_x = j.at("microns_per_px_x").get<double>();
    meta.pixel_scale.microns_per_px_y = j.at("microns_per_px_y").get<double>();
    if (j.contains("eye") && !j["eye"].is_null()) {
      const auto eye = j["eye"].get<std::string>();
      if (eye == "right") meta.eye = Eye::kRight;
      else if (eye == "left") meta.eye = Eye::kLeft;
      else throw Error(ErrorCode::kMalformedSidecar, "unknown eye '" + eye + "'");
    }
    if (j.contains("fovea_column_gt") && !j["fovea_column_gt"].is_null()) {
      meta.fovea_column_gt = j["fovea_column_gt"].get<long>();
    }
    if (j.contains("fovea_row_gt") && !j["fovea_row_gt"].is_null()) {
      meta.fovea_row_gt = j["fovea_row_gt"].get<long>();
    }
    if (j.contains("source_id")) meta.source_id = j["source_id"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedSidecar, path.string() + ": " + e.what());
  }
  meta.pixel_scale.validate();
  return meta;
}

void write_sidecar(const fs::path& path, const ScanMeta& meta) {
  json j;
  j["scan_type"] = to_string(meta.scan_type);
  j["microns_per_px_x"] = meta.pixel_scale.microns_per_px_x;
  j["microns_per_px_y"] = meta.pixel_scale.microns_per_px_y;
  if (meta.eye) j["eye"] = *meta.eye == Eye::kRight ? "right" : "left";
  if (meta.fovea_column_gt) j["fovea_column_gt"] = *meta.fovea_column_gt;
  if (meta.fovea_row_gt) j["fovea_row_gt"] = *meta.fovea_row_gt;
  if (!meta.source_id.empty()) j["source_id"] = meta.source_id;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

LoadedScan load_image(const fs::path& path, const LoadOptions& opts) {
  LoadedScan scan;
  scan.image = read_grayscale(path);
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    scan.meta = read_sidecar(side);
  } else {
    if (!opts.microns_per_px_y) {
      throw Error(ErrorCode::kInvalidPixelScale,
                  path.string() + ": no sidecar and no vertical pixel scale supplied");
    }
    scan.meta.scan_type = ScanType::kHorizontal;
    scan.meta.pixel_scale = {kDefaultMicronsPerPxX, *opts.microns_per_px_y};
    scan.meta.pixel_scale.validate();
  }
  if (scan.meta.source_id.empty()) scan.meta.source_id = path.stem().string();
  return scan;
}

namespace {

void write_mat(const fs::path& path, const cv::Mat& mat) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "could not write " + path.string());
}

}  // namespace

void save_image(const fs::path& path, const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw Error(ErrorCode::kInvalidArgument, "bit depth must be 8 or 16");
  }
  const int rows = static_cast<int>(img.rows());
  const int cols = static_cast<int>(img.cols());
  cv::Mat mat(rows, cols, bit_depth == 8 ? CV_8U : CV_16U);
  const double max_level = bit_depth == 8 ? 255.0 : 65535.0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = std::clamp(static_cast<double>(img(r, c)), 0.0, 1.0);
      const auto level = std::lround(v * max_level);
      if (bit_depth == 8) mat.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(level);
      else mat.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(level);
    }
  }
  write_mat(path, mat);
}

void save_mask(const fs::path& path, const BinaryMask& mask) {
  cv::Mat mat(static_cast<int>(mask.rows()), static_cast<int>(mask.cols()), CV_8U);
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      mat.at<std::uint8_t>(static_cast<int>(r), static_cast<int>(c)) = mask(r, c) ? 255 : 0;
    }
  }
  write_mat(path, mat);
}

BinaryMask binarize(const ProbabilityMap& prob, double threshold) {
  BinaryMask mask(prob.rows(), prob.cols());
  auto out = mask.pixels();
  auto in = prob.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] >= threshold ? 1 : 0;
  return mask;
}

BinaryMask load_mask(const fs::path& path, double threshold) {
  return binarize(read_grayscale(path), threshold);
}

Image resize_bilinear(const Image& img, std::size_t rows, std::size_t cols) {
  if (img.empty() || rows == 0 || cols == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot resize an empty raster");
  }
  const double sy = static_cast<double>(img.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(img.cols()) / static_cast<double>(cols);
  const double max_y = static_cast<double>(img.rows() - 1);
  const double max_x = static_cast<double>(img.cols() - 1);

  struct Tap {
    std::size_t i0, i1;
    double w1;
  };
  auto taps = [](std::size_t n, double scale, double max_src) {
    std::vector<Tap> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, max_src);
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      const std::size_t i1 = std::min(i0 + 1, static_cast<std::size_t>(max_src));
      out[i] = {i0, i1, src - static_cast<double>(i0)};
    }
    return out;
  };
  const auto ytaps = taps(rows, sy, max_y);
  const auto xtaps = taps(cols, sx, max_x);

  Image out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& ty = ytaps[r];
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& tx = xtaps[c];
      const double top = img(ty.i0, tx.i0) * (1.0 - tx.w1) + img(ty.i0, tx.i1) * tx.w1;
      const double bottom = img(ty.i1, tx.i0) * (1.0 - tx.w1) + img(ty.i1, tx.i1) * tx.w1;
      const double v = top * (1.0 - ty.w1) + bottom * ty.w1;
      out(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

Image topcon_normalize(const Image& img) {
  constexpr std::size_t kRows = 992, kCols = 1024, kCropPerSide = 16, kOut = 768;
  if (img.rows() != kRows || img.cols() != kCols) {
    throw Error(ErrorCode::kWrongDimensions, "Topcon B-scan must be 992x1024, got " +
                                                 std::to_string(img.rows()) + "x" +
                                                 std::to_string(img.cols()));
  }
  const std::size_t cropped_cols = kCols - 2 * kCropPerSide;
  Image cropped(kRows, cropped_cols);
  for (std::size_t r = 0; r < kRows; ++r) {
    const auto src = img.row(r).subspan(kCropPerSide, cropped_cols);
    std::copy(src.begin(), src.end(), cropped.row(r).begin());
  }
  return resize_bilinear(cropped, kOut, kOut);
}

Image crop_peripapillary(const Image& img, std::size_t offset) {
  constexpr std::size_t kRows = 768, kCols = 1536, kWindow = 768, kStep = 192;
  if (img.rows() != kRows || img.cols() != kCols) {
    throw Error(ErrorCode::kWrongDimensions, "peripapillary scan must be 768x1536");
  }
  if (offset % kStep != 0 || offset > kCols - kWindow) {
    throw Error(ErrorCode::kInvalidOffset,
                "offset must be a multiple of 192 in [0, 768], got " + std::to_string(offset));
  }
  Image out(kRows, kWindow);
  for (std::size_t r = 0; r < kRows; ++r) {
    const auto src = img.row(r).subspan(offset, kWindow);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace choroid
