#include "choroid/fovea.hpp"

#include <algorithm>
#include <vector>

namespace choroid {

namespace {
constexpr long kTargetHalfHeight = 25;  // 51 rows
constexpr long kTargetHalfWidth = 9;    // 19 columns
constexpr long kKernelHalfWidth = 10;   // 21 taps
}  // namespace

ProbabilityMap encode_fovea_target(const FoveaLocation& loc, std::size_t rows, std::size_t cols) {
  if (!loc.row) throw Error(ErrorCode::kMissingRow, "fovea target needs a fovea row");
  const long row = *loc.row;
  if (loc.column < 0 || loc.column >= static_cast<long>(cols) || row < 0 ||
      row >= static_cast<long>(rows)) {
    throw Error(ErrorCode::kOutOfBounds, "fovea location outside the image");
  }
  ProbabilityMap target(rows, cols, 0.01f);
  const long r_lo = std::max(0L, row - kTargetHalfHeight);
  const long r_hi = std::min(static_cast<long>(rows) - 1, row + kTargetHalfHeight);
  for (long d = -kTargetHalfWidth; d <= kTargetHalfWidth; ++d) {
    const long c = loc.column + d;
    if (c < 0 || c >= static_cast<long>(cols)) continue;
    const float value = static_cast<float>(0.95 - 0.1 * static_cast<double>(d < 0 ? -d : d));
    for (long r = r_lo; r <= r_hi; ++r) {
      target(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = value;
    }
  }
  target(static_cast<std::size_t>(row), static_cast<std::size_t>(loc.column)) = 1.0f;
  return target;
}

FoveaDecode decode_fovea_column(const ProbabilityMap& pred) {
  if (pred.empty()) throw Error(ErrorCode::kInvalidArgument, "empty probability map");
  const long cols = static_cast<long>(pred.cols());
  std::vector<double> sums(pred.cols(), 0.0);
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    const auto row = pred.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) sums[c] += row[c];
  }
  FoveaDecode best{0, -1.0};
  for (long c = 0; c < cols; ++c) {
    double filtered = 0.0;
    for (long k = -kKernelHalfWidth; k <= kKernelHalfWidth; ++k) {
      const long src = c + k;
      if (src < 0 || src >= cols) continue;
      filtered += static_cast<double>(kKernelHalfWidth + 1 - (k < 0 ? -k : k)) *
                  sums[static_cast<std::size_t>(src)];
    }
    if (filtered > best.score) best = {c, filtered};
  }
  return best;
}

}  // namespace choroid
