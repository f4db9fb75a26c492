#include "choroid/niblack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace choroid {

namespace {

__extension__ using int128 = __int128;

// Fixed-point scale for exact window sums: every float >= 2^-17 is an
// integer multiple of 2^-40.
constexpr double kFixedScale = 1099511627776.0;  // 2^40

}  // namespace

BinaryMask niblack_segment(const Image& img, const BinaryMask& region,
                           const NiblackParams& params) {
  if (params.window < 3 || params.window % 2 == 0) {
    throw Error(ErrorCode::kInvalidWindow, "niblack window must be odd and >= 3");
  }
  require_same_shape(img, region, "image and region differ in shape");
  if (count(region) == 0) throw Error(ErrorCode::kEmptyRegion, "region mask has no pixels");

  const std::size_t rows = img.rows(), cols = img.cols();
  const auto half = static_cast<long>(params.window / 2);
  const std::size_t prow = rows + params.window - 1;
  const std::size_t pcol = cols + params.window - 1;

  // Integral images (one extra leading row/col of zeros) over the
  // edge-replicated padding.
  std::vector<std::int64_t> sum((prow + 1) * (pcol + 1), 0);
  std::vector<int128> sq((prow + 1) * (pcol + 1), 0);
  const auto at = [&](std::size_t r, std::size_t c) { return r * (pcol + 1) + c; };
  std::vector<std::int64_t> fixed(cols);
  for (std::size_t pr = 0; pr < prow; ++pr) {
    const long src_r = std::clamp(static_cast<long>(pr) - half, 0L, static_cast<long>(rows) - 1);
    const auto src = img.row(static_cast<std::size_t>(src_r));
    for (std::size_t c = 0; c < cols; ++c) {
      fixed[c] = std::llround(static_cast<double>(src[c]) * kFixedScale);
    }
    std::int64_t row_sum = 0;
    int128 row_sq = 0;
    for (std::size_t pc = 0; pc < pcol; ++pc) {
      const long src_c = std::clamp(static_cast<long>(pc) - half, 0L, static_cast<long>(cols) - 1);
      const std::int64_t v = fixed[static_cast<std::size_t>(src_c)];
      row_sum += v;
      row_sq += static_cast<int128>(v) * v;
      sum[at(pr + 1, pc + 1)] = sum[at(pr, pc + 1)] + row_sum;
      sq[at(pr + 1, pc + 1)] = sq[at(pr, pc + 1)] + row_sq;
    }
  }

  const std::size_t w = params.window;
  const auto n = static_cast<int128>(w * w);
  const double n_scaled = static_cast<double>(w * w) * kFixedScale;
  const double n2_scaled = static_cast<double>(w * w) * static_cast<double>(w * w) * kFixedScale *
                           kFixedScale;

  BinaryMask vessel(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto mrow = region.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mrow[c]) continue;
      // Window centred on (r, c) spans padded rows [r, r + w), cols [c, c + w).
      const std::int64_t s =
          sum[at(r + w, c + w)] - sum[at(r, c + w)] - sum[at(r + w, c)] + sum[at(r, c)];
      const int128 ss = sq[at(r + w, c + w)] - sq[at(r, c + w)] - sq[at(r + w, c)] + sq[at(r, c)];
      const int128 var_num = n * ss - static_cast<int128>(s) * s;  // >= 0, exact
      const double mean = static_cast<double>(s) / n_scaled;
      const double std_dev = var_num > 0 ? std::sqrt(static_cast<double>(var_num) / n2_scaled) : 0.0;
      const double threshold = mean + params.k * std_dev;
      vessel(r, c) = static_cast<double>(img(r, c)) < threshold ? 1 : 0;
    }
  }
  return vessel;
}

}  // namespace choroid
