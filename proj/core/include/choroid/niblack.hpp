#pragma once

#include <cstddef>

#include "choroid/raster.hpp"

namespace choroid {

struct NiblackParams {
  std::size_t window = 51;
  double k = -0.05;
};

/// Niblack local thresholding restricted to `region`: a region pixel is
/// vessel iff img < mean_w + k * std_w, with window statistics taken over the
/// full image (edges replicated) and the population standard deviation.
/// Window sums are exact, so constant neighbourhoods give std == 0 and no
/// vessels. Throws kInvalidWindow for an even window or one below 3.
BinaryMask niblack_segment(const Image& img, const BinaryMask& region,
                           const NiblackParams& params = {});

}  // namespace choroid
