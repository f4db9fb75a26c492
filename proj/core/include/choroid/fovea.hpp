#pragma once

#include <cstddef>
#include <optional>

#include "choroid/raster.hpp"

namespace choroid {

struct FoveaLocation {
  long column = 0;
  std::optional<long> row;
};

/// Fovea training target: 0.01 everywhere, and inside the 51-row x 19-column
/// window centred on the fovea the centre column is 0.95, columns at distance
/// d are 0.95 - 0.1 d, and the fovea pixel itself is 1. The window is clipped
/// at the image border. Throws kMissingRow or kOutOfBounds.
ProbabilityMap encode_fovea_target(const FoveaLocation& loc, std::size_t rows, std::size_t cols);

struct FoveaDecode {
  long column = 0;
  double score = 0.0;
};

/// Column sums convolved with the width-21 triangle [1..10, 11, 10..1]
/// (zero padded); the argmax column wins, lowest index on ties.
FoveaDecode decode_fovea_column(const ProbabilityMap& pred);

inline long column_to_target_error(long predicted, long truth) {
  return predicted > truth ? predicted - truth : truth - predicted;
}

}  // namespace choroid
