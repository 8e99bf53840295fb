#pragma once

#include "acis/grid.hpp"
#include "acis/imaging_io.hpp"

namespace acis {

/// H×W neuron-class probabilities in [0, 1].
using ProbabilityMap = Grid<double>;

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kDefaultMinRegionSize = 9;

/// 1 where probability > threshold (strict), else 0. Threshold must lie in (0, 1).
BinaryMask binarize(const ProbabilityMap& map, double threshold = kDefaultThreshold);

/// 8-connected components of `mask` with at least `min_size` pixels, ordered by their first
/// pixel in raster order. Each region's coordinates are listed in raster order.
RegionList extract_regions(const BinaryMask& mask, int min_size = kDefaultMinRegionSize);

}  // namespace acis
