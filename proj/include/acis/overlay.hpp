#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "acis/grid.hpp"
#include "acis/imaging_io.hpp"

namespace acis {

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Grid<Rgb>;

inline constexpr Rgb kGroundTruthColor = {0, 255, 0};
inline constexpr Rgb kPredictionColor = {255, 0, 0};

/// Region pixels with at least one 4-neighbour outside the region (image edges count as outside).
std::vector<Pixel> region_boundary(const NeuronRegion& region);

/// Grayscale rendering of `background` (min-max stretched) with ground-truth outlines in green
/// and predicted outlines in red. Pass nullptr for `gt` when labels are unavailable.
RgbImage render_overlay(const Grid<double>& background, const RegionList* gt, const RegionList& pred);

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

}  // namespace acis
