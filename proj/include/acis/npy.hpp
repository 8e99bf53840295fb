#pragma once

#include <filesystem>

#include "acis/grid.hpp"

namespace acis::npy {

/// Little-endian float64 C-order 2D array in NumPy's .npy format (version 1.0).
void write(const std::filesystem::path& path, const Grid<double>& values);
Grid<double> read(const std::filesystem::path& path);

}  // namespace acis::npy
