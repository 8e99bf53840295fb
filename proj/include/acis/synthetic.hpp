#pragma once

#include <cstdint>

#include "acis/imaging_io.hpp"

namespace acis {

/// Bright disks over Gaussian noise. Disks never touch (at least `min_gap` background pixels
/// between any two), so merging their masks removes nothing.
struct SyntheticSpec {
    int rows = 512;
    int cols = 512;
    int frames = 20;
    int disk_count = 30;
    int min_radius = 5;
    int max_radius = 8;
    int min_gap = 3;
    double background = 1000.0;
    double amplitude = 600.0;  // mean disk brightness above background
    double noise_sigma = 100.0;  // per-frame, per-pixel
    std::uint64_t seed = 0;
};

/// In-memory series plus the disk regions. Throws ValidationError when the disks cannot be placed.
DatasetBundle make_synthetic_dataset(const SyntheticSpec& spec, std::string name = "synthetic");

}  // namespace acis
