#include "acis/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "acis/errors.hpp"

namespace acis {

namespace {

struct Disk {
    int row;
    int col;
    int radius;
    double brightness;
};

}  // namespace

DatasetBundle make_synthetic_dataset(const SyntheticSpec& spec, std::string name) {
    if (spec.rows < 1 || spec.cols < 1 || spec.frames < 1 || spec.disk_count < 0 || spec.min_radius < 1 ||
        spec.max_radius < spec.min_radius || spec.min_gap < 0) {
        throw ValidationError("synthetic: invalid parameters");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> radius_dist(spec.min_radius, spec.max_radius);
    std::uniform_real_distribution<double> brightness_dist(0.75, 1.25);

    std::vector<Disk> disks;
    for (int attempts = 0; static_cast<int>(disks.size()) < spec.disk_count; ++attempts) {
        if (attempts > 1000 * std::max(spec.disk_count, 1)) {
            throw ValidationError("synthetic: cannot place the requested number of disks");
        }
        const int r = radius_dist(rng);
        if (spec.rows < 2 * r + 1 || spec.cols < 2 * r + 1) continue;
        std::uniform_int_distribution<int> row_dist(r, spec.rows - 1 - r);
        std::uniform_int_distribution<int> col_dist(r, spec.cols - 1 - r);
        const Disk d{row_dist(rng), col_dist(rng), r, spec.amplitude * brightness_dist(rng)};
        const bool clear = std::all_of(disks.begin(), disks.end(), [&](const Disk& o) {
            return std::hypot(d.row - o.row, d.col - o.col) > d.radius + o.radius + spec.min_gap + 1;
        });
        if (clear) disks.push_back(d);
    }

    Grid<double> clean(spec.rows, spec.cols, spec.background);
    RegionList regions;
    for (const auto& d : disks) {
        std::vector<Pixel> pixels;
        for (int r = d.row - d.radius; r <= d.row + d.radius; ++r) {
            for (int c = d.col - d.radius; c <= d.col + d.radius; ++c) {
                if ((r - d.row) * (r - d.row) + (c - d.col) * (c - d.col) <= d.radius * d.radius) {
                    pixels.push_back({r, c});
                    clean(r, c) += d.brightness;
                }
            }
        }
        regions.emplace_back(std::move(pixels));
    }

    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        Frame f(spec.rows, spec.cols);
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double v = std::round(clean.values()[i] + noise(rng));
            f.values()[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
        }
        frames.push_back(std::move(f));
    }

    DatasetBundle bundle{name, ImageSeries::from_frames(std::move(frames), name), std::move(regions), {}};
    bundle.tags["source"] = "synthetic";
    bundle.validate();
    return bundle;
}

}  // namespace acis
