#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acis/grid.hpp"

namespace acis {

struct Pixel {
    int row = 0;
    int col = 0;
    auto operator<=>(const Pixel&) const = default;
};

/// One neuron: a nonempty set of distinct pixel coordinates. Insertion order is kept so
/// that JSON round-trips reproduce the input exactly.
class NeuronRegion {
public:
    /// Throws ValidationError on an empty list, duplicates or negative coordinates.
    explicit NeuronRegion(std::vector<Pixel> coordinates);

    std::span<const Pixel> coordinates() const noexcept { return coords_; }
    std::size_t size() const noexcept { return coords_.size(); }

    bool within(int rows, int cols) const noexcept;

    /// Set equality; coordinate order is irrelevant.
    bool same_pixels(const NeuronRegion& other) const;

    bool operator==(const NeuronRegion&) const = default;

private:
    std::vector<Pixel> coords_;
};

using RegionList = std::vector<NeuronRegion>;

// ---------------------------------------------------------------------------
// Image series

struct FrameRef {
    std::filesystem::path file;
    int page = 0;
};

class FrameSource;

/// Lazy handle to a T×H×W stack of 16-bit frames. Frames are decoded on demand, so a
/// multi-GB recording is never resident in memory. Copies share the underlying source.
class ImageSeries {
public:
    using FrameVisitor = std::function<void(int index, const Frame& frame)>;

    /// In-memory series, mostly for tests and synthetic data.
    static ImageSeries from_frames(std::vector<Frame> frames, std::string name = "memory");

    int frame_count() const noexcept { return frame_count_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const std::string& name() const noexcept { return name_; }

    /// Frame references in read order (empty for in-memory series).
    std::span<const FrameRef> sources() const noexcept { return refs_; }

    Frame read_frame(int index) const;

    /// Visits every frame exactly once in order, decoding `chunk` frames at a time.
    void for_each_frame(const FrameVisitor& visit, int chunk = 64) const;

private:
    friend ImageSeries load_series(const std::filesystem::path& path);

    int frame_count_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::string name_;
    std::vector<FrameRef> refs_;
    std::shared_ptr<const FrameSource> source_;
};

/// Opens a directory of TIFF files (lexicographic filename order, then page order) or a
/// single multi-page TIFF. Only TIFF headers are read here; every page is checked for
/// 16-bit single-channel data and matching dimensions.
ImageSeries load_series(const std::filesystem::path& path);

/// Writes frames as one multi-page TIFF (or a single page when there is one frame).
void write_tiff(const std::filesystem::path& path, std::span<const Frame> frames);

// ---------------------------------------------------------------------------
// Region files

RegionList regions_from_json(const std::string& text);
std::string regions_to_json(const RegionList& regions);

RegionList load_regions(const std::filesystem::path& path);
void write_regions(const RegionList& regions, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Masks

/// Per-pixel region labels: 0 background, k = 1..N region index + 1, kOverlapLabel where
/// more than one region claims the pixel.
using LabeledMask = Grid<std::int32_t>;
inline constexpr std::int32_t kOverlapLabel = -1;

LabeledMask rasterize_regions(const RegionList& regions, int rows, int cols);

/// Collapses a labeled mask to neuron/background, zeroing overlap pixels and every pixel
/// that has a differently-labeled pixel in its 8-neighbourhood.
BinaryMask merge_to_binary(const LabeledMask& labeled);

/// Union of region pixels without any separation step.
BinaryMask union_mask(const RegionList& regions, int rows, int cols);

// ---------------------------------------------------------------------------
// Datasets

struct DatasetBundle {
    std::string name;
    ImageSeries series;
    std::optional<RegionList> regions;
    std::map<std::string, std::string> tags;

    /// Throws ValidationError if a region leaves the series bounds.
    void validate() const;
};

struct DatasetStatistics {
    std::string name;
    int frame_count = 0;
    int height = 0;
    int width = 0;
    double mean_pixel_value = 0.0;
    std::optional<std::size_t> region_count;
    std::optional<double> neuron_fraction;  // of the merged binary mask
};

DatasetStatistics dataset_statistics(const DatasetBundle& bundle);

}  // namespace acis
