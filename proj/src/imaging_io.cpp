#include "acis/imaging_io.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"
#include "acis/tiff.hpp"

namespace acis {

// ---------------------------------------------------------------------------
// NeuronRegion

NeuronRegion::NeuronRegion(std::vector<Pixel> coordinates) : coords_(std::move(coordinates)) {
    if (coords_.empty()) {
        throw ValidationError("neuron region has no coordinates");
    }
    std::vector<Pixel> sorted = coords_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("neuron region has duplicate coordinates");
    }
    if (sorted.front().row < 0 ||
        std::any_of(sorted.begin(), sorted.end(), [](const Pixel& p) { return p.col < 0; })) {
        throw ValidationError("neuron region has negative coordinates");
    }
}

bool NeuronRegion::within(int rows, int cols) const noexcept {
    return std::all_of(coords_.begin(), coords_.end(),
                       [&](const Pixel& p) { return p.row < rows && p.col < cols; });
}

bool NeuronRegion::same_pixels(const NeuronRegion& other) const {
    if (size() != other.size()) {
        return false;
    }
    std::vector<Pixel> a = coords_;
    std::vector<Pixel> b(other.coords_);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

// ---------------------------------------------------------------------------
// Frame sources

class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::vector<Frame> read(int first, int count) const = 0;
};

namespace {

class MemoryFrameSource final : public FrameSource {
public:
    explicit MemoryFrameSource(std::vector<Frame> frames) : frames_(std::move(frames)) {}
    std::vector<Frame> read(int first, int count) const override {
        return {frames_.begin() + first, frames_.begin() + first + count};
    }

private:
    std::vector<Frame> frames_;
};

Frame frame_from_mat(const cv::Mat& mat, int index, int rows, int cols, const FrameRef& ref) {
    if (mat.type() != CV_16UC1) {
        throw FormatError("frame " + std::to_string(index) + " (" + ref.file.string() + " page " +
                          std::to_string(ref.page) + "): expected 16-bit grayscale");
    }
    if (mat.rows != rows || mat.cols != cols) {
        throw FormatError("frame " + std::to_string(index) + ": dimension mismatch");
    }
    Frame frame(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto* src = mat.ptr<std::uint16_t>(r);
        std::copy(src, src + cols, frame.row(r).begin());
    }
    return frame;
}

class TiffFrameSource final : public FrameSource {
public:
    TiffFrameSource(std::vector<FrameRef> refs, int rows, int cols)
        : refs_(std::move(refs)), rows_(rows), cols_(cols) {}

    std::vector<Frame> read(int first, int count) const override {
        std::vector<Frame> out;
        out.reserve(static_cast<std::size_t>(count));
        int i = first;
        const int end = first + count;
        while (i < end) {
            // Batch consecutive pages of the same file into one decoder call.
            int run = 1;
            while (i + run < end && refs_[i + run].file == refs_[i].file &&
                   refs_[i + run].page == refs_[i].page + run) {
                ++run;
            }
            std::vector<cv::Mat> mats;
            bool ok = false;
            if (refs_[i].page == 0 && run == 1) {
                cv::Mat mat = cv::imread(refs_[i].file.string(), cv::IMREAD_UNCHANGED);
                ok = !mat.empty();
                mats.push_back(mat);
            } else {
                ok = cv::imreadmulti(refs_[i].file.string(), mats, refs_[i].page, run,
                                     cv::IMREAD_UNCHANGED);
            }
            if (!ok || static_cast<int>(mats.size()) != run) {
                throw IoError("cannot decode frame " + std::to_string(i) + " from " +
                              refs_[i].file.string());
            }
            for (int k = 0; k < run; ++k) {
                out.push_back(frame_from_mat(mats[static_cast<std::size_t>(k)], i + k, rows_, cols_,
                                             refs_[i + k]));
            }
            i += run;
        }
        return out;
    }

private:
    std::vector<FrameRef> refs_;
    int rows_;
    int cols_;
};

bool is_tiff_name(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".tif" || ext == ".tiff";
}

}  // namespace

ImageSeries ImageSeries::from_frames(std::vector<Frame> frames, std::string name) {
    if (frames.empty()) {
        throw ValidationError("image series needs at least one frame");
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!frames[i].same_shape(frames[0])) {
            throw ValidationError("frame " + std::to_string(i) + ": dimension mismatch (" +
                                  std::to_string(frames[i].rows()) + "x" + std::to_string(frames[i].cols()) +
                                  " vs " + std::to_string(frames[0].rows()) + "x" +
                                  std::to_string(frames[0].cols()) + ")");
        }
    }
    ImageSeries series;
    series.frame_count_ = static_cast<int>(frames.size());
    series.height_ = frames[0].rows();
    series.width_ = frames[0].cols();
    series.name_ = std::move(name);
    series.source_ = std::make_shared<MemoryFrameSource>(std::move(frames));
    return series;
}

Frame ImageSeries::read_frame(int index) const {
    if (index < 0 || index >= frame_count_) {
        throw std::out_of_range("frame index " + std::to_string(index) + " out of range");
    }
    return std::move(source_->read(index, 1).front());
}

void ImageSeries::for_each_frame(const FrameVisitor& visit, int chunk) const {
    chunk = std::max(chunk, 1);
    for (int first = 0; first < frame_count_; first += chunk) {
        const int count = std::min(chunk, frame_count_ - first);
        const auto frames = source_->read(first, count);
        for (int k = 0; k < count; ++k) {
            visit(first + k, frames[static_cast<std::size_t>(k)]);
        }
    }
}

ImageSeries load_series(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        throw IoError("series path does not exist: " + path.string());
    }
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path, ec)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && is_tiff_name(entry.path())) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end(),
                  [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
        if (files.empty()) {
            throw IoError("no TIFF files in " + path.string());
        }
    } else {
        files.push_back(path);
    }

    std::vector<FrameRef> refs;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    for (const auto& file : files) {
        const auto pages = tiff::read_pages(file);
        for (std::size_t p = 0; p < pages.size(); ++p) {
            const auto& page = pages[p];
            const auto index = std::to_string(refs.size());
            const auto where = " (" + file.string() + " page " + std::to_string(p) + ")";
            if (page.bits_per_sample != 16 || page.samples_per_pixel != 1 || page.sample_format == 3) {
                throw FormatError("frame " + index + where + ": unsupported pixel format, " +
                                  std::to_string(page.bits_per_sample) + "-bit x " +
                                  std::to_string(page.samples_per_pixel) +
                                  " samples (need 16-bit grayscale)");
            }
            if (refs.empty()) {
                rows = page.height;
                cols = page.width;
            } else if (page.height != rows || page.width != cols) {
                throw FormatError("frame " + index + where + ": dimension mismatch, " +
                                  std::to_string(page.height) + "x" + std::to_string(page.width) +
                                  " vs " + std::to_string(rows) + "x" + std::to_string(cols));
            }
            refs.push_back({file, static_cast<int>(p)});
        }
    }

    ImageSeries series;
    series.frame_count_ = static_cast<int>(refs.size());
    series.height_ = static_cast<int>(rows);
    series.width_ = static_cast<int>(cols);
    series.name_ = path.filename().string();
    series.source_ = std::make_shared<TiffFrameSource>(refs, series.height_, series.width_);
    series.refs_ = std::move(refs);
    return series;
}

void write_tiff(const std::filesystem::path& path, std::span<const Frame> frames) {
    if (frames.empty()) {
        throw ValidationError("write_tiff: no frames");
    }
    std::vector<cv::Mat> mats;
    mats.reserve(frames.size());
    for (const auto& frame : frames) {
        cv::Mat mat(frame.rows(), frame.cols(), CV_16UC1);
        for (int r = 0; r < frame.rows(); ++r) {
            std::copy(frame.row(r).begin(), frame.row(r).end(), mat.ptr<std::uint16_t>(r));
        }
        mats.push_back(std::move(mat));
    }
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const bool ok = mats.size() == 1 ? cv::imwrite(path.string(), mats.front())
                                     : cv::imwritemulti(path.string(), mats);
    if (!ok) {
        throw IoError("cannot write TIFF " + path.string());
    }
}

// ---------------------------------------------------------------------------
// Region files

RegionList regions_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("regions JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        throw FormatError("regions JSON: top level must be an array");
    }
    RegionList regions;
    regions.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object() || !item.contains("coordinates") || !item["coordinates"].is_array()) {
            throw FormatError("regions JSON: entry " + std::to_string(i) + " lacks a coordinates array");
        }
        std::vector<Pixel> pixels;
        pixels.reserve(item["coordinates"].size());
        for (const auto& pair : item["coordinates"]) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
                !pair[1].is_number_integer()) {
                throw FormatError("regions JSON: entry " + std::to_string(i) +
                                  " has a coordinate that is not an integer [row, col] pair");
            }
            pixels.push_back({pair[0].get<int>(), pair[1].get<int>()});
        }
        try {
            regions.emplace_back(std::move(pixels));
        } catch (const ValidationError& e) {
            throw ValidationError("regions JSON: entry " + std::to_string(i) + ": " + e.what());
        }
    }
    return regions;
}

std::string regions_to_json(const RegionList& regions) {
    auto doc = nlohmann::json::array();
    for (const auto& region : regions) {
        auto coords = nlohmann::json::array();
        for (const auto& p : region.coordinates()) {
            coords.push_back({p.row, p.col});
        }
        doc.push_back({{"coordinates", std::move(coords)}});
    }
    return doc.dump();
}

RegionList load_regions(const std::filesystem::path& path) {
    return regions_from_json(read_text_file(path));
}

void write_regions(const RegionList& regions, const std::filesystem::path& path) {
    write_file_atomic(path, regions_to_json(regions));
}

// ---------------------------------------------------------------------------
// Masks

LabeledMask rasterize_regions(const RegionList& regions, int rows, int cols) {
    LabeledMask mask(rows, cols, 0);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const auto label = static_cast<std::int32_t>(k + 1);
        for (const auto& p : regions[k].coordinates()) {
            if (!mask.contains(p.row, p.col)) {
                throw ValidationError("region " + std::to_string(k) + " coordinate (" +
                                      std::to_string(p.row) + ", " + std::to_string(p.col) +
                                      ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
            }
            auto& cell = mask(p.row, p.col);
            cell = cell == 0 ? label : kOverlapLabel;
        }
    }
    return mask;
}

BinaryMask merge_to_binary(const LabeledMask& labeled) {
    BinaryMask out(labeled.rows(), labeled.cols(), 0);
    for (int r = 0; r < labeled.rows(); ++r) {
        for (int c = 0; c < labeled.cols(); ++c) {
            const auto label = labeled(r, c);
            if (label <= 0) {
                continue;
            }
            bool touches_other = false;
            for (int dr = -1; dr <= 1 && !touches_other; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!labeled.contains(r + dr, c + dc)) {
                        continue;
                    }
                    const auto other = labeled(r + dr, c + dc);
                    if (other > 0 && other != label) {
                        touches_other = true;
                        break;
                    }
                }
            }
            out(r, c) = touches_other ? 0 : 1;
        }
    }
    return out;
}

BinaryMask union_mask(const RegionList& regions, int rows, int cols) {
    BinaryMask mask(rows, cols, 0);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        for (const auto& p : regions[k].coordinates()) {
            if (!mask.contains(p.row, p.col)) {
                throw ValidationError("region " + std::to_string(k) + " leaves the " +
                                      std::to_string(rows) + "x" + std::to_string(cols) + " image");
            }
            mask(p.row, p.col) = 1;
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Datasets

void DatasetBundle::validate() const {
    if (!regions) {
        return;
    }
    for (std::size_t k = 0; k < regions->size(); ++k) {
        if (!(*regions)[k].within(series.height(), series.width())) {
            throw ValidationError("dataset " + name + ": region " + std::to_string(k) +
                                  " lies outside the " + std::to_string(series.height()) + "x" +
                                  std::to_string(series.width()) + " frames");
        }
    }
}

DatasetStatistics dataset_statistics(const DatasetBundle& bundle) {
    DatasetStatistics stats;
    stats.name = bundle.name;
    stats.frame_count = bundle.series.frame_count();
    stats.height = bundle.series.height();
    stats.width = bundle.series.width();

    // 16-bit sums are exact in 64-bit integers for any realistic series length.
    std::uint64_t total = 0;
    bundle.series.for_each_frame([&](int, const Frame& frame) {
        for (const auto v : frame.values()) {
            total += v;
        }
    });
    const double pixels = static_cast<double>(stats.frame_count) * stats.height * stats.width;
    stats.mean_pixel_value = static_cast<double>(total) / pixels;

    if (bundle.regions) {
        stats.region_count = bundle.regions->size();
        const auto merged = merge_to_binary(rasterize_regions(*bundle.regions, stats.height, stats.width));
        const auto on = std::accumulate(merged.values().begin(), merged.values().end(), std::size_t{0});
        stats.neuron_fraction = static_cast<double>(on) / (static_cast<double>(stats.height) * stats.width);
    }
    return stats;
}

}  // namespace acis
