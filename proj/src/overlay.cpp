#include "acis/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "acis/errors.hpp"

namespace acis {

std::vector<Pixel> region_boundary(const NeuronRegion& region) {
    const std::set<Pixel> inside(region.coordinates().begin(), region.coordinates().end());
    std::vector<Pixel> boundary;
    for (const auto& p : region.coordinates()) {
        const Pixel neighbours[] = {{p.row - 1, p.col}, {p.row + 1, p.col}, {p.row, p.col - 1}, {p.row, p.col + 1}};
        if (std::any_of(std::begin(neighbours), std::end(neighbours),
                        [&](const Pixel& q) { return inside.count(q) == 0; })) {
            boundary.push_back(p);
        }
    }
    return boundary;
}

RgbImage render_overlay(const Grid<double>& background, const RegionList* gt, const RegionList& pred) {
    double lo = 0.0;
    double hi = 0.0;
    if (!background.empty()) {
        const auto [mn, mx] = std::minmax_element(background.values().begin(), background.values().end());
        lo = *mn;
        hi = *mx;
    }
    RgbImage image(background.rows(), background.cols());
    for (int r = 0; r < background.rows(); ++r) {
        for (int c = 0; c < background.cols(); ++c) {
            const double scaled = hi > lo ? (background(r, c) - lo) / (hi - lo) * 255.0 : 0.0;
            const auto v = static_cast<std::uint8_t>(std::clamp(std::lround(scaled), 0L, 255L));
            image(r, c) = {v, v, v};
        }
    }
    auto draw = [&](const RegionList& regions, Rgb color) {
        for (const auto& region : regions) {
            for (const auto& p : region_boundary(region)) {
                if (image.contains(p.row, p.col)) {
                    image(p.row, p.col) = color;
                }
            }
        }
    };
    if (gt != nullptr) {
        draw(*gt, kGroundTruthColor);
    }
    draw(pred, kPredictionColor);
    return image;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    cv::Mat mat(image.rows(), image.cols(), CV_8UC3);
    for (int r = 0; r < image.rows(); ++r) {
        auto* row = mat.ptr<cv::Vec3b>(r);
        for (int c = 0; c < image.cols(); ++c) {
            const auto& px = image(r, c);
            row[c] = cv::Vec3b(px[2], px[1], px[0]);
        }
    }
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp.png";
    if (!cv::imwrite(tmp.string(), mat)) {
        throw IoError("cannot write PNG " + path.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename into " + path.string());
    }
}

RgbImage read_png(const std::filesystem::path& path) {
    const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty()) {
        throw IoError("cannot read image " + path.string());
    }
    RgbImage image(mat.rows, mat.cols);
    for (int r = 0; r < mat.rows; ++r) {
        const auto* row = mat.ptr<cv::Vec3b>(r);
        for (int c = 0; c < mat.cols; ++c) {
            image(r, c) = {row[c][2], row[c][1], row[c][0]};
        }
    }
    return image;
}

}  // namespace acis
