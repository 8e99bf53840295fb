#include "acis/summary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"
#include "acis/npy.hpp"

namespace acis {

namespace {

constexpr std::array<std::pair<SummaryKind, std::string_view>, 6> kKindNames = {{
    {SummaryKind::mean, "mean"},
    {SummaryKind::max, "max"},
    {SummaryKind::min, "min"},
    {SummaryKind::std, "std"},
    {SummaryKind::corr, "corr"},
    {SummaryKind::cosine, "cosine"},
}};

using Int128 = __int128;

}  // namespace

std::string_view to_string(SummaryKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

SummaryKind parse_summary_kind(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) {
            return k;
        }
    }
    throw ValidationError("unknown summary kind '" + std::string(name) + "'");
}

SummaryImage::SummaryImage(Grid<double> values, SummaryKind kind, Provenance provenance)
    : values_(std::move(values)), kind_(kind), provenance_(std::move(provenance)) {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case SummaryKind::mean:
        case SummaryKind::max:
        case SummaryKind::min: hi = 65535.0; break;
        case SummaryKind::std: break;
        case SummaryKind::corr:
        case SummaryKind::cosine:
            lo = -1.0;
            hi = 1.0;
            break;
    }
    for (const double v : values_.values()) {
        if (!std::isfinite(v) || v < lo || v > hi) {
            throw ValidationError(std::string(to_string(kind_)) + " summary value " + std::to_string(v) +
                                  " violates its range");
        }
    }
}

SummaryImage stat_summary(const ImageSeries& series, SummaryKind kind, int chunk) {
    if (kind == SummaryKind::corr || kind == SummaryKind::cosine) {
        throw ValidationError("stat_summary handles mean/max/min/std; use neighborhood_similarity_summary");
    }
    const int frames = series.frame_count();
    if (kind == SummaryKind::std && frames < 2) {
        throw ValidationError("std summary of '" + series.name() + "' needs at least 2 frames, got " +
                              std::to_string(frames));
    }
    const auto n = static_cast<std::size_t>(series.height()) * static_cast<std::size_t>(series.width());

    std::vector<std::uint64_t> sum;
    std::vector<std::uint64_t> sum_sq;
    std::vector<std::uint16_t> extreme;
    switch (kind) {
        case SummaryKind::mean: sum.assign(n, 0); break;
        case SummaryKind::std:
            sum.assign(n, 0);
            sum_sq.assign(n, 0);
            break;
        case SummaryKind::max: extreme.assign(n, 0); break;
        case SummaryKind::min: extreme.assign(n, std::numeric_limits<std::uint16_t>::max()); break;
        default: break;
    }

    series.for_each_frame(
        [&](int, const Frame& frame) {
            const auto px = frame.values();
            switch (kind) {
                case SummaryKind::mean:
                    for (std::size_t i = 0; i < n; ++i) sum[i] += px[i];
                    break;
                case SummaryKind::std:
                    for (std::size_t i = 0; i < n; ++i) {
                        sum[i] += px[i];
                        sum_sq[i] += static_cast<std::uint64_t>(px[i]) * px[i];
                    }
                    break;
                case SummaryKind::max:
                    for (std::size_t i = 0; i < n; ++i) extreme[i] = std::max(extreme[i], px[i]);
                    break;
                case SummaryKind::min:
                    for (std::size_t i = 0; i < n; ++i) extreme[i] = std::min(extreme[i], px[i]);
                    break;
                default: break;
            }
        },
        chunk);

    Grid<double> out(series.height(), series.width());
    auto values = out.values();
    const double t = frames;
    for (std::size_t i = 0; i < n; ++i) {
        switch (kind) {
            case SummaryKind::mean: values[i] = static_cast<double>(sum[i]) / t; break;
            case SummaryKind::std: {
                // T²·var = T·Σx² − (Σx)², exact in 128-bit integers.
                const Int128 scaled = static_cast<Int128>(frames) * sum_sq[i] -
                                      static_cast<Int128>(sum[i]) * static_cast<Int128>(sum[i]);
                values[i] = std::sqrt(static_cast<double>(scaled)) / t;
                break;
            }
            default: values[i] = extreme[i]; break;
        }
    }
    return SummaryImage(std::move(out), kind, {series.name(), frames});
}

SummaryImage neighborhood_similarity_summary(const ImageSeries& series, SimilarityMetric metric, int radius,
                                             int chunk) {
    const int frames = series.frame_count();
    if (frames < 2) {
        throw ValidationError("neighbourhood similarity needs at least 2 frames");
    }
    if (radius < 1) {
        throw ValidationError("neighbourhood radius must be at least 1");
    }
    const int rows = series.height();
    const int cols = series.width();
    const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);

    // Half of the window; the mirrored offsets reuse the same cross sums.
    std::vector<std::pair<int, int>> offsets;
    for (int dr = 0; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
            if (dr > 0 || dc > 0) {
                offsets.emplace_back(dr, dc);
            }
        }
    }

    std::vector<std::uint64_t> sum(n, 0);
    std::vector<std::uint64_t> sum_sq(n, 0);
    std::vector<std::vector<std::uint64_t>> cross(offsets.size(), std::vector<std::uint64_t>(n, 0));

    series.for_each_frame(
        [&](int, const Frame& frame) {
            const auto px = frame.values();
            for (std::size_t i = 0; i < n; ++i) {
                sum[i] += px[i];
                sum_sq[i] += static_cast<std::uint64_t>(px[i]) * px[i];
            }
            for (std::size_t o = 0; o < offsets.size(); ++o) {
                const auto [dr, dc] = offsets[o];
                auto& acc = cross[o];
                for (int r = 0; r + dr < rows; ++r) {
                    const int c0 = std::max(0, -dc);
                    const int c1 = std::min(cols, cols - dc);
                    const std::size_t base = static_cast<std::size_t>(r) * cols;
                    const std::size_t shifted = static_cast<std::size_t>(r + dr) * cols;
                    for (int c = c0; c < c1; ++c) {
                        acc[base + c] += static_cast<std::uint64_t>(px[base + c]) * px[shifted + c + dc];
                    }
                }
            }
        },
        chunk);

    const Int128 t = frames;
    auto pair_similarity = [&](std::size_t a, std::size_t b, std::uint64_t sab) -> double {
        if (metric == SimilarityMetric::cosine) {
            if (sum_sq[a] == 0 || sum_sq[b] == 0) {
                return 0.0;
            }
            return static_cast<double>(sab) /
                   std::sqrt(static_cast<double>(sum_sq[a]) * static_cast<double>(sum_sq[b]));
        }
        const Int128 va = t * sum_sq[a] - static_cast<Int128>(sum[a]) * sum[a];
        const Int128 vb = t * sum_sq[b] - static_cast<Int128>(sum[b]) * sum[b];
        if (va == 0 || vb == 0) {
            return 0.0;
        }
        const Int128 cov = t * sab - static_cast<Int128>(sum[a]) * sum[b];
        return static_cast<double>(cov) / std::sqrt(static_cast<double>(va) * static_cast<double>(vb));
    };

    std::vector<double> total(n, 0.0);
    std::vector<int> count(n, 0);
    for (std::size_t o = 0; o < offsets.size(); ++o) {
        const auto [dr, dc] = offsets[o];
        for (int r = 0; r + dr < rows; ++r) {
            for (int c = std::max(0, -dc); c < std::min(cols, cols - dc); ++c) {
                const std::size_t a = static_cast<std::size_t>(r) * cols + c;
                const std::size_t b = static_cast<std::size_t>(r + dr) * cols + (c + dc);
                const double s = std::clamp(pair_similarity(a, b, cross[o][a]), -1.0, 1.0);
                total[a] += s;
                total[b] += s;
                ++count[a];
                ++count[b];
            }
        }
    }

    Grid<double> out(rows, cols);
    auto values = out.values();
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = count[i] > 0 ? total[i] / count[i] : 0.0;
    }
    const auto kind = metric == SimilarityMetric::cosine ? SummaryKind::cosine : SummaryKind::corr;
    return SummaryImage(std::move(out), kind, {series.name(), frames});
}

NormalizedImage normalize(const Grid<double>& values, SummaryKind source) {
    const auto v = values.values();
    if (v.empty()) {
        return NormalizedImage(values, source);
    }
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);

    Grid<double> out(values.rows(), values.cols(), 0.0);
    if (sd > 0.0) {
        auto o = out.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            o[i] = (v[i] - mean) / sd;
        }
    }
    return NormalizedImage(std::move(out), source);
}

NormalizedImage normalize(const SummaryImage& summary) { return normalize(summary.values(), summary.kind()); }

void save_summary(const SummaryImage& summary, const std::filesystem::path& path) {
    npy::write(path, summary.values());
    const nlohmann::json meta = {{"kind", std::string(to_string(summary.kind()))},
                                 {"dataset", summary.provenance().dataset},
                                 {"frame_count", summary.provenance().frame_count},
                                 {"shape", {summary.rows(), summary.cols()}}};
    auto sidecar = path;
    sidecar += ".json";
    write_file_atomic(sidecar, meta.dump(2));
}

SummaryImage load_summary(const std::filesystem::path& path) {
    auto sidecar = path;
    sidecar += ".json";
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(sidecar));
        return SummaryImage(npy::read(path), parse_summary_kind(meta.at("kind").get<std::string>()),
                            {meta.at("dataset").get<std::string>(), meta.at("frame_count").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("summary sidecar " + sidecar.string() + ": " + e.what());
    }
}

}  // namespace acis
