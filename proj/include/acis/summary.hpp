#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "acis/grid.hpp"
#include "acis/imaging_io.hpp"

namespace acis {

enum class SummaryKind { mean, max, min, std, corr, cosine };

std::string_view to_string(SummaryKind kind);
/// Accepts the names printed by to_string; throws ValidationError otherwise.
SummaryKind parse_summary_kind(std::string_view name);

struct Provenance {
    std::string dataset;
    int frame_count = 0;
};

/// A per-pixel statistic of a series over time.
class SummaryImage {
public:
    /// Throws ValidationError if values break the invariants of `kind` (non-finite values,
    /// mean/max/min outside the 16-bit range, negative std, similarity outside [-1, 1]).
    SummaryImage(Grid<double> values, SummaryKind kind, Provenance provenance);

    const Grid<double>& values() const noexcept { return values_; }
    SummaryKind kind() const noexcept { return kind_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    int rows() const noexcept { return values_.rows(); }
    int cols() const noexcept { return values_.cols(); }

private:
    Grid<double> values_;
    SummaryKind kind_;
    Provenance provenance_;
};

/// Zero-mean, unit-variance image fed to the network.
class NormalizedImage {
public:
    NormalizedImage() = default;
    explicit NormalizedImage(Grid<double> values, SummaryKind source = SummaryKind::mean)
        : values_(std::move(values)), source_(source) {}

    const Grid<double>& values() const noexcept { return values_; }
    SummaryKind source_kind() const noexcept { return source_; }
    int rows() const noexcept { return values_.rows(); }
    int cols() const noexcept { return values_.cols(); }

private:
    Grid<double> values_;
    SummaryKind source_ = SummaryKind::mean;
};

/// Mean, max, min or population standard deviation over time in one streaming pass.
/// Accumulation is exact integer arithmetic, so the result does not depend on `chunk`.
/// std needs at least two frames.
SummaryImage stat_summary(const ImageSeries& series, SummaryKind kind, int chunk = 64);

enum class SimilarityMetric { correlation, cosine };

/// Mean Pearson correlation (or cosine similarity) between each pixel's trace and the traces
/// of the other pixels in its (2·radius+1)² window. Neighbours outside the image are skipped;
/// pairs with a constant (correlation) or all-zero (cosine) trace count as 0.
SummaryImage neighborhood_similarity_summary(const ImageSeries& series, SimilarityMetric metric,
                                             int radius, int chunk = 64);

/// (x - mean) / std with population std over the whole image; all zeros when std is 0.
NormalizedImage normalize(const SummaryImage& summary);
NormalizedImage normalize(const Grid<double>& values, SummaryKind source = SummaryKind::mean);

/// Writes `<path>` as a float64 .npy array and `<path>.json` with kind and provenance.
void save_summary(const SummaryImage& summary, const std::filesystem::path& path);
SummaryImage load_summary(const std::filesystem::path& path);

}  // namespace acis
