#pragma once

#include <filesystem>
#include <optional>

#include "acis/dihedral.hpp"
#include "acis/model.hpp"
#include "acis/postprocess.hpp"
#include "acis/summary.hpp"

namespace acis {

/// One full-image forward pass in infer mode. Images whose sides are not multiples of the
/// network divisor are rejected; pad them first (see pad_for_network).
ProbabilityMap predict_full(Network& net, const NormalizedImage& image);

/// Mean of g⁻¹(f(g(x))) over the 8 square symmetries, accumulated in double in a fixed order.
/// Non-square images use the 4 symmetries that keep their shape.
ProbabilityMap predict_augmented(Network& net, const NormalizedImage& image);

/// Symmetries used by predict_augmented for an image of this shape.
std::span<const Dihedral> augmentation_group(int rows, int cols);

/// Zero-pads bottom/right to the network divisor. Zero is the normalized mean.
NormalizedImage pad_for_network(const NormalizedImage& image, int divisor);

/// Runs `predict_*` on the padded image and crops back to the original extent.
ProbabilityMap predict_padded(Network& net, const NormalizedImage& image, bool augment);

struct SegmentOptions {
    double threshold = kDefaultThreshold;
    int min_region_size = kDefaultMinRegionSize;
    bool augment = true;
    SummaryKind summary = SummaryKind::mean;
    int similarity_radius = 1;  // only for corr/cosine summaries
};

struct SegmentTiming {
    double summary_seconds = 0.0;  // includes reading the frames
    double inference_seconds = 0.0;
    double postprocess_seconds = 0.0;
    double total_seconds = 0.0;
    int frame_count = 0;
    /// Frames processed per minute of total wall time.
    double frames_per_minute() const { return total_seconds > 0 ? frame_count * 60.0 / total_seconds : 0.0; }
};

struct SegmentResult {
    SummaryImage summary;
    ProbabilityMap probabilities;
    BinaryMask mask;
    RegionList regions;
    SegmentTiming timing;
};

/// Raw series to neuron regions: summary, normalization, network, threshold, components.
SegmentResult segment_series(const ImageSeries& series, Network& net, const SegmentOptions& options = {});

}  // namespace acis
