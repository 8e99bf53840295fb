#include "acis/prediction.hpp"

#include <chrono>

#include <fmt/format.h>

#include "acis/errors.hpp"
#include "acis/log.hpp"

namespace acis {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Grid<double> neuron_channel(const torch::Tensor& probs) {
    return to_grid(probs.index({0, 1}));
}

SummaryImage compute_summary(const ImageSeries& series, const SegmentOptions& options) {
    switch (options.summary) {
        case SummaryKind::corr:
            return neighborhood_similarity_summary(series, SimilarityMetric::correlation, options.similarity_radius);
        case SummaryKind::cosine:
            return neighborhood_similarity_summary(series, SimilarityMetric::cosine, options.similarity_radius);
        default:
            return stat_summary(series, options.summary);
    }
}

}  // namespace

ProbabilityMap predict_full(Network& net, const NormalizedImage& image) {
    net.check_input_shape(image.rows(), image.cols());
    const auto input = to_tensor(image.values(), net.dtype()).unsqueeze(0).unsqueeze(0);
    return neuron_channel(net.forward(input, Mode::infer));
}

std::span<const Dihedral> augmentation_group(int rows, int cols) {
    if (rows == cols) return kDihedralGroup;
    return kShapePreservingSubgroup;
}

ProbabilityMap predict_augmented(Network& net, const NormalizedImage& image) {
    net.check_input_shape(image.rows(), image.cols());
    const auto group = augmentation_group(image.rows(), image.cols());
    if (group.size() != kDihedralGroup.size()) {
        log::warn(fmt::format("{}x{} input is not square; averaging over the 4 shape-preserving symmetries",
                              image.rows(), image.cols()));
    }
    ProbabilityMap sum(image.rows(), image.cols(), 0.0);
    for (const Dihedral g : group) {
        const NormalizedImage transformed(apply(g, image.values()), image.source_kind());
        const auto back = apply(g.inverse(), predict_full(net, transformed));
        for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += back.values()[i];
    }
    const double n = static_cast<double>(group.size());
    for (auto& v : sum.values()) v /= n;
    return sum;
}

NormalizedImage pad_for_network(const NormalizedImage& image, int divisor) {
    return NormalizedImage(pad_to_multiple(image.values(), divisor, 0.0), image.source_kind());
}

ProbabilityMap predict_padded(Network& net, const NormalizedImage& image, bool augment) {
    const auto padded = pad_for_network(image, net.config().divisor());
    const auto map = augment ? predict_augmented(net, padded) : predict_full(net, padded);
    return map.crop(0, 0, image.rows(), image.cols());
}

SegmentResult segment_series(const ImageSeries& series, Network& net, const SegmentOptions& options) {
    const auto start = Clock::now();
    SegmentResult out{compute_summary(series, options), {}, {}, {}, {}};
    out.timing.summary_seconds = seconds_since(start);

    const auto t_infer = Clock::now();
    out.probabilities = predict_padded(net, normalize(out.summary), options.augment);
    out.timing.inference_seconds = seconds_since(t_infer);

    const auto t_post = Clock::now();
    out.mask = binarize(out.probabilities, options.threshold);
    out.regions = extract_regions(out.mask, options.min_region_size);
    out.timing.postprocess_seconds = seconds_since(t_post);

    out.timing.total_seconds = seconds_since(start);
    out.timing.frame_count = series.frame_count();
    return out;
}

}  // namespace acis
