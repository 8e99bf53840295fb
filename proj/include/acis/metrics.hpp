#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acis/grid.hpp"
#include "acis/imaging_io.hpp"

namespace acis {

struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

Centroid centroid(const NeuronRegion& region);
double centroid_distance(const NeuronRegion& a, const NeuronRegion& b);

/// Default matching radius in pixels, as used by the Neurofinder scorer.
inline constexpr double kDefaultMatchDistance = 5.0;

struct MatchPair {
    std::size_t gt = 0;
    std::size_t pred = 0;
    double distance = 0.0;
};

struct MatchResult {
    std::vector<MatchPair> pairs;  // in ascending gt order
    std::vector<std::size_t> unmatched_gt;
    std::vector<std::size_t> unmatched_pred;
    std::size_t gt_count = 0;
    std::size_t pred_count = 0;
};

/// Greedy matching without replacement. Ground-truth regions are visited in index order;
/// each takes the nearest unclaimed prediction by centroid distance (lowest index on ties)
/// when that distance is strictly below `max_distance`.
MatchResult match_regions(const RegionList& gt, const RegionList& pred,
                          double max_distance = kDefaultMatchDistance);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// recall = matched/|gt| (1 when gt is empty), precision = matched/|pred| (1 when pred is
/// empty), f1 their harmonic mean (0 when both are 0).
PrecisionRecall precision_recall_f1(const MatchResult& match);

struct InclusionExclusion {
    double inclusion = 0.0;  // mean |gt ∩ pred| / |gt| over matched pairs
    double exclusion = 0.0;  // mean |gt ∩ pred| / |pred| over matched pairs
};

InclusionExclusion inclusion_exclusion(const MatchResult& match, const RegionList& gt, const RegionList& pred);

/// Pixel F1 of `predicted` against `truth`. Two masks without any positive pixel agree
/// perfectly and score 1.
double pixelwise_f1(const BinaryMask& predicted, const BinaryMask& truth);

struct EvalReport {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double inclusion = 0.0;
    double exclusion = 0.0;
    double pixelwise_f1 = 0.0;
    std::size_t gt_count = 0;
    std::size_t pred_count = 0;
    std::size_t matched = 0;
};

EvalReport evaluate_dataset(const RegionList& gt, const RegionList& pred, int rows, int cols,
                            double max_distance = kDefaultMatchDistance);

struct NamedReport {
    std::string dataset;
    EvalReport report;
};

/// Plain-text table: one row per dataset plus a "mean ± std" row (population std).
std::string format_report_table(std::span<const NamedReport> reports);
/// Same content as JSON: {"datasets": [...], "mean": {...}, "std": {...}}.
std::string reports_to_json(std::span<const NamedReport> reports);

}  // namespace acis
