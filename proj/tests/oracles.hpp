#pragma once

// Independent reference computations used only by tests. None of these call into the
// implementation they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "acis/grid.hpp"
#include "acis/imaging_io.hpp"
#include "acis/summary.hpp"

namespace acis::oracle {

struct GreedyOutcome {
    std::vector<std::optional<std::size_t>> match_of_gt;  // pred index per gt, if any
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Step-by-step replay of the scorer's procedure: keep a shrinking list of remaining
/// candidates, take the first minimum for every ground-truth neuron, delete it on success.
inline GreedyOutcome greedy_match(const RegionList& gt, const RegionList& pred, double threshold) {
    auto centre = [](const NeuronRegion& r) {
        long double sr = 0, sc = 0;
        for (const auto& p : r.coordinates()) {
            sr += p.row;
            sc += p.col;
        }
        return std::pair<double, double>(static_cast<double>(sr / r.size()), static_cast<double>(sc / r.size()));
    };
    struct Candidate {
        std::size_t index;
        std::pair<double, double> centre;
    };
    std::vector<Candidate> remaining;
    for (std::size_t i = 0; i < pred.size(); ++i) remaining.push_back({i, centre(pred[i])});

    GreedyOutcome out;
    std::size_t matched = 0;
    for (const auto& g : gt) {
        const auto cg = centre(g);
        if (remaining.empty()) {
            out.match_of_gt.push_back(std::nullopt);
            continue;
        }
        std::vector<double> dists;
        for (const auto& cand : remaining) {
            dists.push_back(std::hypot(cg.first - cand.centre.first, cg.second - cand.centre.second));
        }
        std::size_t arg = 0;
        for (std::size_t k = 1; k < dists.size(); ++k) {
            if (dists[k] < dists[arg]) arg = k;
        }
        if (dists[arg] < threshold) {
            out.match_of_gt.push_back(remaining[arg].index);
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(arg));
            ++matched;
        } else {
            out.match_of_gt.push_back(std::nullopt);
        }
    }
    out.recall = gt.empty() ? 1.0 : static_cast<double>(matched) / static_cast<double>(gt.size());
    out.precision = pred.empty() ? 1.0 : static_cast<double>(matched) / static_cast<double>(pred.size());
    out.f1 = (out.precision + out.recall) == 0 ? 0.0
                                                : 2 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

/// Connected components by repeated union of 8-adjacent pixel pairs (no flood fill).
inline std::vector<std::set<Pixel>> components_by_union(const BinaryMask& mask) {
    std::map<Pixel, Pixel> parent;
    std::function<Pixel(Pixel)> find = [&](Pixel p) {
        while (!(parent[p] == p)) p = parent[p];
        return p;
    };
    for (int r = 0; r < mask.rows(); ++r)
        for (int c = 0; c < mask.cols(); ++c)
            if (mask(r, c)) parent[{r, c}] = {r, c};
    for (const auto& [p, unused] : parent) {
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const Pixel q{p.row + dr, p.col + dc};
                if (parent.count(q)) {
                    const auto a = find(p);
                    const auto b = find(q);
                    if (!(a == b)) parent[a] = b;
                }
            }
        }
    }
    std::map<Pixel, std::set<Pixel>> groups;
    for (const auto& [p, unused] : parent) groups[find(p)].insert(p);
    std::vector<std::set<Pixel>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

/// Whole-stack reference: materialise every trace and reduce it directly in double precision.
inline Grid<double> full_stack_reference(const std::vector<Frame>& frames, SummaryKind kind) {
    const int rows = frames[0].rows();
    const int cols = frames[0].cols();
    Grid<double> out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::vector<double> trace;
            for (const auto& f : frames) trace.push_back(f(r, c));
            double mean = 0.0;
            for (double v : trace) mean += v;
            mean /= static_cast<double>(trace.size());
            double var = 0.0;
            for (double v : trace) var += (v - mean) * (v - mean);
            var /= static_cast<double>(trace.size());
            switch (kind) {
                case SummaryKind::mean: out(r, c) = mean; break;
                case SummaryKind::std: out(r, c) = std::sqrt(var); break;
                case SummaryKind::max: out(r, c) = *std::max_element(trace.begin(), trace.end()); break;
                case SummaryKind::min: out(r, c) = *std::min_element(trace.begin(), trace.end()); break;
                default: break;
            }
        }
    }
    return out;
}

/// Per-pair brute force with two-pass moments.
inline Grid<double> similarity_reference(const std::vector<Frame>& frames, SimilarityMetric metric, int radius) {
    const int rows = frames[0].rows();
    const int cols = frames[0].cols();
    auto trace = [&](int r, int c) {
        std::vector<double> t;
        for (const auto& f : frames) t.push_back(f(r, c));
        return t;
    };
    auto pair_value = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double n = static_cast<double>(a.size());
        if (metric == SimilarityMetric::cosine) {
            double ab = 0, aa = 0, bb = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                ab += a[i] * b[i];
                aa += a[i] * a[i];
                bb += b[i] * b[i];
            }
            return (aa == 0 || bb == 0) ? 0.0 : ab / std::sqrt(aa * bb);
        }
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ma += a[i];
            mb += b[i];
        }
        ma /= n;
        mb /= n;
        double cov = 0, va = 0, vb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            cov += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        return (va == 0 || vb == 0) ? 0.0 : cov / std::sqrt(va * vb);
    };
    Grid<double> out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double total = 0;
            int count = 0;
            for (int dr = -radius; dr <= radius; ++dr) {
                for (int dc = -radius; dc <= radius; ++dc) {
                    if ((dr == 0 && dc == 0) || !out.contains(r + dr, c + dc)) continue;
                    total += pair_value(trace(r, c), trace(r + dr, c + dc));
                    ++count;
                }
            }
            out(r, c) = total / count;
        }
    }
    return out;
}

/// True when no 8-connected component of `merged` holds pixels of two different labels
/// (and no merged pixel is unlabeled or overlapping).
inline bool merge_separates_labels(const BinaryMask& merged, const LabeledMask& labeled) {
    for (const auto& comp : components_by_union(merged)) {
        std::set<int> labels;
        for (const auto& p : comp) labels.insert(labeled(p.row, p.col));
        if (labels.size() != 1 || *labels.begin() <= 0) return false;
    }
    return true;
}

}  // namespace acis::oracle
