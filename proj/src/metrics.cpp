#include "acis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "acis/errors.hpp"

namespace acis {

Centroid centroid(const NeuronRegion& region) {
    double r = 0.0;
    double c = 0.0;
    for (const auto& p : region.coordinates()) {
        r += p.row;
        c += p.col;
    }
    const auto n = static_cast<double>(region.size());
    return {r / n, c / n};
}

double centroid_distance(const NeuronRegion& a, const NeuronRegion& b) {
    const auto ca = centroid(a);
    const auto cb = centroid(b);
    const double dr = ca.row - cb.row;
    const double dc = ca.col - cb.col;
    return std::sqrt(dr * dr + dc * dc);
}

MatchResult match_regions(const RegionList& gt, const RegionList& pred, double max_distance) {
    if (!(max_distance > 0.0)) {
        throw ValidationError("match distance must be positive");
    }
    MatchResult result;
    result.gt_count = gt.size();
    result.pred_count = pred.size();

    std::vector<Centroid> pred_centres;
    pred_centres.reserve(pred.size());
    for (const auto& region : pred) {
        pred_centres.push_back(centroid(region));
    }
    std::vector<bool> claimed(pred.size(), false);

    for (std::size_t g = 0; g < gt.size(); ++g) {
        const auto cg = centroid(gt[g]);
        std::size_t best = pred.size();
        double best_distance = 0.0;
        for (std::size_t p = 0; p < pred.size(); ++p) {
            if (claimed[p]) {
                continue;
            }
            const double dr = cg.row - pred_centres[p].row;
            const double dc = cg.col - pred_centres[p].col;
            const double d = std::sqrt(dr * dr + dc * dc);
            if (best == pred.size() || d < best_distance) {
                best = p;
                best_distance = d;
            }
        }
        if (best < pred.size() && best_distance < max_distance) {
            claimed[best] = true;
            result.pairs.push_back({g, best, best_distance});
        } else {
            result.unmatched_gt.push_back(g);
        }
    }
    for (std::size_t p = 0; p < pred.size(); ++p) {
        if (!claimed[p]) {
            result.unmatched_pred.push_back(p);
        }
    }
    return result;
}

PrecisionRecall precision_recall_f1(const MatchResult& match) {
    const auto matched = static_cast<double>(match.pairs.size());
    PrecisionRecall out;
    out.recall = match.gt_count == 0 ? 1.0 : matched / static_cast<double>(match.gt_count);
    out.precision = match.pred_count == 0 ? 1.0 : matched / static_cast<double>(match.pred_count);
    const double denom = out.precision + out.recall;
    out.f1 = denom == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / denom;
    return out;
}

InclusionExclusion inclusion_exclusion(const MatchResult& match, const RegionList& gt, const RegionList& pred) {
    if (match.pairs.empty()) {
        return {};
    }
    double inclusion = 0.0;
    double exclusion = 0.0;
    for (const auto& pair : match.pairs) {
        const auto& a = gt.at(pair.gt);
        const auto& b = pred.at(pair.pred);
        const std::set<Pixel> other(b.coordinates().begin(), b.coordinates().end());
        const auto hits = static_cast<double>(std::count_if(a.coordinates().begin(), a.coordinates().end(),
                                                            [&](const Pixel& p) { return other.count(p) > 0; }));
        inclusion += hits / static_cast<double>(a.size());
        exclusion += hits / static_cast<double>(b.size());
    }
    const auto n = static_cast<double>(match.pairs.size());
    return {inclusion / n, exclusion / n};
}

double pixelwise_f1(const BinaryMask& predicted, const BinaryMask& truth) {
    if (!predicted.same_shape(truth)) {
        throw ValidationError("pixelwise_f1: mask shapes differ");
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    const auto a = predicted.values();
    const auto b = truth.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool p = a[i] != 0;
        const bool t = b[i] != 0;
        tp += static_cast<std::size_t>(p && t);
        fp += static_cast<std::size_t>(p && !t);
        fn += static_cast<std::size_t>(!p && t);
    }
    if (tp + fp + fn == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

EvalReport evaluate_dataset(const RegionList& gt, const RegionList& pred, int rows, int cols, double max_distance) {
    const auto match = match_regions(gt, pred, max_distance);
    const auto pr = precision_recall_f1(match);
    const auto ie = inclusion_exclusion(match, gt, pred);
    EvalReport report;
    report.f1 = pr.f1;
    report.precision = pr.precision;
    report.recall = pr.recall;
    report.inclusion = ie.inclusion;
    report.exclusion = ie.exclusion;
    report.pixelwise_f1 = pixelwise_f1(union_mask(pred, rows, cols), union_mask(gt, rows, cols));
    report.gt_count = gt.size();
    report.pred_count = pred.size();
    report.matched = match.pairs.size();
    return report;
}

namespace {

struct Column {
    const char* name;
    double EvalReport::*field;
};

constexpr Column kColumns[] = {
    {"F1", &EvalReport::f1},
    {"Precision", &EvalReport::precision},
    {"Recall", &EvalReport::recall},
    {"Inclusion", &EvalReport::inclusion},
    {"Exclusion", &EvalReport::exclusion},
    {"Pixel F1", &EvalReport::pixelwise_f1},
};

std::pair<double, double> mean_std(std::span<const NamedReport> reports, double EvalReport::*field) {
    if (reports.empty()) {
        return {0.0, 0.0};
    }
    double mean = 0.0;
    for (const auto& r : reports) mean += r.report.*field;
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    for (const auto& r : reports) var += (r.report.*field - mean) * (r.report.*field - mean);
    return {mean, std::sqrt(var / static_cast<double>(reports.size()))};
}

nlohmann::json report_json(const EvalReport& r) {
    return {{"f1", r.f1},
            {"precision", r.precision},
            {"recall", r.recall},
            {"inclusion", r.inclusion},
            {"exclusion", r.exclusion},
            {"pixelwise_f1", r.pixelwise_f1},
            {"gt_count", r.gt_count},
            {"pred_count", r.pred_count},
            {"matched", r.matched}};
}

}  // namespace

std::string format_report_table(std::span<const NamedReport> reports) {
    std::size_t name_width = 7;
    for (const auto& r : reports) name_width = std::max(name_width, r.dataset.size());

    std::ostringstream out;
    char buf[64];
    auto pad = [&](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    out << pad("Dataset", name_width);
    for (const auto& col : kColumns) {
        out << " | " << pad(col.name, 15);
    }
    out << '\n' << std::string(name_width, '-');
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << "-+-" << std::string(15, '-');
    out << '\n';
    for (const auto& r : reports) {
        out << pad(r.dataset, name_width);
        for (const auto& col : kColumns) {
            std::snprintf(buf, sizeof buf, "%.3f", r.report.*(col.field));
            out << " | " << pad(buf, 15);
        }
        out << '\n';
    }
    out << pad("mean", name_width);
    for (const auto& col : kColumns) {
        const auto [m, s] = mean_std(reports, col.field);
        std::snprintf(buf, sizeof buf, "%.3f ±%.3f", m, s);
        out << " | " << pad(buf, 16);
    }
    out << '\n';
    return out.str();
}

std::string reports_to_json(std::span<const NamedReport> reports) {
    auto items = nlohmann::json::array();
    for (const auto& r : reports) {
        auto item = report_json(r.report);
        item["dataset"] = r.dataset;
        items.push_back(std::move(item));
    }
    nlohmann::json mean = nlohmann::json::object();
    nlohmann::json stdev = nlohmann::json::object();
    const char* keys[] = {"f1", "precision", "recall", "inclusion", "exclusion", "pixelwise_f1"};
    for (std::size_t i = 0; i < std::size(kColumns); ++i) {
        const auto [m, s] = mean_std(reports, kColumns[i].field);
        mean[keys[i]] = m;
        stdev[keys[i]] = s;
    }
    return nlohmann::json{{"datasets", items}, {"mean", mean}, {"std", stdev}}.dump(2);
}

}  // namespace acis
