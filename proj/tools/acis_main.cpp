// acis: command-line front end for summaries, training, prediction and scoring.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"
#include "acis/imaging_io.hpp"
#include "acis/log.hpp"
#include "acis/manifest.hpp"
#include "acis/metrics.hpp"
#include "acis/model.hpp"
#include "acis/npy.hpp"
#include "acis/overlay.hpp"
#include "acis/prediction.hpp"
#include "acis/summary.hpp"
#include "acis/synthetic.hpp"
#include "acis/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace acis {
namespace {

struct PredictSettings {
    double threshold = kDefaultThreshold;
    int min_region_size = kDefaultMinRegionSize;
    bool tta = true;
};

/// Everything a command may need. Loaded from --config, then overridden by flags.
struct ProjectConfig {
    std::optional<fs::path> data_root;
    std::optional<fs::path> manifest;
    fs::path output_dir = "acis_out";
    std::uint64_t seed = 0;
    ModelConfig model;
    TrainConfig train;
    PredictSettings predict;

    static ProjectConfig load(const fs::path& path) {
        ProjectConfig c;
        json j;
        try {
            j = json::parse(read_text_file(path));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        const fs::path base = path.parent_path();
        auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
        try {
            if (j.contains("data_root")) c.data_root = resolve(j.at("data_root").get<std::string>());
            if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
            if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
            c.seed = j.value("seed", c.seed);
            if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
            if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
            if (j.contains("predict")) {
                const auto& p = j.at("predict");
                c.predict.threshold = p.value("threshold", c.predict.threshold);
                c.predict.min_region_size = p.value("min_region_size", c.predict.min_region_size);
                c.predict.tta = p.value("tta", c.predict.tta);
            }
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        return c;
    }

    json to_json() const {
        json j = {{"output_dir", output_dir.string()},
                  {"seed", seed},
                  {"model", acis::to_json(model)},
                  {"train", acis::to_json(train)},
                  {"predict",
                   {{"threshold", predict.threshold},
                    {"min_region_size", predict.min_region_size},
                    {"tta", predict.tta}}}};
        if (data_root) j["data_root"] = data_root->string();
        if (manifest) j["manifest"] = manifest->string();
        return j;
    }
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

/// Options shared by most commands. Flags that were given win over the config file.
struct CommonFlags {
    std::string config;
    std::string manifest;
    std::string data_root;
    std::string out;
    std::vector<std::string> datasets;
    std::uint64_t seed = 0;
    bool continue_on_error = false;
    int jobs = 1;

    CLI::Option* seed_opt = nullptr;

    void add_config(CLI::App* app) {
        app->add_option("--config", config, "Project config JSON (flags override it)")->check(CLI::ExistingFile);
    }
    void add_manifest(CLI::App* app) {
        app->add_option("--manifest", manifest, "Dataset manifest JSON");
        app->add_option("--data-root", data_root,
                        std::string("Directory relative manifest paths resolve against (default: $") + kDataRootEnv +
                            ", else the manifest's directory)");
        app->add_option("--datasets", datasets, "Comma-separated dataset names (default: all applicable)")
            ->delimiter(',');
    }
    void add_out(CLI::App* app, const std::string& help) { app->add_option("--out", out, help); }
    void add_seed(CLI::App* app) { seed_opt = app->add_option("--seed", seed, "Seed for every stochastic step"); }
    void add_error_policy(CLI::App* app) {
        app->add_flag("--continue-on-error", continue_on_error,
                      "Report failing datasets and carry on; exit 0 if the run itself completes");
    }
    void add_jobs(CLI::App* app) {
        app->add_option("--jobs", jobs, "Datasets processed in parallel")->check(CLI::PositiveNumber);
    }

    ProjectConfig project() const {
        ProjectConfig c = config.empty() ? ProjectConfig{} : ProjectConfig::load(config);
        if (!manifest.empty()) c.manifest = manifest;
        if (!data_root.empty()) c.data_root = data_root;
        if (!out.empty()) c.output_dir = out;
        if (seed_opt && seed_opt->count() > 0) c.seed = seed;
        c.train.seed = c.seed;
        return c;
    }
};

Manifest load_manifest(const ProjectConfig& c) {
    if (!c.manifest) throw ValidationError("no manifest given (--manifest or \"manifest\" in --config)");
    return Manifest::load(*c.manifest, c.data_root);
}

std::vector<ManifestEntry> pick(const Manifest& m, const std::vector<std::string>& names,
                                const std::function<bool(const ManifestEntry&)>& default_filter) {
    if (!names.empty()) return m.select(names);
    std::vector<ManifestEntry> out;
    for (const auto& e : m.datasets) {
        if (!default_filter || default_filter(e)) out.push_back(e);
    }
    return out;
}

struct Failure {
    std::string dataset;
    std::string error;
};

/// Runs `work` for each entry on up to `jobs` threads. Without continue-on-error the first
/// failure stops the remaining work.
std::vector<Failure> for_each_dataset(const std::vector<ManifestEntry>& entries, int jobs, bool continue_on_error,
                                      const std::function<void(const ManifestEntry&)>& work) {
    std::vector<Failure> failures;
    std::mutex mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < entries.size() && !stop; i = next++) {
            try {
                work(entries[i]);
            } catch (const std::exception& e) {
                log::error(fmt::format("{}: {}", entries[i].name, e.what()));
                std::lock_guard lock(mutex);
                failures.push_back({entries[i].name, e.what()});
                if (!continue_on_error) stop = true;
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(entries.size())));
    std::vector<std::thread> threads;
    for (int t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return failures;
}

json failures_json(const std::vector<Failure>& failures) {
    json arr = json::array();
    for (const auto& f : failures) arr.push_back({{"dataset", f.dataset}, {"error", f.error}});
    return arr;
}

int exit_code(const std::vector<Failure>& failures, bool continue_on_error) {
    return failures.empty() || continue_on_error ? 0 : 1;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeFlags {
    CommonFlags common;
    std::string kind = "mean";
    int radius = 0;
};

int cmd_summarize(const SummarizeFlags& f) {
    const auto config = f.common.project();
    const auto manifest = load_manifest(config);
    const auto entries = pick(manifest, f.common.datasets, {});
    const auto kind = parse_summary_kind(f.kind);
    if ((kind == SummaryKind::corr || kind == SummaryKind::cosine) && f.radius < 1) {
        throw ValidationError("--radius is required for corr and cosine summaries");
    }
    fs::create_directories(config.output_dir);

    std::mutex mutex;
    std::map<std::string, json> stats;
    const auto failures = for_each_dataset(entries, f.common.jobs, f.common.continue_on_error, [&](const auto& e) {
        const auto bundle = open_dataset(e);
        const auto summary =
            kind == SummaryKind::corr || kind == SummaryKind::cosine
                ? neighborhood_similarity_summary(bundle.series,
                                                  kind == SummaryKind::corr ? SimilarityMetric::correlation
                                                                            : SimilarityMetric::cosine,
                                                  f.radius)
                : stat_summary(bundle.series, kind);
        const fs::path file = config.output_dir / (e.name + "." + std::string(to_string(kind)) + ".npy");
        save_summary(summary, file);
        const auto s = dataset_statistics(bundle);
        json j = {{"frames", s.frame_count},  {"height", s.height},        {"width", s.width},
                  {"mean_pixel_value", s.mean_pixel_value}, {"summary", file.string()}};
        if (s.region_count) j["regions"] = *s.region_count;
        if (s.neuron_fraction) j["neuron_fraction"] = *s.neuron_fraction;
        std::lock_guard lock(mutex);
        stats[e.name] = j;
        log::info(fmt::format("{}: {} summary of {} frames -> {}", e.name, to_string(kind), s.frame_count,
                              file.string()));
    });

    std::string table = fmt::format("{:<16} {:>7} {:>11} {:>12} {:>8} {:>9}\n", "dataset", "frames", "size",
                                    "mean pixel", "regions", "neuron %");
    json datasets = json::array();
    for (const auto& e : entries) {
        const auto it = stats.find(e.name);
        if (it == stats.end()) continue;
        const auto& j = it->second;
        table += fmt::format("{:<16} {:>7} {:>11} {:>12.1f} {:>8} {:>9}\n", e.name, j["frames"].get<int>(),
                             fmt::format("{}x{}", j["height"].get<int>(), j["width"].get<int>()),
                             j["mean_pixel_value"].get<double>(),
                             j.contains("regions") ? std::to_string(j["regions"].get<std::size_t>()) : "-",
                             j.contains("neuron_fraction")
                                 ? fmt::format("{:.2f}", 100 * j["neuron_fraction"].get<double>())
                                 : "-");
        json entry = j;
        entry["dataset"] = e.name;
        datasets.push_back(entry);
    }
    std::cout << table;
    write_text(config.output_dir / "stats.txt", table);
    write_json(config.output_dir / "stats.json",
               {{"kind", std::string(to_string(kind))}, {"datasets", datasets}, {"failed", failures_json(failures)}});
    return exit_code(failures, f.common.continue_on_error);
}

// ---------------------------------------------------------------------------
// train

struct TrainFlags {
    CommonFlags common;
    std::string loss;
    double fn_weight = 0;
    int epochs = 0;
    int steps = 0;
    int batch_size = 0;
    int window = 0;
    int base_filters = 0;
    double learning_rate = 0;
    bool per_dataset = false;
    bool validate_tta = false;
    CLI::Option* fn_opt = nullptr;
    CLI::Option* epochs_opt = nullptr;
    CLI::Option* steps_opt = nullptr;
    CLI::Option* batch_opt = nullptr;
    CLI::Option* window_opt = nullptr;
    CLI::Option* base_opt = nullptr;
    CLI::Option* lr_opt = nullptr;
};

json history_table_json(const TrainResult& result) {
    json j = result.history.to_json();
    j["best_epoch"] = result.best.metadata.epoch;
    j["best_validation_f1"] = result.best.metadata.validation_f1;
    return j;
}

void train_one(const ProjectConfig& config, const std::vector<DatasetBundle>& bundles, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    auto train_config = config.train;
    train_config.checkpoint_path = out_dir / "model.ckpt";
    write_json(out_dir / "train_config.json", config.to_json());
    Network net(config.model, config.seed);
    log::info(fmt::format("training U-Net2DS ({} parameters) on {} dataset(s)", net.count_parameters(),
                          bundles.size()));
    const auto result = train(net, bundles, train_config);
    write_text(out_dir / "history.csv", result.history.to_csv());
    write_json(out_dir / "history.json", history_table_json(result));
    std::cout << result.history.to_csv();
    std::cout << fmt::format("best epoch {} (validation F1 {:.3f}) -> {}\n", result.best.metadata.epoch,
                             result.best.metadata.validation_f1, (out_dir / "model.ckpt").string());
}

int cmd_train(const TrainFlags& f) {
    auto config = f.common.project();
    if (!f.loss.empty()) config.train.loss = parse_loss_kind(f.loss);
    if (f.fn_opt->count()) config.train.fn_weight = f.fn_weight;
    if (f.epochs_opt->count()) config.train.epochs = f.epochs;
    if (f.steps_opt->count()) config.train.steps_per_epoch = f.steps;
    if (f.batch_opt->count()) config.train.batch_size = f.batch_size;
    if (f.window_opt->count()) config.train.window = f.window;
    if (f.lr_opt->count()) config.train.learning_rate = f.learning_rate;
    if (f.base_opt->count()) config.model.base_filters = f.base_filters;
    if (f.validate_tta) config.train.validate_with_tta = true;
    config.model.validate();
    config.train.validate(config.model.divisor());

    const auto manifest = load_manifest(config);
    const auto entries = pick(manifest, f.common.datasets, [](const ManifestEntry& e) { return e.role == "train"; });
    if (entries.empty()) throw ValidationError("no training datasets selected");
    std::vector<DatasetBundle> bundles;
    for (const auto& e : entries) {
        bundles.push_back(open_dataset(e));
        if (!bundles.back().regions) throw ValidationError("dataset " + e.name + " has no regions to train on");
    }

    if (!f.per_dataset) {
        train_one(config, bundles, config.output_dir);
        return 0;
    }
    std::vector<Failure> failures;
    for (const auto& bundle : bundles) {
        try {
            train_one(config, {bundle}, config.output_dir / bundle.name);
        } catch (const std::exception& e) {
            log::error(fmt::format("{}: {}", bundle.name, e.what()));
            failures.push_back({bundle.name, e.what()});
            if (!f.common.continue_on_error) break;
        }
    }
    return exit_code(failures, f.common.continue_on_error);
}

// ---------------------------------------------------------------------------
// predict

struct PredictFlags {
    CommonFlags common;
    std::string checkpoint;
    double threshold = 0;
    int min_size = 0;
    bool no_tta = false;
    CLI::Option* threshold_opt = nullptr;
    CLI::Option* min_size_opt = nullptr;
};

int cmd_predict(const PredictFlags& f) {
    auto config = f.common.project();
    if (f.threshold_opt->count()) config.predict.threshold = f.threshold;
    if (f.min_size_opt->count()) config.predict.min_region_size = f.min_size;
    if (f.no_tta) config.predict.tta = false;
    const fs::path ckpt_path = f.checkpoint.empty() ? config.output_dir / "model.ckpt" : fs::path(f.checkpoint);
    auto net = load_checkpoint(ckpt_path).restore();
    const auto manifest = load_manifest(config);
    const auto entries = pick(manifest, f.common.datasets, {});
    fs::create_directories(config.output_dir);

    SegmentOptions options;
    options.threshold = config.predict.threshold;
    options.min_region_size = config.predict.min_region_size;
    options.augment = config.predict.tta;

    json results = json::array();
    double frames = 0, seconds = 0;
    // The network is shared, so datasets run one after another.
    const auto failures = for_each_dataset(entries, 1, f.common.continue_on_error, [&](const ManifestEntry& e) {
        const auto bundle = open_dataset(e);
        const auto result = segment_series(bundle.series, net, options);
        const fs::path stem = config.output_dir / e.name;
        write_regions(result.regions, stem.string() + ".regions.json");
        npy::write(stem.string() + ".probabilities.npy", result.probabilities);
        const RegionList* gt = bundle.regions ? &*bundle.regions : nullptr;
        write_png(stem.string() + ".overlay.png", render_overlay(result.summary.values(), gt, result.regions));
        const auto& t = result.timing;
        const json timing = {{"dataset", e.name},
                             {"frames", t.frame_count},
                             {"regions", result.regions.size()},
                             {"summary_seconds", t.summary_seconds},
                             {"inference_seconds", t.inference_seconds},
                             {"postprocess_seconds", t.postprocess_seconds},
                             {"total_seconds", t.total_seconds},
                             {"frames_per_minute", t.frames_per_minute()},
                             {"tta", options.augment},
                             {"threshold", options.threshold}};
        write_json(stem.string() + ".timing.json", timing);
        results.push_back(timing);
        frames += t.frame_count;
        seconds += t.total_seconds;
        std::cout << fmt::format("{:<16} {:>5} regions  {:>8.0f} frames/min  (summary {:.2f} s, network {:.2f} s)\n",
                                 e.name, result.regions.size(), t.frames_per_minute(), t.summary_seconds,
                                 t.inference_seconds);
    });
    write_json(config.output_dir / "predictions.json",
               {{"checkpoint", ckpt_path.string()},
                {"datasets", results},
                {"frames_per_minute", seconds > 0 ? frames * 60 / seconds : 0.0},
                {"failed", failures_json(failures)}});
    return exit_code(failures, f.common.continue_on_error);
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateFlags {
    CommonFlags common;
    std::string predictions;
    double match_distance = kDefaultMatchDistance;
};

int cmd_evaluate(const EvaluateFlags& f) {
    const auto config = f.common.project();
    const auto manifest = load_manifest(config);
    const auto entries = pick(manifest, f.common.datasets, [](const ManifestEntry& e) { return e.regions.has_value(); });
    const fs::path pred_dir = f.predictions.empty() ? config.output_dir : fs::path(f.predictions);

    std::mutex mutex;
    std::map<std::string, EvalReport> by_name;
    const auto failures = for_each_dataset(entries, f.common.jobs, f.common.continue_on_error, [&](const auto& e) {
        const auto bundle = open_dataset(e);
        if (!bundle.regions) throw ValidationError("no ground-truth regions");
        const auto pred = load_regions(pred_dir / (e.name + ".regions.json"));
        const auto report = evaluate_dataset(*bundle.regions, pred, bundle.series.height(), bundle.series.width(),
                                             f.match_distance);
        std::lock_guard lock(mutex);
        by_name[e.name] = report;
    });
    std::vector<NamedReport> reports;
    for (const auto& e : entries) {
        if (by_name.count(e.name)) reports.push_back({e.name, by_name[e.name]});
    }
    if (!reports.empty()) {
        const auto table = format_report_table(reports);
        std::cout << table;
        const fs::path out_base = f.common.out.empty() ? pred_dir / "evaluation" : fs::path(f.common.out);
        write_text(out_base.string() + ".txt", table);
        auto j = json::parse(reports_to_json(reports));
        j["failed"] = failures_json(failures);
        j["match_distance"] = f.match_distance;
        write_json(out_base.string() + ".json", j);
    }
    return exit_code(failures, f.common.continue_on_error);
}

// ---------------------------------------------------------------------------
// submit

struct SubmitFlags {
    CommonFlags common;
    std::string predictions;
};

int cmd_submit(const SubmitFlags& f) {
    const auto config = f.common.project();
    std::vector<std::string> names = f.common.datasets;
    if (names.empty()) {
        const auto manifest = load_manifest(config);
        for (const auto& e : manifest.datasets) {
            if (e.role == "test") names.push_back(e.name);
        }
    }
    if (names.empty()) throw ValidationError("no datasets to submit (give --datasets or test entries in the manifest)");
    const fs::path pred_dir = f.predictions.empty() ? config.output_dir : fs::path(f.predictions);
    json submission = json::array();
    for (const auto& name : names) {
        const auto regions = load_regions(pred_dir / (name + ".regions.json"));
        submission.push_back({{"dataset", name}, {"regions", json::parse(regions_to_json(regions))}});
    }
    const fs::path out = f.common.out.empty() ? pred_dir / "submission.json" : fs::path(f.common.out);
    write_file_atomic(out, submission.dump());
    std::cout << fmt::format("{} datasets -> {}\n", names.size(), out.string());
    return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportFlags {
    std::string summary;
    std::string pred;
    std::string gt;
    std::string out;
};

int cmd_report(const ReportFlags& f) {
    const auto background = npy::read(f.summary);
    const auto pred = load_regions(f.pred);
    std::optional<RegionList> gt;
    if (!f.gt.empty()) gt = load_regions(f.gt);
    const auto image = render_overlay(background, gt ? &*gt : nullptr, pred);
    write_png(f.out, image);
    const fs::path sidecar = fs::path(f.out).replace_extension(".json");
    json j = {{"image", f.out},
              {"height", image.rows()},
              {"width", image.cols()},
              {"predicted_regions", pred.size()},
              {"prediction_color", kPredictionColor}};
    if (gt) {
        j["ground_truth_regions"] = gt->size();
        j["ground_truth_color"] = kGroundTruthColor;
    }
    write_json(sidecar, j);
    std::cout << fmt::format("overlay {}x{} -> {}\n", image.rows(), image.cols(), f.out);
    return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
    std::string out;
    int count = 2;
    int size = 512;
    int frames = 20;
    int disks = 30;
    std::uint64_t seed = 0;
};

int cmd_synth(const SynthFlags& f) {
    const fs::path root = f.out;
    Manifest manifest;
    for (int i = 0; i < f.count; ++i) {
        SyntheticSpec spec;
        spec.rows = spec.cols = f.size;
        spec.frames = f.frames;
        spec.disk_count = f.disks;
        spec.seed = f.seed * 1000 + static_cast<std::uint64_t>(i);
        const std::string name = fmt::format("synth.{:02d}", i);
        const auto bundle = make_synthetic_dataset(spec, name);
        std::vector<Frame> frames;
        bundle.series.for_each_frame([&](int, const Frame& frame) { frames.push_back(frame); });
        fs::create_directories(root / name / "images");
        fs::create_directories(root / name / "regions");
        write_tiff(root / name / "images" / "series.tif", frames);
        write_regions(*bundle.regions, root / name / "regions" / "regions.json");
        manifest.datasets.push_back({name, fs::path(name) / "images", fs::path(name) / "regions" / "regions.json",
                                     "train", {{"source", "synthetic"}}});
    }
    manifest.save(root / "manifest.json");
    std::cout << fmt::format("{} synthetic datasets -> {}\n", f.count, (root / "manifest.json").string());
    return 0;
}

}  // namespace
}  // namespace acis

int main(int argc, char** argv) {
    using namespace acis;
    CLI::App app{"Neuron segmentation for calcium imaging series (U-Net2DS)"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug, info, warn, error or off");

    SummarizeFlags summarize;
    auto* s = app.add_subcommand("summarize", "Per-pixel summary image and statistics for each dataset");
    summarize.common.add_config(s);
    summarize.common.add_manifest(s);
    summarize.common.add_out(s, "Output directory");
    summarize.common.add_error_policy(s);
    summarize.common.add_jobs(s);
    s->add_option("--kind", summarize.kind, "mean, max, min, std, corr or cosine");
    s->add_option("--radius", summarize.radius, "Neighbourhood radius, required for corr/cosine")->check(CLI::PositiveNumber);

    TrainFlags trainf;
    auto* t = app.add_subcommand("train", "Train U-Net2DS on the training datasets of a manifest");
    trainf.common.add_config(t);
    trainf.common.add_manifest(t);
    trainf.common.add_out(t, "Output directory for model.ckpt and history");
    trainf.common.add_seed(t);
    trainf.common.add_error_policy(t);
    t->add_option("--loss", trainf.loss, "log, mdc or weighted_log");
    trainf.fn_opt = t->add_option("--fn-weight", trainf.fn_weight, "False-negative weight for weighted_log");
    trainf.epochs_opt = t->add_option("--epochs", trainf.epochs);
    trainf.steps_opt = t->add_option("--steps", trainf.steps, "Steps per epoch");
    trainf.batch_opt = t->add_option("--batch-size", trainf.batch_size);
    trainf.window_opt = t->add_option("--window", trainf.window, "Side of the square training windows");
    trainf.lr_opt = t->add_option("--learning-rate", trainf.learning_rate);
    trainf.base_opt = t->add_option("--base-filters", trainf.base_filters, "Width of the first stage (default 32)");
    t->add_flag("--per-dataset", trainf.per_dataset, "Train one model per dataset instead of one joint model");
    t->add_flag("--validate-tta", trainf.validate_tta, "Use test-time augmentation during epoch validation");

    PredictFlags predictf;
    auto* p = app.add_subcommand("predict", "Segment datasets with a trained checkpoint");
    predictf.common.add_config(p);
    predictf.common.add_manifest(p);
    predictf.common.add_out(p, "Output directory");
    predictf.common.add_error_policy(p);
    p->add_option("--checkpoint", predictf.checkpoint, "Checkpoint file (default: <out>/model.ckpt)");
    predictf.threshold_opt = p->add_option("--threshold", predictf.threshold, "Probability threshold (default 0.5)");
    predictf.min_size_opt = p->add_option("--min-size", predictf.min_size, "Smallest region kept, in pixels");
    p->add_flag("--no-tta", predictf.no_tta, "Single forward pass instead of the 8-symmetry average");

    EvaluateFlags evaluatef;
    auto* e = app.add_subcommand("evaluate", "Score predicted regions against ground truth");
    evaluatef.common.add_config(e);
    evaluatef.common.add_manifest(e);
    evaluatef.common.add_out(e, "Output path without extension (default: <predictions>/evaluation)");
    evaluatef.common.add_error_policy(e);
    evaluatef.common.add_jobs(e);
    e->add_option("--predictions", evaluatef.predictions, "Directory with <dataset>.regions.json files");
    e->add_option("--match-distance", evaluatef.match_distance, "Centroid distance for a match (strictly less)");

    SubmitFlags submitf;
    auto* sub = app.add_subcommand("submit", "Bundle predicted regions into one submission JSON");
    submitf.common.add_config(sub);
    submitf.common.add_manifest(sub);
    submitf.common.add_out(sub, "Submission file (default: <predictions>/submission.json)");
    sub->add_option("--predictions", submitf.predictions, "Directory with <dataset>.regions.json files");

    ReportFlags reportf;
    auto* r = app.add_subcommand("report", "Overlay ground-truth (green) and predicted (red) outlines");
    r->add_option("--summary", reportf.summary, "Summary image (.npy)")->required()->check(CLI::ExistingFile);
    r->add_option("--pred", reportf.pred, "Predicted regions JSON")->required()->check(CLI::ExistingFile);
    r->add_option("--gt", reportf.gt, "Ground-truth regions JSON")->check(CLI::ExistingFile);
    r->add_option("--out", reportf.out, "Output PNG")->required();

    SynthFlags synthf;
    auto* y = app.add_subcommand("synth", "Write synthetic disk datasets and a manifest");
    y->add_option("--out", synthf.out, "Output directory")->required();
    y->add_option("--count", synthf.count)->check(CLI::PositiveNumber);
    y->add_option("--size", synthf.size)->check(CLI::PositiveNumber);
    y->add_option("--frames", synthf.frames)->check(CLI::PositiveNumber);
    y->add_option("--disks", synthf.disks)->check(CLI::NonNegativeNumber);
    y->add_option("--seed", synthf.seed);

    CLI11_PARSE(app, argc, argv);
    try {
        log::set_level(log_level);
        if (s->parsed()) return cmd_summarize(summarize);
        if (t->parsed()) return cmd_train(trainf);
        if (p->parsed()) return cmd_predict(predictf);
        if (e->parsed()) return cmd_evaluate(evaluatef);
        if (sub->parsed()) return cmd_submit(submitf);
        if (r->parsed()) return cmd_report(reportf);
        if (y->parsed()) return cmd_synth(synthf);
    } catch (const std::exception& ex) {
        log::error(ex.what());
        return 1;
    }
    return 0;
}
