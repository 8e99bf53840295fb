#include "acis/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"
#include "acis/log.hpp"
#include "acis/postprocess.hpp"
#include "acis/prediction.hpp"

namespace acis {

// ---------------------------------------------------------------------------
// Losses

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::log: return "log";
        case LossKind::mdc: return "mdc";
        case LossKind::weighted_log: return "weighted_log";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view name) {
    if (name == "log") return LossKind::log;
    if (name == "mdc") return LossKind::mdc;
    if (name == "weighted_log") return LossKind::weighted_log;
    throw ValidationError("unknown loss '" + std::string(name) + "' (expected log, mdc or weighted_log)");
}

namespace {

void check_loss_shapes(const torch::Tensor& probs, const torch::Tensor& target) {
    if (probs.dim() != 4 || probs.size(1) != 2) {
        throw ValidationError("loss: predictions must have shape Bx2xHxW");
    }
    if (target.dim() != 3 || target.size(0) != probs.size(0) || target.size(1) != probs.size(2) ||
        target.size(2) != probs.size(3)) {
        throw ValidationError("loss: target shape does not match predictions");
    }
}

}  // namespace

torch::Tensor log_loss(const torch::Tensor& probs, const torch::Tensor& target, double fn_weight) {
    check_loss_shapes(probs, target);
    if (!(fn_weight >= 1.0)) throw ValidationError("loss: fn_weight must be >= 1");
    const auto p = probs.clamp(kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const auto t = target.to(probs.scalar_type());
    const auto w = 1.0 + (fn_weight - 1.0) * t;
    return -(w * t * torch::log(p.select(1, 1)) + (1.0 - t) * torch::log(p.select(1, 0))).mean();
}

torch::Tensor mdc_loss(const torch::Tensor& probs, const torch::Tensor& target) {
    check_loss_shapes(probs, target);
    const auto p = probs.select(1, 1);
    const auto t = target.to(probs.scalar_type());
    const auto numerator = 2.0 * (p * t).sum({1, 2}) + kDiceSmoothing;
    const auto denominator = (p * p).sum({1, 2}) + (t * t).sum({1, 2}) + kDiceSmoothing;
    return (1.0 - numerator / denominator).mean();
}

torch::Tensor compute_loss(LossKind kind, const torch::Tensor& probs, const torch::Tensor& target,
                           double fn_weight) {
    switch (kind) {
        case LossKind::log: return log_loss(probs, target, 1.0);
        case LossKind::weighted_log: return log_loss(probs, target, fn_weight);
        case LossKind::mdc: return mdc_loss(probs, target);
    }
    throw ValidationError("unknown loss kind");
}

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate(int divisor) const {
    auto fail = [](const std::string& what) { throw ValidationError("train config: " + what); };
    if (!(learning_rate > 0)) fail("learning_rate must be positive");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (window < 1 || window % divisor != 0) fail(fmt::format("window {} is not divisible by {}", window, divisor));
    if (epochs < 1) fail("epochs must be >= 1");
    if (steps_per_epoch < 1) fail("steps_per_epoch must be >= 1");
    if (!(fn_weight >= 1.0)) fail("fn_weight must be >= 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) fail("Adam betas must be in [0, 1)");
    if (!(adam_eps > 0)) fail("adam_eps must be positive");
    if (!(train_fraction > 0 && train_fraction < 1)) fail("train_fraction must be in (0, 1)");
    if (max_sampling_attempts < 1) fail("max_sampling_attempts must be >= 1");
    if (!(threshold > 0 && threshold < 1)) fail("threshold must be in (0, 1)");
    if (min_region_size < 0) fail("min_region_size must be >= 0");
    if (!(match_distance > 0)) fail("match_distance must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j = {{"learning_rate", c.learning_rate},
                        {"batch_size", c.batch_size},
                        {"window", c.window},
                        {"epochs", c.epochs},
                        {"steps_per_epoch", c.steps_per_epoch},
                        {"loss", std::string(to_string(c.loss))},
                        {"fn_weight", c.fn_weight},
                        {"adam_beta1", c.adam_beta1},
                        {"adam_beta2", c.adam_beta2},
                        {"adam_eps", c.adam_eps},
                        {"seed", c.seed},
                        {"train_fraction", c.train_fraction},
                        {"max_sampling_attempts", c.max_sampling_attempts},
                        {"augment_windows", c.augment_windows},
                        {"threshold", c.threshold},
                        {"min_region_size", c.min_region_size},
                        {"match_distance", c.match_distance},
                        {"validate_with_tta", c.validate_with_tta}};
    if (c.checkpoint_path) j["checkpoint_path"] = c.checkpoint_path->string();
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("train config must be a JSON object");
    TrainConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.window = j.value("window", c.window);
        c.epochs = j.value("epochs", c.epochs);
        c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
        if (j.contains("loss")) c.loss = parse_loss_kind(j.at("loss").get<std::string>());
        c.fn_weight = j.value("fn_weight", c.fn_weight);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.seed = j.value("seed", c.seed);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.max_sampling_attempts = j.value("max_sampling_attempts", c.max_sampling_attempts);
        c.augment_windows = j.value("augment_windows", c.augment_windows);
        c.threshold = j.value("threshold", c.threshold);
        c.min_region_size = j.value("min_region_size", c.min_region_size);
        c.match_distance = j.value("match_distance", c.match_distance);
        c.validate_with_tta = j.value("validate_with_tta", c.validate_with_tta);
        if (j.contains("checkpoint_path")) c.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("train config: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Splits

SplitDataset split_train_val(const NormalizedImage& image, const BinaryMask& mask, const RegionList& regions,
                             std::string name, double fraction, int window) {
    if (!image.values().same_shape(mask)) {
        throw ValidationError(fmt::format("split: image {}x{} and mask {}x{} differ", image.rows(), image.cols(),
                                          mask.rows(), mask.cols()));
    }
    const int rows = image.rows();
    const int split = static_cast<int>(std::floor(fraction * rows));
    if (split < window) {
        log::warn(fmt::format("dataset {}: training portion has {} rows, fewer than the {}-pixel window", name,
                              split, window));
    }
    SplitDataset out;
    out.name = std::move(name);
    out.split_row = split;
    out.train_image = NormalizedImage(image.values().rows_slice(0, split), image.source_kind());
    out.train_mask = mask.rows_slice(0, split);
    out.val_image = NormalizedImage(image.values().rows_slice(split, rows), image.source_kind());
    out.val_mask = mask.rows_slice(split, rows);
    for (const auto& region : regions) {
        std::vector<Pixel> inside;
        for (const auto& p : region.coordinates()) {
            if (p.row >= split) inside.push_back({p.row - split, p.col});
        }
        if (!inside.empty()) out.val_regions.emplace_back(std::move(inside));
    }
    return out;
}

std::vector<SplitDataset> prepare_splits(std::span<const DatasetBundle> bundles, const TrainConfig& config) {
    std::vector<SplitDataset> splits;
    for (const auto& bundle : bundles) {
        if (!bundle.regions) throw ValidationError("dataset " + bundle.name + " has no ground-truth regions");
        const auto image = normalize(stat_summary(bundle.series, SummaryKind::mean));
        const auto mask =
            merge_to_binary(rasterize_regions(*bundle.regions, bundle.series.height(), bundle.series.width()));
        splits.push_back(
            split_train_val(image, mask, *bundle.regions, bundle.name, config.train_fraction, config.window));
    }
    return splits;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

bool fits_window(const SplitDataset& s, int window) {
    return s.train_mask.rows() >= window && s.train_mask.cols() >= window;
}

bool has_neuron(const BinaryMask& mask) {
    return std::any_of(mask.values().begin(), mask.values().end(), [](std::uint8_t v) { return v != 0; });
}

bool window_has_neuron(const BinaryMask& mask, int top, int left, int size) {
    for (int r = top; r < top + size; ++r) {
        const auto row = mask.row(r).subspan(static_cast<std::size_t>(left), static_cast<std::size_t>(size));
        if (std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; })) return true;
    }
    return false;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t batch_seed(std::uint64_t seed, int epoch, int step) {
    return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(epoch)) ^
                      static_cast<std::uint64_t>(step));
}

std::vector<SampleWindow> sample_batch(std::mt19937_64& rng, std::span<const SplitDataset> splits,
                                       const TrainConfig& config) {
    const int w = config.window;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (fits_window(splits[i], w) && has_neuron(splits[i].train_mask)) eligible.push_back(i);
    }
    if (eligible.empty()) {
        throw ValidationError(fmt::format("no training portion holds a {}x{} window containing a neuron pixel", w, w));
    }

    std::uniform_int_distribution<std::size_t> pick_dataset(0, eligible.size() - 1);
    std::uniform_int_distribution<int> pick_transform(0, 7);
    std::vector<SampleWindow> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));
    for (int b = 0; b < config.batch_size; ++b) {
        SampleWindow s;
        s.dataset = eligible[pick_dataset(rng)];
        const auto& split = splits[s.dataset];
        const auto& mask = split.train_mask;
        std::uniform_int_distribution<int> pick_top(0, mask.rows() - w);
        std::uniform_int_distribution<int> pick_left(0, mask.cols() - w);
        bool found = false;
        for (int attempt = 0; attempt < config.max_sampling_attempts && !found; ++attempt) {
            s.top = pick_top(rng);
            s.left = pick_left(rng);
            found = window_has_neuron(mask, s.top, s.left, w);
        }
        if (!found) {
            std::vector<Pixel> neurons;
            for (int r = 0; r < mask.rows(); ++r)
                for (int c = 0; c < mask.cols(); ++c)
                    if (mask(r, c)) neurons.push_back({r, c});
            std::uniform_int_distribution<std::size_t> pick_pixel(0, neurons.size() - 1);
            const Pixel p = neurons[pick_pixel(rng)];
            s.top = std::clamp(p.row - w / 2, 0, mask.rows() - w);
            s.left = std::clamp(p.col - w / 2, 0, mask.cols() - w);
            s.fallback = true;
        }
        s.transform = config.augment_windows ? Dihedral::from_index(pick_transform(rng)) : Dihedral{};
        s.image = apply(s.transform, split.train_image.values().crop(s.top, s.left, w, w));
        s.mask = apply(s.transform, mask.crop(s.top, s.left, w, w));
        batch.push_back(std::move(s));
    }
    return batch;
}

std::pair<torch::Tensor, torch::Tensor> to_tensors(std::span<const SampleWindow> batch, torch::Dtype dtype) {
    if (batch.empty()) throw ValidationError("to_tensors: empty batch");
    std::vector<torch::Tensor> images;
    std::vector<torch::Tensor> masks;
    for (const auto& s : batch) {
        images.push_back(to_tensor(s.image, dtype).unsqueeze(0));
        masks.push_back(to_tensor(s.mask.cast<double>(), dtype));
    }
    return {torch::stack(images), torch::stack(masks)};
}

// ---------------------------------------------------------------------------
// Validation

ValidationScores validate(Network& net, std::span<const SplitDataset> splits, const TrainConfig& config) {
    if (splits.empty()) throw ValidationError("validate: no datasets");
    ValidationScores out;
    for (const auto& split : splits) {
        if (split.val_image.rows() == 0) throw ValidationError("validate: empty validation strip in " + split.name);
        const auto probs = predict_padded(net, split.val_image, config.validate_with_tta);
        const auto predicted = extract_regions(binarize(probs, config.threshold), config.min_region_size);
        const auto report = evaluate_dataset(split.val_regions, predicted, split.val_image.rows(),
                                             split.val_image.cols(), config.match_distance);
        out.neurofinder_f1 += report.f1;
        out.pixelwise_f1 += report.pixelwise_f1;
        out.reports.push_back({split.name, report});
    }
    out.neurofinder_f1 /= static_cast<double>(splits.size());
    out.pixelwise_f1 /= static_cast<double>(splits.size());
    return out;
}

double training_pixel_f1(Network& net, std::span<const SplitDataset> splits, double threshold) {
    if (splits.empty()) throw ValidationError("training_pixel_f1: no datasets");
    double total = 0.0;
    for (const auto& split : splits) {
        const auto probs = predict_padded(net, split.train_image, false);
        total += pixelwise_f1(binarize(probs, threshold), split.train_mask);
    }
    return total / static_cast<double>(splits.size());
}

// ---------------------------------------------------------------------------
// History

std::string TrainHistory::to_csv() const {
    std::string out = "epoch,train_loss,val_pixel_f1,val_neurofinder_f1,checkpoint_taken,seconds\n";
    for (const auto& e : epochs) {
        out += fmt::format("{},{:.9g},{:.9g},{:.9g},{},{:.3f}\n", e.epoch, e.train_loss, e.val_pixel_f1,
                           e.val_neurofinder_f1, e.checkpoint_taken ? 1 : 0, e.seconds);
    }
    return out;
}

nlohmann::json TrainHistory::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : epochs) {
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_pixel_f1", e.val_pixel_f1},
                       {"val_neurofinder_f1", e.val_neurofinder_f1},
                       {"checkpoint_taken", e.checkpoint_taken},
                       {"seconds", e.seconds}});
    }
    return {{"epochs", arr}};
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(Network& net, std::span<const SplitDataset> splits, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate(net.config().divisor());
    if (splits.empty()) throw ValidationError("train: no datasets");
    torch::manual_seed(config.seed);

    torch::optim::Adam optimizer(net.module()->parameters(),
                                 torch::optim::AdamOptions(config.learning_rate)
                                     .betas({config.adam_beta1, config.adam_beta2})
                                     .eps(config.adam_eps));
    TrainResult result{Checkpoint::capture(net, {0, 0.0, 0.0, config.seed, "initial weights"}), {}};
    double best_f1 = -std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        double loss_sum = 0.0;
        for (int step = 0; step < config.steps_per_epoch; ++step) {
            const std::uint64_t seed = batch_seed(config.seed, epoch, step);
            std::mt19937_64 rng(seed);
            const auto batch = sample_batch(rng, splits, config);
            const auto [images, targets] = to_tensors(batch, net.dtype());
            const auto loss = compute_loss(config.loss, net.forward(images, Mode::train), targets, config.fn_weight);
            const double value = loss.item<double>();
            if (!std::isfinite(value)) {
                throw DivergenceError(fmt::format("training diverged: loss {} at epoch {} step {} (batch seed {})",
                                                  value, epoch, step, seed),
                                      epoch, step, seed);
            }
            optimizer.zero_grad();
            loss.backward();
            optimizer.step();
            loss_sum += value;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / config.steps_per_epoch;
        const auto scores = validate(net, splits, config);
        record.val_neurofinder_f1 = scores.neurofinder_f1;
        record.val_pixel_f1 = scores.pixelwise_f1;
        if (scores.neurofinder_f1 > best_f1) {
            best_f1 = scores.neurofinder_f1;
            record.checkpoint_taken = true;
            result.best = Checkpoint::capture(
                net, {epoch, scores.neurofinder_f1, scores.pixelwise_f1, config.seed, "best validation F1"});
            if (config.checkpoint_path) save_checkpoint(result.best, *config.checkpoint_path);
        }
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log::info(fmt::format("epoch {}/{}: loss {:.4f}  val pixel F1 {:.3f}  val F1 {:.3f}{}  ({:.1f} s)", epoch,
                              config.epochs, record.train_loss, record.val_pixel_f1, record.val_neurofinder_f1,
                              record.checkpoint_taken ? "  [checkpoint]" : "", record.seconds));
        result.history.epochs.push_back(record);
        if (on_epoch) on_epoch(record);
    }
    return result;
}

TrainResult train(Network& net, std::span<const DatasetBundle> bundles, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    const auto splits = prepare_splits(bundles, config);
    return train(net, splits, config, on_epoch);
}

}  // namespace acis
