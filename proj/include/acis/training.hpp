#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "acis/dihedral.hpp"
#include "acis/errors.hpp"
#include "acis/imaging_io.hpp"
#include "acis/metrics.hpp"
#include "acis/model.hpp"
#include "acis/summary.hpp"

namespace acis {

// ---------------------------------------------------------------------------
// Losses. `probs` is the B×2×H×W softmax output, `target` a B×H×W {0,1} tensor.

enum class LossKind { log, mdc, weighted_log };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;
/// Added to numerator and denominator of the Dice ratio; makes empty-vs-empty a loss of 0.
inline constexpr double kDiceSmoothing = 1e-7;

/// Mean over pixels of -[w·t·log p1 + (1-t)·log p0], w = fn_weight on neuron pixels.
torch::Tensor log_loss(const torch::Tensor& probs, const torch::Tensor& target, double fn_weight = 1.0);

/// 1 - (2Σpt + ε) / (Σp² + Σt² + ε) on the neuron channel, per batch item, then averaged.
torch::Tensor mdc_loss(const torch::Tensor& probs, const torch::Tensor& target);

/// `fn_weight` is used only by weighted_log.
torch::Tensor compute_loss(LossKind kind, const torch::Tensor& probs, const torch::Tensor& target,
                           double fn_weight);

// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 0.002;
    int batch_size = 20;
    int window = 128;
    int epochs = 10;
    int steps_per_epoch = 100;
    LossKind loss = LossKind::log;
    double fn_weight = 2.0;  // weighted_log only
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double train_fraction = 0.75;
    int max_sampling_attempts = 100;
    bool augment_windows = true;
    /// Epoch-end validation settings.
    double threshold = 0.5;
    int min_region_size = 9;
    double match_distance = kDefaultMatchDistance;
    bool validate_with_tta = false;
    /// When set, the best checkpoint is also written here as soon as it is taken.
    std::optional<std::filesystem::path> checkpoint_path;

    /// Throws ValidationError. `divisor` is the network's 2^depth.
    void validate(int divisor) const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& json);

/// Rows [0, split_row) train, [split_row, H) validate. Regions straddling the boundary are
/// clipped to each portion; validation regions are shifted into strip coordinates.
struct SplitDataset {
    std::string name;
    int split_row = 0;
    NormalizedImage train_image;
    BinaryMask train_mask;
    NormalizedImage val_image;
    BinaryMask val_mask;
    RegionList val_regions;
};

/// split_row = floor(fraction · H). Warns when the training portion is shorter than `window`.
SplitDataset split_train_val(const NormalizedImage& image, const BinaryMask& mask, const RegionList& regions = {},
                             std::string name = {}, double fraction = 0.75, int window = 128);

/// Mean summary, normalization, merged mask and split for each bundle (bundles need regions).
std::vector<SplitDataset> prepare_splits(std::span<const DatasetBundle> bundles, const TrainConfig& config);

struct SampleWindow {
    Grid<double> image;
    BinaryMask mask;
    Dihedral transform;
    std::size_t dataset = 0;
    int top = 0;
    int left = 0;
    bool fallback = false;  // placed around a random neuron pixel after rejection sampling gave up
};

/// `batch_size` windows; see TrainConfig for the window size and retry bound. Throws
/// ValidationError when no training portion can hold a window with a neuron pixel.
std::vector<SampleWindow> sample_batch(std::mt19937_64& rng, std::span<const SplitDataset> splits,
                                       const TrainConfig& config);

/// Images B×1×w×w in `dtype` and targets B×w×w (same dtype).
std::pair<torch::Tensor, torch::Tensor> to_tensors(std::span<const SampleWindow> batch, torch::Dtype dtype);

struct ValidationScores {
    double neurofinder_f1 = 0.0;  // mean over datasets
    double pixelwise_f1 = 0.0;    // mean over datasets
    std::vector<NamedReport> reports;
};

/// Full-strip prediction (zero padded to the divisor, cropped back), binarize, extract,
/// then evaluate_dataset against the strip's regions.
ValidationScores validate(Network& net, std::span<const SplitDataset> splits, const TrainConfig& config);

/// Mean over datasets of pixelwise F1 of the binarized prediction on the training portion.
double training_pixel_f1(Network& net, std::span<const SplitDataset> splits, double threshold = 0.5);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_pixel_f1 = 0.0;
    double val_neurofinder_f1 = 0.0;
    bool checkpoint_taken = false;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

struct TrainResult {
    Checkpoint best;
    TrainHistory history;
};

/// Raised when the loss becomes non-finite. Carries the step's batch seed.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& message, int epoch, int step, std::uint64_t batch_seed)
        : Error(message), epoch(epoch), step(step), batch_seed(batch_seed) {}
    int epoch;
    int step;
    std::uint64_t batch_seed;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on sampled batches for epochs × steps_per_epoch updates, validating after each epoch
/// and keeping the weights with the best mean validation Neurofinder F1 (strict improvement).
/// `net` ends holding the final-epoch weights; the best ones are in the returned checkpoint.
/// Reseeds the global torch generator (used by dropout) from config.seed.
TrainResult train(Network& net, std::span<const SplitDataset> splits, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});
TrainResult train(Network& net, std::span<const DatasetBundle> bundles, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Seed of the batch drawn at (epoch, step); each step gets its own generator.
std::uint64_t batch_seed(std::uint64_t seed, int epoch, int step);

}  // namespace acis
