#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "acis/errors.hpp"
#include "acis/summary.hpp"

namespace acis {

/// Hyperparameters of the U-Net2DS family. Defaults give the published network: stage
/// widths 32, 64, 128, 256 and a 512-wide bottleneck (half of the original U-Net).
struct ModelConfig {
    int base_filters = 32;
    int depth = 4;  // down/up block pairs
    int convs_per_block = 2;
    int kernel_size = 3;
    /// One spatial-dropout rate per down block plus one for the bottleneck (depth + 1 values).
    std::vector<double> dropout_rates = {0.1, 0.2, 0.3, 0.4, 0.5};
    int input_channels = 1;
    int output_classes = 2;
    bool batch_norm = true;

    /// Throws ValidationError on any out-of-range field.
    void validate() const;

    /// Spatial sizes must be multiples of this (2^depth).
    int divisor() const { return 1 << depth; }
    int stage_filters(int stage) const { return base_filters << stage; }

    /// Same architecture at a different width; dropout schedule is kept.
    ModelConfig with_base_filters(int filters) const;

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& json);

/// Layer-by-layer trainable parameter count (conv weights and biases, BN scale and shift).
std::int64_t closed_form_parameter_count(const ModelConfig& config);

/// conv → BN → ReLU, zero padded so the spatial size is unchanged.
class ConvUnitImpl : public torch::nn::Module {
public:
    ConvUnitImpl(int in_channels, int out_channels, int kernel_size, bool batch_norm);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv{nullptr};
    torch::nn::BatchNorm2d norm{nullptr};
};
TORCH_MODULE(ConvUnit);

/// The fully convolutional encoder/decoder. Returns per-pixel class logits (N×classes×H×W).
class UNet2DSImpl : public torch::nn::Module {
public:
    explicit UNet2DSImpl(const ModelConfig& config);
    torch::Tensor forward(const torch::Tensor& x);

    const ModelConfig& config() const { return config_; }

private:
    ModelConfig config_;
    torch::nn::ModuleList encoder_{nullptr};
    torch::nn::ModuleList encoder_dropout_{nullptr};
    torch::nn::Sequential bottleneck_{nullptr};
    torch::nn::Dropout2d bottleneck_dropout_{nullptr};
    torch::nn::ModuleList upsample_{nullptr};
    torch::nn::ModuleList decoder_{nullptr};
    torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNet2DS);

enum class Mode { train, infer };

/// U-Net2DS plus its configuration. In infer mode dropout is off, batch norm uses running
/// statistics and no autograd graph is recorded.
class Network {
public:
    Network(const ModelConfig& config, std::uint64_t seed, torch::Dtype dtype = torch::kFloat32);

    /// images: B×H×W or B×1×H×W, with H and W multiples of config().divisor().
    /// Returns B×classes×H×W softmax probabilities.
    torch::Tensor forward(const torch::Tensor& images, Mode mode);
    torch::Tensor forward_logits(const torch::Tensor& images, Mode mode);

    const ModelConfig& config() const { return config_; }
    torch::Dtype dtype() const { return dtype_; }
    UNet2DS& module() { return module_; }
    const UNet2DS& module() const { return module_; }

    std::int64_t count_parameters() const;

    /// Throws ValidationError naming the divisor when a spatial size is not divisible.
    void check_input_shape(std::int64_t height, std::int64_t width) const;

private:
    torch::Tensor prepare(const torch::Tensor& images) const;

    ModelConfig config_;
    torch::Dtype dtype_;
    UNet2DS module_{nullptr};
};

/// Stacks normalized images into a B×1×H×W tensor.
torch::Tensor to_batch(std::span<const NormalizedImage> images, torch::Dtype dtype = torch::kFloat32);
torch::Tensor to_tensor(const Grid<double>& values, torch::Dtype dtype = torch::kFloat32);
Grid<double> to_grid(const torch::Tensor& map2d);

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointMetadata {
    int epoch = 0;
    double validation_f1 = 0.0;
    double validation_pixel_f1 = 0.0;
    std::uint64_t seed = 0;
    std::string note;
};

struct NamedTensor {
    std::string name;
    torch::Tensor value;
};

/// Detached snapshot of a network's parameters and buffers.
struct Checkpoint {
    ModelConfig config;
    CheckpointMetadata metadata;
    std::vector<NamedTensor> tensors;

    static Checkpoint capture(const Network& net, CheckpointMetadata metadata);
    /// Rebuilds a network with exactly these weights. Throws CheckpointError if the tensor set
    /// does not fit the configured architecture.
    Network restore() const;
};

/// Unreadable, corrupt or incompatible checkpoint file.
class CheckpointError : public FormatError {
public:
    using FormatError::FormatError;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Stable 64-bit FNV-1a hash of the canonical config JSON.
std::string config_hash(const ModelConfig& config);

/// File layout: "ACISCKPT", u32 format version, u64 header length, JSON header (config,
/// config hash, metadata, tensor table), then raw little-endian tensor data.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
void save_checkpoint(const Network& net, const CheckpointMetadata& metadata, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace acis
