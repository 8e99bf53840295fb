#include "acis/model.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "acis/errors.hpp"
#include "acis/file_util.hpp"

namespace acis {

namespace {

constexpr char kMagic[8] = {'A', 'C', 'I', 'S', 'C', 'K', 'P', 'T'};

std::int64_t conv_parameters(std::int64_t in, std::int64_t out, std::int64_t kernel) {
    return in * out * kernel * kernel + out;
}

}  // namespace

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("model config: " + what); };
    if (base_filters < 1) fail("base_filters must be >= 1");
    if (depth < 1 || depth > 8) fail("depth must be in [1, 8]");
    if (convs_per_block < 1) fail("convs_per_block must be >= 1");
    if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel_size must be odd and positive");
    if (static_cast<int>(dropout_rates.size()) != depth + 1) {
        fail(fmt::format("expected {} dropout rates (depth + 1), got {}", depth + 1, dropout_rates.size()));
    }
    for (double p : dropout_rates) {
        if (!(p >= 0.0 && p < 1.0)) fail(fmt::format("dropout rate {} outside [0, 1)", p));
    }
    if (input_channels < 1) fail("input_channels must be >= 1");
    if (output_classes < 2) fail("output_classes must be >= 2");
}

ModelConfig ModelConfig::with_base_filters(int filters) const {
    ModelConfig out = *this;
    out.base_filters = filters;
    return out;
}

nlohmann::json to_json(const ModelConfig& config) {
    return {{"base_filters", config.base_filters},     {"depth", config.depth},
            {"convs_per_block", config.convs_per_block}, {"kernel_size", config.kernel_size},
            {"dropout_rates", config.dropout_rates},   {"input_channels", config.input_channels},
            {"output_classes", config.output_classes}, {"batch_norm", config.batch_norm}};
}

ModelConfig model_config_from_json(const nlohmann::json& json) {
    if (!json.is_object()) throw FormatError("model config must be a JSON object");
    ModelConfig c;
    try {
        c.base_filters = json.value("base_filters", c.base_filters);
        c.depth = json.value("depth", c.depth);
        c.convs_per_block = json.value("convs_per_block", c.convs_per_block);
        c.kernel_size = json.value("kernel_size", c.kernel_size);
        c.dropout_rates = json.value("dropout_rates", c.dropout_rates);
        c.input_channels = json.value("input_channels", c.input_channels);
        c.output_classes = json.value("output_classes", c.output_classes);
        c.batch_norm = json.value("batch_norm", c.batch_norm);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

std::int64_t closed_form_parameter_count(const ModelConfig& config) {
    config.validate();
    const std::int64_t k = config.kernel_size;
    const std::int64_t bn = config.batch_norm ? 2 : 0;
    auto block = [&](std::int64_t in, std::int64_t out) {
        std::int64_t n = conv_parameters(in, out, k) + bn * out;
        n += (config.convs_per_block - 1) * (conv_parameters(out, out, k) + bn * out);
        return n;
    };
    std::int64_t total = 0;
    std::int64_t in = config.input_channels;
    for (int level = 0; level <= config.depth; ++level) {  // encoder blocks and bottleneck
        const std::int64_t f = config.stage_filters(level);
        total += block(in, f);
        in = f;
    }
    for (int level = config.depth - 1; level >= 0; --level) {
        const std::int64_t f = config.stage_filters(level);
        total += conv_parameters(2 * f, f, 2);  // 2x2 transposed conv from the level below
        total += block(2 * f, f);               // after concatenation with the skip
    }
    total += conv_parameters(config.base_filters, config.output_classes, 1);
    return total;
}

// ---------------------------------------------------------------------------

ConvUnitImpl::ConvUnitImpl(int in_channels, int out_channels, int kernel_size, bool batch_norm) {
    conv = register_module(
        "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, kernel_size)
                                      .padding(kernel_size / 2)));
    if (batch_norm) {
        norm = register_module("norm", torch::nn::BatchNorm2d(out_channels));
    }
}

torch::Tensor ConvUnitImpl::forward(const torch::Tensor& x) {
    auto y = conv(x);
    if (norm) y = norm(y);
    return torch::relu(y);
}

namespace {

torch::nn::Sequential make_block(const ModelConfig& c, int in, int out) {
    torch::nn::Sequential block;
    for (int i = 0; i < c.convs_per_block; ++i) {
        block->push_back(ConvUnit(i == 0 ? in : out, out, c.kernel_size, c.batch_norm));
    }
    return block;
}

}  // namespace

UNet2DSImpl::UNet2DSImpl(const ModelConfig& config) : config_(config) {
    config_.validate();
    encoder_ = register_module("encoder", torch::nn::ModuleList());
    encoder_dropout_ = register_module("encoder_dropout", torch::nn::ModuleList());
    int in = config_.input_channels;
    for (int level = 0; level < config_.depth; ++level) {
        const int f = config_.stage_filters(level);
        encoder_->push_back(make_block(config_, in, f));
        encoder_dropout_->push_back(torch::nn::Dropout2d(torch::nn::Dropout2dOptions(config_.dropout_rates[level])));
        in = f;
    }
    bottleneck_ = register_module("bottleneck", make_block(config_, in, config_.stage_filters(config_.depth)));
    bottleneck_dropout_ = register_module(
        "bottleneck_dropout", torch::nn::Dropout2d(torch::nn::Dropout2dOptions(config_.dropout_rates[config_.depth])));
    upsample_ = register_module("upsample", torch::nn::ModuleList());
    decoder_ = register_module("decoder", torch::nn::ModuleList());
    for (int level = 0; level < config_.depth; ++level) {
        const int f = config_.stage_filters(level);
        upsample_->push_back(
            torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(2 * f, f, 2).stride(2)));
        decoder_->push_back(make_block(config_, 2 * f, f));
    }
    head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(config_.base_filters,
                                                                                config_.output_classes, 1)));
}

torch::Tensor UNet2DSImpl::forward(const torch::Tensor& input) {
    std::vector<torch::Tensor> skips;
    auto x = input;
    for (int level = 0; level < config_.depth; ++level) {
        x = encoder_[level]->as<torch::nn::Sequential>()->forward(x);
        skips.push_back(x);
        x = torch::max_pool2d(x, 2);
        x = encoder_dropout_[level]->as<torch::nn::Dropout2d>()->forward(x);
    }
    x = bottleneck_dropout_(bottleneck_->forward(x));
    for (int level = config_.depth - 1; level >= 0; --level) {
        x = upsample_[level]->as<torch::nn::ConvTranspose2d>()->forward(x);
        x = torch::cat({skips[level], x}, 1);
        x = decoder_[level]->as<torch::nn::Sequential>()->forward(x);
    }
    return head_(x);
}

// ---------------------------------------------------------------------------

Network::Network(const ModelConfig& config, std::uint64_t seed, torch::Dtype dtype)
    : config_(config), dtype_(dtype) {
    config_.validate();
    if (dtype != torch::kFloat32 && dtype != torch::kFloat64) {
        throw ValidationError("network dtype must be float32 or float64");
    }
    module_ = UNet2DS(config_);
    // He-normal weights from a private generator, so construction never touches global RNG state.
    auto gen = at::detail::createCPUGenerator(seed);
    torch::NoGradGuard no_grad;
    for (auto& item : module_->named_parameters()) {
        auto& p = item.value();
        const auto& name = item.key();
        const bool is_norm = name.find("norm") != std::string::npos;
        if (name.ends_with("bias")) {
            p.zero_();
        } else if (is_norm) {
            p.fill_(1.0);
        } else {
            const auto [fan_in, fan_out] = torch::nn::init::_calculate_fan_in_and_fan_out(p);
            (void)fan_out;
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            p.copy_(torch::randn(p.sizes(), gen, torch::kFloat32) * stddev);
        }
    }
    module_->to(dtype_);
}

void Network::check_input_shape(std::int64_t height, std::int64_t width) const {
    const int d = config_.divisor();
    if (height <= 0 || width <= 0 || height % d != 0 || width % d != 0) {
        throw ValidationError(fmt::format("input size {}x{} is not divisible by {} (2^depth); pad the image first",
                                          height, width, d));
    }
}

torch::Tensor Network::prepare(const torch::Tensor& images) const {
    torch::Tensor x = images;
    if (x.dim() == 3 && config_.input_channels == 1) x = x.unsqueeze(1);
    if (x.dim() != 4 || x.size(1) != config_.input_channels) {
        throw ValidationError(fmt::format("expected input of shape Bx{}xHxW", config_.input_channels));
    }
    check_input_shape(x.size(2), x.size(3));
    return x.to(dtype_);
}

torch::Tensor Network::forward_logits(const torch::Tensor& images, Mode mode) {
    auto x = prepare(images);
    if (mode == Mode::infer) {
        torch::NoGradGuard no_grad;
        module_->eval();
        return module_->forward(x);
    }
    module_->train();
    return module_->forward(x);
}

torch::Tensor Network::forward(const torch::Tensor& images, Mode mode) {
    auto logits = forward_logits(images, mode);
    if (mode == Mode::infer) {
        torch::NoGradGuard no_grad;
        return torch::softmax(logits, 1);
    }
    return torch::softmax(logits, 1);
}

std::int64_t Network::count_parameters() const {
    std::int64_t n = 0;
    for (const auto& p : module_->parameters()) {
        if (p.requires_grad()) n += p.numel();
    }
    return n;
}

torch::Tensor to_tensor(const Grid<double>& values, torch::Dtype dtype) {
    auto t = torch::from_blob(const_cast<double*>(values.data()), {values.rows(), values.cols()}, torch::kFloat64);
    return t.to(dtype, /*non_blocking=*/false, /*copy=*/true);
}

torch::Tensor to_batch(std::span<const NormalizedImage> images, torch::Dtype dtype) {
    if (images.empty()) throw ValidationError("to_batch: no images");
    std::vector<torch::Tensor> items;
    for (const auto& img : images) {
        if (!img.values().same_shape(images.front().values())) {
            throw ValidationError("to_batch: images differ in shape");
        }
        items.push_back(to_tensor(img.values(), dtype).unsqueeze(0));
    }
    return torch::stack(items);
}

Grid<double> to_grid(const torch::Tensor& map2d) {
    if (map2d.dim() != 2) throw ValidationError("to_grid: expected a 2D tensor");
    auto t = map2d.detach().to(torch::kCPU, torch::kFloat64).contiguous();
    const auto rows = static_cast<int>(t.size(0));
    const auto cols = static_cast<int>(t.size(1));
    const double* p = t.data_ptr<double>();
    return Grid<double>(rows, cols, std::vector<double>(p, p + t.numel()));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string dtype_name(torch::Dtype d) {
    switch (d) {
        case torch::kFloat32: return "float32";
        case torch::kFloat64: return "float64";
        case torch::kInt64: return "int64";
        default: throw CheckpointError("unsupported tensor dtype in checkpoint");
    }
}

torch::Dtype parse_dtype(const std::string& s) {
    if (s == "float32") return torch::kFloat32;
    if (s == "float64") return torch::kFloat64;
    if (s == "int64") return torch::kInt64;
    throw CheckpointError("unknown tensor dtype '" + s + "' in checkpoint");
}

nlohmann::json metadata_to_json(const CheckpointMetadata& m) {
    return {{"epoch", m.epoch},
            {"validation_f1", m.validation_f1},
            {"validation_pixel_f1", m.validation_pixel_f1},
            {"seed", m.seed},
            {"note", m.note}};
}

CheckpointMetadata metadata_from_json(const nlohmann::json& j) {
    CheckpointMetadata m;
    m.epoch = j.value("epoch", 0);
    m.validation_f1 = j.value("validation_f1", 0.0);
    m.validation_pixel_f1 = j.value("validation_pixel_f1", 0.0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.note = j.value("note", std::string());
    return m;
}

template <typename T>
void append_pod(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

}  // namespace

std::string config_hash(const ModelConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

Checkpoint Checkpoint::capture(const Network& net, CheckpointMetadata metadata) {
    Checkpoint c{net.config(), std::move(metadata), {}};
    torch::NoGradGuard no_grad;
    for (const auto& item : net.module()->named_parameters()) {
        c.tensors.push_back({item.key(), item.value().detach().clone().contiguous()});
    }
    for (const auto& item : net.module()->named_buffers()) {
        c.tensors.push_back({item.key(), item.value().detach().clone().contiguous()});
    }
    return c;
}

Network Checkpoint::restore() const {
    torch::Dtype dtype = torch::kFloat32;
    for (const auto& t : tensors) {
        if (t.value.is_floating_point()) {
            dtype = t.value.scalar_type();
            break;
        }
    }
    Network net(config, 0, dtype);
    std::map<std::string, torch::Tensor> by_name;
    for (const auto& t : tensors) by_name[t.name] = t.value;

    std::size_t used = 0;
    torch::NoGradGuard no_grad;
    auto load = [&](const std::string& name, torch::Tensor& target) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
        if (it->second.sizes() != target.sizes()) {
            throw CheckpointError("checkpoint tensor '" + name + "' has the wrong shape");
        }
        target.copy_(it->second);
        ++used;
    };
    for (auto& item : net.module()->named_parameters()) load(item.key(), item.value());
    for (auto& item : net.module()->named_buffers()) load(item.key(), item.value());
    if (used != by_name.size()) throw CheckpointError("checkpoint holds tensors the architecture does not use");
    return net;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    nlohmann::json table = nlohmann::json::array();
    std::string payload;
    for (const auto& t : checkpoint.tensors) {
        const auto v = t.value.to(torch::kCPU).contiguous();
        const auto bytes = static_cast<std::size_t>(v.numel()) * v.element_size();
        table.push_back({{"name", t.name},
                         {"dtype", dtype_name(v.scalar_type())},
                         {"shape", v.sizes().vec()},
                         {"offset", payload.size()},
                         {"bytes", bytes}});
        payload.append(static_cast<const char*>(v.data_ptr()), bytes);
    }
    const nlohmann::json header = {{"format_version", kCheckpointFormatVersion},
                                   {"config", to_json(checkpoint.config)},
                                   {"config_hash", config_hash(checkpoint.config)},
                                   {"metadata", metadata_to_json(checkpoint.metadata)},
                                   {"tensors", table}};
    const std::string header_text = header.dump();
    std::string out(kMagic, sizeof(kMagic));
    append_pod<std::uint32_t>(out, kCheckpointFormatVersion);
    append_pod<std::uint64_t>(out, header_text.size());
    out += header_text;
    out += payload;
    write_file_atomic(path, out);
}

void save_checkpoint(const Network& net, const CheckpointMetadata& metadata, const std::filesystem::path& path) {
    save_checkpoint(Checkpoint::capture(net, metadata), path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[sizeof(kMagic)];
    std::uint32_t version = 0;
    std::uint64_t header_len = 0;
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError(path.string() + " is not a checkpoint file");
    }
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in) throw CheckpointError(path.string() + ": truncated checkpoint header");
    if (version != kCheckpointFormatVersion) {
        throw CheckpointError(fmt::format("{}: checkpoint format version {} is not supported (expected {})",
                                          path.string(), version, kCheckpointFormatVersion));
    }
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw CheckpointError(path.string() + ": truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": corrupt checkpoint header: " + e.what());
    }

    Checkpoint c;
    try {
        c.config = model_config_from_json(header.at("config"));
        const auto stored_hash = header.at("config_hash").get<std::string>();
        if (stored_hash != config_hash(c.config)) {
            throw CheckpointError(fmt::format(
                "{}: config hash {} does not match {}; the checkpoint was written by an incompatible version",
                path.string(), stored_hash, config_hash(c.config)));
        }
        c.metadata = metadata_from_json(header.at("metadata"));
        const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (const auto& entry : header.at("tensors")) {
            const auto offset = entry.at("offset").get<std::size_t>();
            const auto bytes = entry.at("bytes").get<std::size_t>();
            const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
            const auto dtype = parse_dtype(entry.at("dtype").get<std::string>());
            if (offset + bytes > payload.size()) throw CheckpointError(path.string() + ": truncated tensor data");
            auto t = torch::empty(shape, dtype);
            if (static_cast<std::size_t>(t.numel()) * t.element_size() != bytes) {
                throw CheckpointError(path.string() + ": tensor size does not match its shape");
            }
            std::memcpy(t.data_ptr(), payload.data() + offset, bytes);
            c.tensors.push_back({entry.at("name").get<std::string>(), t});
        }
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path.string() + ": malformed checkpoint header: " + e.what());
    } catch (const ValidationError& e) {
        throw CheckpointError(path.string() + ": " + e.what());
    }
    return c;
}

}  // namespace acis
