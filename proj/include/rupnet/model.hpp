#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rupnet/nn_ops.hpp"
#include "rupnet/rng.hpp"
#include "rupnet/tensor.hpp"

namespace rupnet {

using nn::Mode;

/// Topology and batch-norm hyperparameters. Fully determines parameter names and shapes.
struct NetworkConfig {
    int in_channels = 3;
    std::array<int, 3> encoder_channels{16, 32, 64};
    int bridge_channels = 128;
    std::array<int, 3> decoder_channels{64, 32, 16};
    int image_size = 512;
    // Feed the matching encoder output into each decoder block as well as the head.
    bool decoder_skip_fusion = false;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;

    /// Throws ConfigError.
    void validate() const;

    nlohmann::json to_json() const;
    /// Unknown keys are rejected with ConfigError; missing keys keep their defaults.
    static NetworkConfig from_json(const nlohmann::json& j);

    /// Stable 64-bit hash of the canonical JSON, as 16 hex digits.
    std::string fingerprint() const;

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Named tensors in registration order. Trainable parameters carry gradient and Adam
/// moment buffers of the same shape; non-trainable buffers (batch-norm running
/// statistics) carry only a value.
template <typename T>
class ParamStore {
public:
    struct Entry {
        std::string name;
        BasicTensor<T> value;
        BasicTensor<T> grad;
        BasicTensor<T> m;
        BasicTensor<T> v;
        bool trainable = true;
    };

    std::size_t add_parameter(std::string name, BasicTensor<T> value);
    std::size_t add_buffer(std::string name, BasicTensor<T> value);

    std::size_t size() const noexcept { return entries_.size(); }
    Entry& operator[](std::size_t i) { return entries_[i]; }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }
    std::vector<Entry>& entries() noexcept { return entries_; }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    std::optional<std::size_t> find(const std::string& name) const;

    /// Number of trainable scalars.
    std::size_t trainable_count() const;

    void zero_grad();

private:
    std::vector<Entry> entries_;
};

template <typename T>
struct BlockTape {
    nn::ConvRecord<T> conv1;
    nn::BatchNormRecord<T> bn1;
    nn::ReluRecord<T> relu1;
    nn::ConvRecord<T> conv2;
    nn::BatchNormRecord<T> bn2;
    nn::ConvRecord<T> shortcut_conv;
    nn::BatchNormRecord<T> shortcut_bn;
    nn::ReluRecord<T> out;
};

/// conv3x3 -> BN -> ReLU -> conv3x3 -> BN, plus identity or (1x1 conv -> BN) shortcut, then ReLU.
/// Holds indices into a ParamStore; the store owns the tensors.
template <typename T>
struct ResidualBlock {
    struct BatchNormSlots {
        std::size_t gamma, beta, running_mean, running_var;
    };

    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t conv1 = 0;
    BatchNormSlots bn1{};
    std::size_t conv2 = 0;
    BatchNormSlots bn2{};
    std::optional<std::size_t> shortcut_conv;
    std::optional<BatchNormSlots> shortcut_bn;

    /// Registers the block's tensors under `prefix`. Weights start at zero; gamma at 1.
    static ResidualBlock create(ParamStore<T>& store, const std::string& prefix, std::size_t in, std::size_t out);

    /// Fan-in scaled normal init of every conv weight, std = sqrt(2 / fan_in).
    void initialize(ParamStore<T>& store, Rng& rng) const;

    BasicTensor<T> forward(const ParamStore<T>& store, const BasicTensor<T>& x, bool batch_stats, double eps,
                           BlockTape<T>* tape = nullptr) const;

    /// Accumulates parameter gradients into the store; returns the input gradient.
    BasicTensor<T> backward(ParamStore<T>& store, const BlockTape<T>& tape, const BasicTensor<T>& upstream) const;

    void update_running_stats(ParamStore<T>& store, const BlockTape<T>& tape, double momentum) const;
};

/// Spatial shapes observed at each stage of a forward pass.
struct StageShapes {
    std::array<Shape, 3> encoders;
    Shape bridge;
    std::array<Shape, 3> decoders;
    Shape head_input;
    Shape output;
};

/// Encoder-decoder segmentation network: three residual encoder stages with 2x2 max pooling,
/// a residual bridge, three (bilinear x2 + residual) decoder stages, and a head that
/// concatenates the last decoder output with the encoder outputs brought to full
/// resolution, followed by a 1x1 conv and a sigmoid.
template <typename T>
class Network {
public:
    /// Allocates the topology with zero weights; use build_network for an initialized model.
    explicit Network(const NetworkConfig& config);

    const NetworkConfig& config() const noexcept { return config_; }
    ParamStore<T>& params() noexcept { return store_; }
    const ParamStore<T>& params() const noexcept { return store_; }

    void initialize(Rng& rng);

    /// Train mode records what backward needs and updates BN running statistics
    /// (unless BN is frozen). Infer mode is equivalent to infer().
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode);

    /// Read-only inference; safe to call concurrently. Any spatial size divisible by 8.
    BasicTensor<T> infer(const BasicTensor<T>& x, StageShapes* shapes = nullptr) const;

    /// Backpropagates from d(loss)/d(output) of the most recent train-mode forward,
    /// accumulating into the parameter gradients.
    void backward(const BasicTensor<T>& upstream);

    /// When frozen, train-mode forward normalizes with running statistics and leaves them unchanged.
    void set_bn_frozen(bool frozen) noexcept { bn_frozen_ = frozen; }
    bool bn_frozen() const noexcept { return bn_frozen_; }

    /// Copy with every tensor converted to another scalar type.
    template <typename U>
    Network<U> cast() const {
        Network<U> out(config_);
        for (std::size_t i = 0; i < store_.size(); ++i) out.params()[i].value = store_[i].value.template cast<U>();
        return out;
    }

private:
    struct Tape {
        std::array<BlockTape<T>, 3> encoders;
        std::array<nn::MaxPoolRecord<T>, 3> pools;
        BlockTape<T> bridge;
        std::array<nn::UpsampleRecord<T>, 3> decoder_up;
        std::array<BlockTape<T>, 3> decoders;
        nn::UpsampleRecord<T> skip2_up;
        nn::UpsampleRecord<T> skip4_up;
        nn::ConvRecord<T> head;
        nn::SigmoidRecord<T> sigmoid;
        bool valid = false;
    };

    BasicTensor<T> run(const BasicTensor<T>& x, bool batch_stats, Tape* tape, StageShapes* shapes) const;
    void check_input(const BasicTensor<T>& x, bool train) const;

    NetworkConfig config_;
    ParamStore<T> store_;
    std::array<ResidualBlock<T>, 3> encoders_;
    ResidualBlock<T> bridge_;
    std::array<ResidualBlock<T>, 3> decoders_;
    std::size_t head_weight_ = 0;
    std::size_t head_bias_ = 0;
    bool bn_frozen_ = false;
    Tape tape_;
};

/// Validates the config, then allocates and initializes from `rng`.
template <typename T = float>
Network<T> build_network(const NetworkConfig& config, Rng& rng) {
    config.validate();
    Network<T> net(config);
    net.initialize(rng);
    return net;
}

/// Trainable scalars: conv weights, head bias, BN gamma/beta. Running statistics excluded.
std::size_t param_count(const NetworkConfig& config);

}  // namespace rupnet
