#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "rupnet/tensor.hpp"

namespace rupnet::nn {

enum class Mode { kTrain, kInfer };

// ---------------------------------------------------------------------------
// Records saved by forward passes for use by backward.
// ---------------------------------------------------------------------------

template <typename T>
struct ConvRecord {
    BasicTensor<T> input;
    BasicTensor<T> weight;
    bool has_bias = false;
};

template <typename T>
struct BatchNormRecord {
    BasicTensor<T> xhat;          // normalized input
    std::vector<T> gamma;
    std::vector<T> inv_std;       // 1 / sqrt(var + eps) for the statistics actually used
    std::vector<T> batch_mean;    // empty when running statistics were used
    std::vector<T> batch_var;     // biased variance over N, H, W
    bool used_batch_stats = false;
};

template <typename T>
struct ReluRecord {
    BasicTensor<T> output;
};

template <typename T>
struct MaxPoolRecord {
    Shape input_shape;
    std::vector<std::size_t> argmax;  // flat input index per output element
};

template <typename T>
struct UpsampleRecord {
    Shape input_shape;
    int factor = 2;
};

template <typename T>
struct SigmoidRecord {
    BasicTensor<T> output;
};

template <typename T>
using OpRecord = std::variant<ConvRecord<T>, BatchNormRecord<T>, ReluRecord<T>, MaxPoolRecord<T>, UpsampleRecord<T>,
                              SigmoidRecord<T>>;

/// Gradient with respect to the op input plus its parameters, in declaration order
/// (conv: weight[, bias]; batchnorm: gamma, beta).
template <typename T>
struct BackwardResult {
    BasicTensor<T> input_grad;
    std::vector<BasicTensor<T>> param_grads;
};

// ---------------------------------------------------------------------------
// Convolution: stride 1, square kernel K in {1, 3}, "same" zero padding (pad = K / 2).
// ---------------------------------------------------------------------------

/// x: N x Cin x H x W, w: Cout x Cin x K x K, bias: Cout values or nullptr.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const std::type_identity_t<BasicTensor<T>>* bias, int pad,
                      ConvRecord<T>* record = nullptr);

template <typename T>
BackwardResult<T> conv2d_backward(const ConvRecord<T>& record, const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------
// Batch normalization.
// ---------------------------------------------------------------------------

/// Read-only view over batch-norm parameters and running statistics.
template <typename T>
struct BatchNormParams {
    std::span<const T> gamma;
    std::span<const T> beta;
    std::span<const T> running_mean;
    std::span<const T> running_var;
    double eps = 1e-5;
};

/// Owning batch-norm state for standalone use.
template <typename T>
struct BatchNormState {
    explicit BatchNormState(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

    BasicTensor<T> gamma;
    BasicTensor<T> beta;
    BasicTensor<T> running_mean;
    BasicTensor<T> running_var;
    double momentum;
    double eps;

    BatchNormParams<T> params() const;
};

/// Normalizes with batch statistics when use_batch_stats is true, otherwise with running
/// statistics. Never mutates state; see update_running_stats.
template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, const BatchNormParams<T>& p, bool use_batch_stats,
                                 BatchNormRecord<T>* record = nullptr);

/// running <- (1 - momentum) * running + momentum * batch, using the record's batch statistics.
template <typename T>
void update_running_stats(std::span<T> running_mean, std::span<T> running_var, const BatchNormRecord<T>& record,
                          double momentum);

/// Train mode normalizes with batch statistics and updates the running statistics;
/// infer mode uses running statistics and leaves the state untouched.
template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode,
                         BatchNormRecord<T>* record = nullptr);

template <typename T>
BackwardResult<T> batchnorm_backward(const BatchNormRecord<T>& record, const BasicTensor<T>& upstream);

// ---------------------------------------------------------------------------
// Activations, pooling, resampling.
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x, ReluRecord<T>* record = nullptr);

template <typename T>
BackwardResult<T> relu_backward(const ReluRecord<T>& record, const BasicTensor<T>& upstream);

template <typename T>
struct MaxPoolResult {
    BasicTensor<T> output;
    std::vector<std::size_t> argmax;
};

/// Non-overlapping 2x2 max pooling. Ties resolve to the first element in row-major window order.
template <typename T>
MaxPoolResult<T> maxpool2x2(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& x, MaxPoolRecord<T>* record);

template <typename T>
BackwardResult<T> maxpool2x2_backward(const MaxPoolRecord<T>& record, const BasicTensor<T>& upstream);

/// Bilinear upsampling with half-pixel centers: source coordinate (d + 0.5) / f - 0.5,
/// clamped to the valid range. factor must be 2 or 4.
template <typename T>
BasicTensor<T> bilinear_upsample(const BasicTensor<T>& x, int factor, UpsampleRecord<T>* record = nullptr);

template <typename T>
BackwardResult<T> bilinear_upsample_backward(const UpsampleRecord<T>& record, const BasicTensor<T>& upstream);

/// Logistic function. Outputs are kept inside the open interval (0, 1) even where T saturates.
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x, SigmoidRecord<T>* record = nullptr);

template <typename T>
BackwardResult<T> sigmoid_backward(const SigmoidRecord<T>& record, const BasicTensor<T>& upstream);

/// Dispatch on the record kind.
template <typename T>
BackwardResult<T> backward(const OpRecord<T>& record, const BasicTensor<T>& upstream);

}  // namespace rupnet::nn
