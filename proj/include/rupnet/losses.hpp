#pragma once

#include "rupnet/tensor.hpp"

namespace rupnet::train {

inline constexpr double kProbClamp = 1e-7;

template <typename T>
struct LossResult {
    double value = 0.0;
    BasicTensor<T> grad;  // d(value) / d(pred)
};

/// Mean binary cross-entropy over all elements; pred is clamped to [1e-7, 1 - 1e-7].
/// The gradient passes straight through the clamp.
template <typename T>
LossResult<T> bce_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

/// Soft dice loss 1 - (2 sum(p t) + smooth) / (sum(p) + sum(t) + smooth), computed per image
/// (leading axis of a rank-4 tensor; the whole tensor otherwise) and averaged.
template <typename T>
LossResult<T> dice_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, double smooth);

struct LossWeights {
    double bce = 1.0;
    double dice = 1.0;
    double dice_smooth = 1.0;
};

template <typename T>
LossResult<T> combined_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, const LossWeights& w);

}  // namespace rupnet::train
