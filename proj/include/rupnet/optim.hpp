#pragma once

#include <cstdint>

#include "rupnet/model.hpp"

namespace rupnet::train {

/// Step counter and hyperparameters; the first and second moment buffers live in the ParamStore.
struct AdamState {
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam update over every trainable parameter, then zeroes the gradients.
/// Throws NumericError naming the first parameter with a non-finite gradient; in that case
/// nothing is updated.
template <typename T>
void adam_step(ParamStore<T>& store, AdamState& state, double lr);

}  // namespace rupnet::train
