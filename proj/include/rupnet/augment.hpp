#pragma once

#include <array>
#include <vector>

#include "rupnet/dataset.hpp"
#include "rupnet/rng.hpp"

namespace rupnet::train {

struct AugmentationConfig {
    bool enabled = true;
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;
    std::vector<int> rotations{0, 90, 180, 270};  // degrees, drawn uniformly
    std::array<double, 2> brightness{0.8, 1.2};   // multiplicative range

    /// Throws ConfigError.
    void validate() const;
};

/// The concrete draws for one sample.
struct AugmentationChoice {
    bool hflip = false;
    bool vflip = false;
    int rotation = 0;
    double brightness = 1.0;
};

/// Always consumes exactly four draws from `rng`, so the stream position does not depend on the
/// outcome.
AugmentationChoice draw_augmentation(Rng& rng, const AugmentationConfig& cfg);

/// Applies the geometric part to image and mask alike; brightness scales the image only, clamped
/// to [0, 1]. Right-angle rotations of non-square samples are skipped to keep shapes fixed.
data::Sample apply_augmentation(const data::Sample& sample, const AugmentationChoice& choice);

/// Identity when cfg.enabled is false (no draws are made).
data::Sample augment(const data::Sample& sample, Rng& rng, const AugmentationConfig& cfg);

}  // namespace rupnet::train
