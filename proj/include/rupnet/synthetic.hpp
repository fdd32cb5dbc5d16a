#pragma once

#include <cstdint>
#include <vector>

#include "rupnet/dataset.hpp"

namespace rupnet::data {

struct SynthConfig {
    int count = 200;
    int size = 64;
    int min_blobs = 1;
    int max_blobs = 3;
    double min_radius = 0.05;  // fraction of size
    double max_radius = 0.25;
    double noise_amplitude = 0.1;
    std::uint64_t seed = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Rotated ellipse in pixel coordinates (pixel (i, j) has center (j + 0.5, i + 0.5)).
struct Ellipse {
    double cx = 0, cy = 0;
    double rx = 1, ry = 1;
    double angle = 0;  // radians

    bool contains(double x, double y) const;
};

struct SyntheticSample {
    Sample sample;
    std::vector<Ellipse> ellipses;
};

/// Sample `index` of the synthetic set. A smooth noisy background with 1..3 anti-aliased
/// textured ellipses; the mask is 1 exactly where the pixel center lies inside an ellipse.
/// Depends only on (cfg, index).
SyntheticSample generate_synthetic_sample(const SynthConfig& cfg, int index);

Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace rupnet::data
