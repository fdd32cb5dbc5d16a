#include "rupnet/augment.hpp"

#include <algorithm>

namespace rupnet::train {

void AugmentationConfig::validate() const {
    if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0) || !(vflip_prob >= 0.0 && vflip_prob <= 1.0)) {
        throw ConfigError("aug: flip probabilities must be in [0, 1]");
    }
    if (rotations.empty()) throw ConfigError("aug.rotations must not be empty");
    for (int r : rotations) {
        if (r != 0 && r != 90 && r != 180 && r != 270) {
            throw ConfigError("aug.rotations accepts only 0, 90, 180, 270; got " + std::to_string(r));
        }
    }
    if (!(brightness[0] > 0.0 && brightness[0] <= brightness[1])) {
        throw ConfigError("aug.brightness must satisfy 0 < lo <= hi");
    }
}

AugmentationChoice draw_augmentation(Rng& rng, const AugmentationConfig& cfg) {
    AugmentationChoice c;
    c.hflip = rng.uniform() < cfg.hflip_prob;
    c.vflip = rng.uniform() < cfg.vflip_prob;
    c.rotation = cfg.rotations[rng.below(cfg.rotations.size())];
    c.brightness = rng.uniform(cfg.brightness[0], cfg.brightness[1]);
    return c;
}

namespace {

// Maps every output pixel of a C x H x W tensor through a square-preserving index transform.
template <typename F>
Tensor remap(const Tensor& t, F&& source_of) {
    const std::size_t channels = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out(t.shape());
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < h; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                const auto [si, sj] = source_of(i, j);
                out[(c * h + i) * w + j] = t[(c * h + si) * w + sj];
            }
        }
    }
    return out;
}

Tensor geometric(const Tensor& t, const AugmentationChoice& c) {
    const std::size_t h = t.dim(1), w = t.dim(2);
    int rotation = c.rotation;
    if (h != w && (rotation == 90 || rotation == 270)) rotation = 0;
    if (!c.hflip && !c.vflip && rotation == 0) return t;
    return remap(t, [&](std::size_t i, std::size_t j) {
        // Rotation (counter-clockwise) is applied after the flips.
        std::size_t si = i, sj = j;
        switch (rotation) {
            case 90: si = j; sj = w - 1 - i; break;
            case 180: si = h - 1 - i; sj = w - 1 - j; break;
            case 270: si = h - 1 - j; sj = i; break;
            default: break;
        }
        if (c.vflip) si = h - 1 - si;
        if (c.hflip) sj = w - 1 - sj;
        return std::pair{si, sj};
    });
}

}  // namespace

data::Sample apply_augmentation(const data::Sample& sample, const AugmentationChoice& choice) {
    data::Sample out{sample.id, geometric(sample.image, choice), geometric(sample.mask, choice)};
    if (choice.brightness != 1.0) {
        const auto f = static_cast<float>(choice.brightness);
        for (auto& v : out.image.values()) v = std::clamp(v * f, 0.0f, 1.0f);
    }
    return out;
}

data::Sample augment(const data::Sample& sample, Rng& rng, const AugmentationConfig& cfg) {
    if (!cfg.enabled) return sample;
    return apply_augmentation(sample, draw_augmentation(rng, cfg));
}

}  // namespace rupnet::train
