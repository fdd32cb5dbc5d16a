#include "rupnet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rupnet/rng.hpp"

namespace rupnet::data {

namespace {

constexpr int kNoiseGrid = 8;
constexpr int kSuper = 4;  // supersampling factor per axis for edge coverage

}  // namespace

void SynthConfig::validate() const {
    if (count < 1) throw ConfigError("synth: count must be >= 1");
    if (size < 8 || size % 8 != 0) throw ConfigError("synth: size must be a positive multiple of 8");
    if (min_blobs < 1 || max_blobs < min_blobs) throw ConfigError("synth: invalid blob count range");
    if (!(min_radius > 0.0 && max_radius < 0.5 && min_radius <= max_radius)) {
        throw ConfigError("synth: radius fractions must satisfy 0 < min <= max < 0.5");
    }
    if (!(noise_amplitude >= 0.0)) throw ConfigError("synth: noise amplitude must be >= 0");
}

bool Ellipse::contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (dx * c + dy * s) / rx;
    const double v = (-dx * s + dy * c) / ry;
    return u * u + v * v <= 1.0;
}

SyntheticSample generate_synthetic_sample(const SynthConfig& cfg, int index) {
    cfg.validate();
    Rng rng = Rng(cfg.seed).derive("synth", static_cast<std::uint64_t>(index));
    const auto n = static_cast<std::size_t>(cfg.size);
    const double size = cfg.size;

    // Background: tissue-like base color plus a smooth low-frequency field.
    const std::array<double, 3> base = {0.62 + rng.uniform(-0.06, 0.06), 0.36 + rng.uniform(-0.05, 0.05),
                                        0.32 + rng.uniform(-0.05, 0.05)};
    Tensor coarse({3, kNoiseGrid, kNoiseGrid});
    for (std::size_t i = 0; i < kNoiseGrid * kNoiseGrid; ++i) {
        const double shared = rng.uniform(-1.0, 1.0);
        for (std::size_t c = 0; c < 3; ++c) {
            coarse[c * kNoiseGrid * kNoiseGrid + i] =
                static_cast<float>(cfg.noise_amplitude * (0.8 * shared + 0.2 * rng.uniform(-1.0, 1.0)));
        }
    }
    const Tensor field = resize_bilinear(coarse, n, n);

    // Foreground: a brighter, yellower tint with a faint stripe texture.
    const std::array<double, 3> tint = {0.93 + rng.uniform(-0.04, 0.04), 0.72 + rng.uniform(-0.06, 0.06),
                                        0.55 + rng.uniform(-0.06, 0.06)};
    const double tex_freq = rng.uniform(0.15, 0.45);
    const double tex_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    SyntheticSample out;
    Tensor mask({1, n, n});
    const double max_positive = size * size / 2.0;
    for (;;) {
        out.ellipses.clear();
        const auto blobs = cfg.min_blobs + static_cast<int>(rng.below(cfg.max_blobs - cfg.min_blobs + 1));
        for (int b = 0; b < blobs; ++b) {
            Ellipse e;
            e.cx = rng.uniform(0.15 * size, 0.85 * size);
            e.cy = rng.uniform(0.15 * size, 0.85 * size);
            e.rx = rng.uniform(cfg.min_radius, cfg.max_radius) * size;
            e.ry = rng.uniform(cfg.min_radius, cfg.max_radius) * size;
            e.angle = rng.uniform(0.0, std::numbers::pi);
            out.ellipses.push_back(e);
        }
        std::size_t positive = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double x = j + 0.5, y = i + 0.5;
                const bool inside =
                    std::any_of(out.ellipses.begin(), out.ellipses.end(), [&](const Ellipse& e) { return e.contains(x, y); });
                mask[i * n + j] = inside ? 1.0f : 0.0f;
                positive += inside;
            }
        }
        if (positive >= 1 && static_cast<double>(positive) <= max_positive) break;
    }

    Tensor image({3, n, n});
    const std::size_t plane = n * n;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            int hits = 0;
            for (int a = 0; a < kSuper; ++a) {
                for (int b = 0; b < kSuper; ++b) {
                    const double x = j + (b + 0.5) / kSuper, y = i + (a + 0.5) / kSuper;
                    for (const auto& e : out.ellipses) {
                        if (e.contains(x, y)) {
                            ++hits;
                            break;
                        }
                    }
                }
            }
            const double coverage = static_cast<double>(hits) / (kSuper * kSuper);
            const double texture = 0.04 * std::sin(tex_freq * (static_cast<double>(i) + j) + tex_phase);
            for (std::size_t c = 0; c < 3; ++c) {
                const double bg = base[c] + field[c * plane + i * n + j];
                const double fg = tint[c] + texture;
                image[c * plane + i * n + j] = static_cast<float>(std::clamp(bg + coverage * (fg - bg), 0.0, 1.0));
            }
        }
    }

    char id[32];
    std::snprintf(id, sizeof id, "synth_%05d", index);
    out.sample = Sample{id, std::move(image), std::move(mask)};
    return out;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Dataset d;
    d.provenance = Provenance::kSynthetic;
    d.size = cfg.size;
    d.samples.reserve(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) d.samples.push_back(generate_synthetic_sample(cfg, i).sample);
    return d;
}

}  // namespace rupnet::data
