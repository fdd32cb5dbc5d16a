#include "rupnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rupnet/netpbm.hpp"
#include "rupnet/rng.hpp"

namespace rupnet::data {

namespace fs = std::filesystem;

namespace {

struct ResizeAxis {
    std::vector<std::size_t> i0, i1;
    std::vector<float> w1;
};

ResizeAxis bilinear_axis(std::size_t in, std::size_t out) {
    ResizeAxis a;
    a.i0.resize(out);
    a.i1.resize(out);
    a.w1.resize(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
        double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(s));
        a.i0[d] = i0;
        a.i1[d] = std::min(i0 + 1, in - 1);
        a.w1[d] = static_cast<float>(s - static_cast<double>(i0));
    }
    return a;
}

void require_chw(const Tensor& t, const char* what) {
    if (t.rank() != 3) throw ShapeError(std::string(what) + ": expected C x H x W, got " + shape_to_string(t.shape()));
}

std::map<std::string, fs::path> list_netpbm(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not-found: missing directory " + dir.string());
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".ppm" && ext != ".pgm") continue;
        const auto stem = entry.path().stem().string();
        if (!out.emplace(stem, entry.path()).second) {
            throw DataError("pairing: duplicate stem '" + stem + "' in " + dir.string());
        }
    }
    return out;
}

}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
    require_chw(image, "resize_bilinear");
    const std::size_t channels = image.dim(0), in_h = image.dim(1), in_w = image.dim(2);
    if (in_h == out_h && in_w == out_w) return image;
    const auto ay = bilinear_axis(in_h, out_h);
    const auto ax = bilinear_axis(in_w, out_w);
    Tensor out({channels, out_h, out_w});
    for (std::size_t c = 0; c < channels; ++c) {
        const float* src = image.data() + c * in_h * in_w;
        float* dst = out.data() + c * out_h * out_w;
        for (std::size_t i = 0; i < out_h; ++i) {
            const float wy1 = ay.w1[i], wy0 = 1.0f - wy1;
            const float* r0 = src + ay.i0[i] * in_w;
            const float* r1 = src + ay.i1[i] * in_w;
            for (std::size_t j = 0; j < out_w; ++j) {
                const float wx1 = ax.w1[j], wx0 = 1.0f - wx1;
                const std::size_t a = ax.i0[j], b = ax.i1[j];
                dst[i * out_w + j] = wy0 * (wx0 * r0[a] + wx1 * r0[b]) + wy1 * (wx0 * r1[a] + wx1 * r1[b]);
            }
        }
    }
    return out;
}

Tensor resize_nearest(const Tensor& image, std::size_t out_h, std::size_t out_w) {
    require_chw(image, "resize_nearest");
    const std::size_t channels = image.dim(0), in_h = image.dim(1), in_w = image.dim(2);
    if (in_h == out_h && in_w == out_w) return image;
    Tensor out({channels, out_h, out_w});
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < out_h; ++i) {
            const std::size_t si = std::min(in_h - 1, (2 * i + 1) * in_h / (2 * out_h));
            for (std::size_t j = 0; j < out_w; ++j) {
                const std::size_t sj = std::min(in_w - 1, (2 * j + 1) * in_w / (2 * out_w));
                out[(c * out_h + i) * out_w + j] = image[(c * in_h + si) * in_w + sj];
            }
        }
    }
    return out;
}

Tensor binarize_mask(const Tensor& mask) {
    require_chw(mask, "binarize_mask");
    const std::size_t plane = mask.dim(1) * mask.dim(2);
    const float threshold = 128.0f / 255.0f;
    Tensor out({1, mask.dim(1), mask.dim(2)});
    for (std::size_t i = 0; i < plane; ++i) out[i] = mask[i] >= threshold ? 1.0f : 0.0f;
    return out;
}

Dataset load_dataset(const fs::path& root, int size) {
    if (size < 8 || size % 8 != 0) throw InvalidArgument("load_dataset: size must be a positive multiple of 8");
    const auto images = list_netpbm(root / "images");
    const auto masks = list_netpbm(root / "masks");
    for (const auto& [stem, path] : images) {
        if (!masks.count(stem)) throw DataError("pairing: image '" + stem + "' has no mask");
    }
    for (const auto& [stem, path] : masks) {
        if (!images.count(stem)) throw DataError("pairing: mask '" + stem + "' has no image");
    }
    if (images.empty()) throw DataError("empty-dataset: no images under " + root.string());

    const auto s = static_cast<std::size_t>(size);
    Dataset d;
    d.provenance = Provenance::kReal;
    d.size = size;
    for (const auto& [stem, image_path] : images) {
        Tensor image = read_image(image_path);
        if (image.dim(0) == 1) {
            std::vector<float> rgb;
            rgb.reserve(3 * image.size());
            for (int c = 0; c < 3; ++c) rgb.insert(rgb.end(), image.values().begin(), image.values().end());
            image = Tensor({3, image.dim(1), image.dim(2)}, std::move(rgb));
        }
        Tensor mask = read_image(masks.at(stem));
        d.samples.push_back({stem, resize_bilinear(image, s, s), binarize_mask(resize_nearest(mask, s, s))});
    }
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("split_dataset: fraction must be in (0, 1)");
    }
    const std::size_t n = d.count();
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) {
        throw InvalidArgument("split_dataset: fraction " + std::to_string(train_fraction) + " of " +
                              std::to_string(n) + " samples leaves one side empty");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).derive("split");
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    Dataset train{{}, d.provenance, d.size};
    Dataset test{{}, d.provenance, d.size};
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? train : test).samples.push_back(d.samples[order[i]]);
    return {std::move(train), std::move(test)};
}

void save_dataset(const Dataset& d, const fs::path& root) {
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    for (const auto& s : d.samples) {
        write_image(s.image, root / "images" / (s.id + ".ppm"));
        write_image(s.mask, root / "masks" / (s.id + ".pgm"));
    }
}

std::pair<Tensor, Tensor> make_batch(const std::vector<const Sample*>& samples) {
    std::vector<const Tensor*> images, masks;
    images.reserve(samples.size());
    masks.reserve(samples.size());
    for (const auto* s : samples) {
        images.push_back(&s->image);
        masks.push_back(&s->mask);
    }
    return {stack<float>(images), stack<float>(masks)};
}

}  // namespace rupnet::data
