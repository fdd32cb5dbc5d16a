#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rupnet/tensor.hpp"

namespace rupnet::data {

/// image: 3 x H x W in [0, 1]; mask: 1 x H x W with values exactly 0 or 1.
struct Sample {
    std::string id;
    Tensor image;
    Tensor mask;
};

enum class Provenance { kReal, kSynthetic };

struct Dataset {
    std::vector<Sample> samples;
    Provenance provenance = Provenance::kReal;
    int size = 0;

    bool empty() const noexcept { return samples.empty(); }
    std::size_t count() const noexcept { return samples.size(); }
};

/// Half-pixel-center bilinear resize of a C x H x W tensor.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// Nearest-neighbour resize of a C x H x W tensor (source index floor((d + 0.5) * in / out)).
Tensor resize_nearest(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// Threshold a mask in [0, 1] at 128/255; multi-channel masks use their first channel.
Tensor binarize_mask(const Tensor& mask);

/// Load `<root>/images/<stem>.(ppm|pgm)` paired with `<root>/masks/<stem>.(ppm|pgm)`,
/// resized to size x size and ordered by stem. Grayscale images are replicated to 3 channels.
/// Throws DataError for missing directories, unpaired stems, or an empty dataset.
Dataset load_dataset(const std::filesystem::path& root, int size);

/// Seeded shuffle, then the first round(fraction * n) samples form the training side.
/// Throws InvalidArgument if either side would be empty.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed);

/// Write a dataset in the layout load_dataset reads (images as P6, masks as P5).
void save_dataset(const Dataset& d, const std::filesystem::path& root);

/// Stack samples into N x 3 x S x S image and N x 1 x S x S mask batches.
std::pair<Tensor, Tensor> make_batch(const std::vector<const Sample*>& samples);

}  // namespace rupnet::data
