#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rupnet/tensor.hpp"

namespace rupnet::data {

/// Decode binary netpbm (P5 grayscale / P6 RGB, maxval 255) into a C x H x W tensor with
/// values byte / 255. Throws DecodeError carrying the failing byte offset.
Tensor decode_netpbm(const std::vector<std::uint8_t>& bytes);

/// Encode a 1- or 3-channel C x H x W tensor; values are clamped to [0, 1] and rounded to bytes.
std::vector<std::uint8_t> encode_netpbm(const Tensor& image);

Tensor read_image(const std::filesystem::path& path);
void write_image(const Tensor& image, const std::filesystem::path& path);

}  // namespace rupnet::data
