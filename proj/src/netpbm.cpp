#include "rupnet/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

namespace rupnet::data {

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderParser {
public:
    explicit HeaderParser(const std::vector<std::uint8_t>& b) : b_(b) {}

    void skip_space_and_comments() {
        while (pos_ < b_.size()) {
            if (is_space(b_[pos_])) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned read_uint(const char* field) {
        skip_space_and_comments();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) {
            throw DecodeError(std::string("decode: expected ") + field + " in netpbm header", pos_);
        }
        unsigned long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_] - '0');
            if (v > 1u << 20) throw DecodeError(std::string("decode: ") + field + " out of range", pos_);
            ++pos_;
        }
        return static_cast<unsigned>(v);
    }

    std::size_t pos_ = 0;

private:
    const std::vector<std::uint8_t>& b_;
};

}  // namespace

Tensor decode_netpbm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw DecodeError("decode: not a binary netpbm file (expected P5 or P6)", 0);
    }
    const std::size_t channels = bytes[1] == '6' ? 3 : 1;
    HeaderParser p(bytes);
    p.pos_ = 2;
    const unsigned width = p.read_uint("width");
    const unsigned height = p.read_uint("height");
    const std::size_t maxval_at = p.pos_;
    const unsigned maxval = p.read_uint("maxval");
    if (width == 0 || height == 0) throw DecodeError("decode: zero image dimension", maxval_at);
    if (maxval != 255) throw DecodeError("decode: maxval must be 255, got " + std::to_string(maxval), maxval_at);
    if (p.pos_ >= bytes.size() || !is_space(bytes[p.pos_])) {
        throw DecodeError("decode: missing whitespace after header", p.pos_);
    }
    const std::size_t data_at = p.pos_ + 1;
    const std::size_t plane = static_cast<std::size_t>(width) * height;
    const std::size_t need = plane * channels;
    if (bytes.size() - data_at < need) {
        throw DecodeError("decode: truncated payload, need " + std::to_string(need) + " bytes, have " +
                              std::to_string(bytes.size() - data_at),
                          bytes.size());
    }
    Tensor out({channels, height, width});
    const std::uint8_t* src = bytes.data() + data_at;
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            out[c * plane + i] = static_cast<float>(src[i * channels + c]) / 255.0f;
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_netpbm(const Tensor& image) {
    if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
        throw InvalidArgument("write_image: expected 1 or 3 channel C x H x W tensor, got " +
                              shape_to_string(image.shape()));
    }
    const std::size_t channels = image.dim(0), height = image.dim(1), width = image.dim(2);
    const std::string header = std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(width) + " " +
                               std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t plane = height * width;
    out.reserve(out.size() + plane * channels);
    for (std::size_t i = 0; i < plane; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const float v = std::clamp(image[c * plane + i], 0.0f, 1.0f);
            out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
        }
    }
    return out;
}

Tensor read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return decode_netpbm(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what(), e.offset());
    }
}

void write_image(const Tensor& image, const std::filesystem::path& path) {
    const auto bytes = encode_netpbm(image);
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open image for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing image: " + path.string());
}

}  // namespace rupnet::data
