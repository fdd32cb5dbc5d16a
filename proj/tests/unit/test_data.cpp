#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"

#include "rupnet/dataset.hpp"
#include "rupnet/error.hpp"
#include "rupnet/netpbm.hpp"
#include "rupnet/rng.hpp"
#include "rupnet/synthetic.hpp"

using namespace rupnet;
using namespace rupnet::data;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::vector<std::uint8_t> payload) {
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Dataset dummy(std::size_t n) {
    Dataset d;
    d.size = 8;
    for (std::size_t i = 0; i < n; ++i) {
        d.samples.push_back({"s" + std::to_string(i), Tensor({3, 1, 1}, 0.0f), Tensor({1, 1, 1}, 0.0f)});
    }
    return d;
}

// Rotated-ellipse membership written out independently of Ellipse::contains.
bool inside(const Ellipse& e, double x, double y) {
    const double dx = x - e.cx, dy = y - e.cy;
    const double u = dx * std::cos(e.angle) + dy * std::sin(e.angle);
    const double v = -dx * std::sin(e.angle) + dy * std::cos(e.angle);
    return (u * u) / (e.rx * e.rx) + (v * v) / (e.ry * e.ry) <= 1.0;
}

}  // namespace

TEST_CASE("netpbm decode examples") {
    const Tensor rgb = decode_netpbm(bytes_of("P6\n2 1\n255\n", {255, 0, 0, 0, 0, 255}));
    CHECK(rgb.shape() == Shape{3, 1, 2});
    CHECK(rgb == Tensor({3, 1, 2}, {1, 0, 0, 0, 0, 1}));

    const Tensor gray = decode_netpbm(bytes_of("P5 # comment\n2 2 255\n", {0, 0, 0, 0}));
    CHECK(gray == Tensor({1, 2, 2}, 0.0f));

    CHECK_THROWS_AS(decode_netpbm(bytes_of("P5\n4 4\n255\n", {1, 2, 3})), DecodeError);
    CHECK_THROWS_AS(decode_netpbm(bytes_of("P3\n1 1\n255\n", {0})), DecodeError);
    CHECK_THROWS_AS(decode_netpbm(bytes_of("P5\n1 1\n65535\n", {0, 0})), DecodeError);
    try {
        decode_netpbm(bytes_of("P5\n4 4\n255\n", {1, 2, 3}));
    } catch (const DecodeError& e) {
        CHECK(e.offset() > 0);
    }
}

TEST_CASE("netpbm encode and round trip") {
    Tensor img({3, 4, 5});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>((i * 37) % 256) / 255.0f;
    CHECK(decode_netpbm(encode_netpbm(img)) == img);

    const Tensor mask({1, 2, 2}, {0, 1, 1, 0});
    const auto enc = encode_netpbm(mask);
    const std::vector<std::uint8_t> payload(enc.end() - 4, enc.end());
    CHECK(payload == std::vector<std::uint8_t>{0, 255, 255, 0});

    CHECK_THROWS_AS(encode_netpbm(Tensor({2, 2, 2}, 0.0f)), InvalidArgument);

    const auto dir = fresh_dir("rupnet_unit_pbm");
    write_image(img, dir / "a.ppm");
    CHECK(read_image(dir / "a.ppm") == img);
    CHECK_THROWS_AS(read_image(dir / "missing.ppm"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("resize helpers") {
    const Tensor m({1, 2, 2}, {0, 1, 1, 0});
    const Tensor up = resize_nearest(m, 4, 4);
    CHECK(up[0] == 0.0f);
    CHECK(up[3] == 1.0f);
    CHECK(up[15] == 0.0f);
    const Tensor c = resize_bilinear(Tensor({3, 5, 7}, 0.25f), 8, 8);
    CHECK(c.shape() == Shape{3, 8, 8});
    for (float v : c.values()) CHECK(v == doctest::Approx(0.25f));
    CHECK(resize_bilinear(m, 2, 2) == m);
}

TEST_CASE("load_dataset pairs, sorts and binarizes") {
    const auto root = fresh_dir("rupnet_unit_ds");
    for (const char* stem : {"c", "a", "b"}) {
        write_image(Tensor({3, 8, 8}, 0.5f), root / "images" / (std::string(stem) + ".ppm"));
        write_bytes(root / "masks" / (std::string(stem) + ".pgm"), bytes_of("P5\n8 8\n255\n", std::vector<std::uint8_t>(64, 0)));
    }
    // boundary: 127 -> 0, 128 -> 1
    std::vector<std::uint8_t> px(64, 127);
    px[5] = 128;
    write_bytes(root / "masks" / "a.pgm", bytes_of("P5\n8 8\n255\n", px));

    const Dataset d = load_dataset(root, 8);
    REQUIRE(d.count() == 3);
    CHECK(d.samples[0].id == "a");
    CHECK(d.samples[2].id == "c");
    CHECK(d.samples[0].mask[5] == 1.0f);
    CHECK(d.samples[0].mask[4] == 0.0f);
    CHECK(d.provenance == Provenance::kReal);

    const Dataset r = load_dataset(root, 16);
    CHECK(r.samples[0].image.shape() == Shape{3, 16, 16});
    for (float v : r.samples[0].mask.values()) CHECK((v == 0.0f || v == 1.0f));

    write_image(Tensor({3, 8, 8}, 0.5f), root / "images" / "orphan.ppm");
    try {
        load_dataset(root, 8);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("pairing") != std::string::npos);
    }
    CHECK_THROWS_AS(load_dataset(root / "nope", 8), DataError);
    fs::remove_all(root);
}

TEST_CASE("split_dataset") {
    const Dataset d = dummy(1000);
    const auto [train, test] = split_dataset(d, 0.88, 42);
    CHECK(train.count() == 880);
    CHECK(test.count() == 120);
    std::set<std::string> ids;
    for (const auto& s : train.samples) ids.insert(s.id);
    for (const auto& s : test.samples) CHECK(ids.insert(s.id).second);
    CHECK(ids.size() == 1000);

    const auto [train2, test2] = split_dataset(d, 0.88, 42);
    for (std::size_t i = 0; i < test.count(); ++i) CHECK(test.samples[i].id == test2.samples[i].id);

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const double f = rng.uniform(0.2, 0.8);
        const auto [a, b] = split_dataset(dummy(n), f, rng.next_u64());
        CHECK(a.count() + b.count() == n);
        std::set<std::string> seen;
        for (const auto& s : a.samples) seen.insert(s.id);
        for (const auto& s : b.samples) CHECK(seen.insert(s.id).second);
    }
    CHECK_THROWS(split_dataset(dummy(1), 0.5, 1));
}

TEST_CASE("synthetic data") {
    SynthConfig cfg;
    cfg.count = 12;
    cfg.size = 32;
    cfg.seed = 9;
    const Dataset a = generate_synthetic(cfg);
    const Dataset b = generate_synthetic(cfg);
    REQUIRE(a.count() == 12);
    CHECK(a.provenance == Provenance::kSynthetic);
    for (std::size_t i = 0; i < a.count(); ++i) {
        CHECK(a.samples[i].image == b.samples[i].image);
        CHECK(a.samples[i].mask == b.samples[i].mask);
        std::size_t positives = 0;
        for (float v : a.samples[i].mask.values()) {
            CHECK((v == 0.0f || v == 1.0f));
            positives += v == 1.0f;
        }
        CHECK(positives >= 1);
        CHECK(positives <= 32 * 32 / 2);
        for (float v : a.samples[i].image.values()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
    cfg.seed = 10;
    CHECK(generate_synthetic(cfg).samples[0].image != a.samples[0].image);
}

TEST_CASE("synthetic masks match the point-in-ellipse oracle") {
    SynthConfig cfg;
    cfg.size = 48;
    cfg.seed = 4;
    for (int idx = 0; idx < 20; ++idx) {
        const auto s = generate_synthetic_sample(cfg, idx);
        REQUIRE(!s.ellipses.empty());
        for (std::size_t i = 0; i < 48; ++i)
            for (std::size_t j = 0; j < 48; ++j) {
                bool any = false;
                for (const auto& e : s.ellipses) any = any || inside(e, j + 0.5, i + 0.5);
                REQUIRE(s.sample.mask[i * 48 + j] == (any ? 1.0f : 0.0f));
            }
    }
}

TEST_CASE("save_dataset round trips through load_dataset") {
    SynthConfig cfg;
    cfg.count = 3;
    cfg.size = 16;
    const Dataset d = generate_synthetic(cfg);
    const auto root = fresh_dir("rupnet_unit_save");
    save_dataset(d, root);
    const Dataset back = load_dataset(root, 16);
    REQUIRE(back.count() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.samples[i].id == d.samples[i].id);
        CHECK(back.samples[i].mask == d.samples[i].mask);
        for (std::size_t k = 0; k < d.samples[i].image.size(); ++k)
            CHECK(std::abs(back.samples[i].image[k] - d.samples[i].image[k]) <= 0.5f / 255.0f + 1e-6f);
    }
    fs::remove_all(root);
}

TEST_CASE("make_batch stacks samples") {
    SynthConfig cfg;
    cfg.count = 2;
    cfg.size = 16;
    const Dataset d = generate_synthetic(cfg);
    const auto [x, y] = make_batch({&d.samples[0], &d.samples[1]});
    CHECK(x.shape() == Shape{2, 3, 16, 16});
    CHECK(y.shape() == Shape{2, 1, 16, 16});
}
