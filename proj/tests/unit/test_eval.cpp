#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "rupnet/bench.hpp"
#include "rupnet/error.hpp"
#include "rupnet/metrics.hpp"
#include "rupnet/report.hpp"
#include "rupnet/synthetic.hpp"

using namespace rupnet;
using namespace rupnet::eval;

namespace {

// Pixel-loop oracle with the perfect-empty convention.
ImageMetrics brute_force(const Tensor& pred, const Tensor& gt, double thr) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] >= thr, g = gt[i] >= 0.5f;
        if (p && g) tp += 1;
        if (p && !g) fp += 1;
        if (!p && g) fn += 1;
        if (!p && !g) tn += 1;
    }
    const bool empty = tp + fp + fn == 0;
    auto ratio = [&](double num, double den) { return den == 0 ? (empty ? 1.0 : 0.0) : num / den; };
    ImageMetrics m;
    m.dsc = ratio(2 * tp, 2 * tp + fp + fn);
    m.iou = ratio(tp, tp + fp + fn);
    m.recall = ratio(tp, tp + fn);
    m.precision = ratio(tp, tp + fp);
    m.accuracy = (tp + tn) / (tp + fp + fn + tn);
    m.f2 = ratio(5 * m.precision * m.recall, 4 * m.precision + m.recall);
    return m;
}

void check_close(const ImageMetrics& a, const ImageMetrics& b, double tol) {
    CHECK(std::abs(a.dsc - b.dsc) < tol);
    CHECK(std::abs(a.iou - b.iou) < tol);
    CHECK(std::abs(a.recall - b.recall) < tol);
    CHECK(std::abs(a.precision - b.precision) < tol);
    CHECK(std::abs(a.accuracy - b.accuracy) < tol);
    CHECK(std::abs(a.f2 - b.f2) < tol);
}

data::Dataset synth(int n, int size) {
    data::SynthConfig s;
    s.count = n;
    s.size = size;
    s.seed = 2;
    return data::generate_synthetic(s);
}

}  // namespace

TEST_CASE("confusion counts") {
    const Tensor gt({1, 2, 2}, {1, 1, 0, 0});
    CHECK(confusion(Tensor({1, 2, 2}, 1.0f), gt) == ConfusionCounts{2, 2, 0, 0});
    const auto same = confusion(gt, gt);
    CHECK(same.fp == 0);
    CHECK(same.fn == 0);
    CHECK(confusion(Tensor({1, 1, 1}, 0.5f), Tensor({1, 1, 1}, 1.0f)).tp == 1);
    CHECK_THROWS_AS(confusion(Tensor({1, 2, 2}, 0.0f), Tensor({1, 2, 3}, 0.0f)), ShapeError);
}

TEST_CASE("metrics hand case and conventions") {
    const auto m = metrics_from_counts({2, 2, 0, 0});
    CHECK(m.dsc == doctest::Approx(4.0 / 6.0));
    CHECK(m.iou == doctest::Approx(0.5));
    CHECK(m.recall == doctest::Approx(1.0));
    CHECK(m.precision == doctest::Approx(0.5));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK(m.f2 == doctest::Approx(2.5 / 3.0));

    const auto e = metrics_from_counts({0, 0, 0, 16});
    check_close(e, ImageMetrics{1, 1, 1, 1, 1, 1}, 1e-15);
    const auto full = metrics_from_counts({9, 0, 0, 0});
    check_close(full, ImageMetrics{1, 1, 1, 1, 1, 1}, 1e-15);
    const auto miss = metrics_from_counts({0, 0, 3, 5});
    CHECK(miss.precision == 0.0);
    CHECK(miss.dsc == 0.0);
}

TEST_CASE("metrics equal the pixel-loop oracle on random masks") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor pred({1, 16, 16}), gt({1, 16, 16});
        const double density = rng.uniform();
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = static_cast<float>(rng.uniform());
            gt[i] = rng.uniform() < density ? 1.0f : 0.0f;
        }
        if (trial % 50 == 0) pred.fill(0.0f);
        const auto m = metrics_from_counts(confusion(pred, gt));
        check_close(m, brute_force(pred, gt, 0.5), 1e-6);
        CHECK(m.iou <= m.dsc + 1e-15);
    }
}

TEST_CASE("evaluate with an oracle predictor scores 1") {
    const auto ds = synth(5, 16);
    const Predictor oracle = [&](const Tensor& images) {
        // Recover masks by matching images back to the dataset.
        const std::size_t n = images.dim(0), plane = 16 * 16;
        Tensor out({n, 1, 16, 16});
        for (std::size_t b = 0; b < n; ++b) {
            for (const auto& s : ds.samples) {
                if (std::equal(s.image.data(), s.image.data() + 3 * plane, images.data() + b * 3 * plane)) {
                    std::copy_n(s.mask.data(), plane, out.data() + b * plane);
                }
            }
        }
        return out;
    };
    const auto r = evaluate(oracle, ds, 0.5, 2);
    CHECK(r.per_image.size() == 5);
    check_close(r.means, ImageMetrics{1, 1, 1, 1, 1, 1}, 1e-12);
}

TEST_CASE("evaluate aggregation and order independence") {
    const auto ds = synth(7, 16);
    NetworkConfig c;
    c.encoder_channels = {2, 4, 4};
    c.bridge_channels = 4;
    c.decoder_channels = {4, 2, 2};
    c.image_size = 16;
    Rng rng(3);
    const auto net = build_network(c, rng);
    const auto r = evaluate(net, ds, 0.5, 3);
    CHECK(r.config_fingerprint == c.fingerprint());
    CHECK(r.threshold == 0.5);
    ImageMetrics sum;
    for (const auto& row : r.per_image) {
        sum.dsc += row.metrics.dsc;
        sum.f2 += row.metrics.f2;
    }
    CHECK(std::abs(sum.dsc / 7 - r.means.dsc) < 1e-9);
    CHECK(std::abs(sum.f2 / 7 - r.means.f2) < 1e-9);

    data::Dataset rev = ds;
    std::reverse(rev.samples.begin(), rev.samples.end());
    const auto r2 = evaluate(net, rev, 0.5, 2);
    check_close(r2.means, r.means, 1e-12);
}

TEST_CASE("benchmark_fps") {
    NetworkConfig c;
    c.encoder_channels = {4, 8, 8};
    c.bridge_channels = 8;
    c.decoder_channels = {8, 8, 4};
    Rng rng(4);
    const auto net = build_network(c, rng);
    const auto small = benchmark_fps(net, 64, 1, 20);
    const auto large = benchmark_fps(net, 256, 1, 5);
    CHECK(std::isfinite(small.fps));
    CHECK(small.fps > 0);
    CHECK(small.fps > large.fps);
    CHECK(small.iters == 20);
    CHECK(small.image_size == 64);
    CHECK_THROWS_AS(benchmark_fps(net, 100, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(benchmark_fps(net, 64, 1, 0), InvalidArgument);
    CHECK_FALSE(hardware_string().empty());
}

TEST_CASE("speedup against a reference baseline") {
    const auto rows = compute_speedups(152.60, {{"baseline", 7.0193}});
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0].speedup - 21.74) < 0.01);
    CHECK_THROWS_AS(compute_speedups(10, {{"x", 0}}), InvalidArgument);
}

TEST_CASE("report json round trip and optional speedup") {
    MetricsReport r;
    r.config_fingerprint = "abc";
    r.checkpoint_hash = "0123456789abcdef";
    r.hardware = "cpu";
    r.threshold = 0.5;
    r.per_image = {{"a", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}}, {"b", {1.0 / 3, 2.0 / 3, 0.7, 0.8, 0.9, 0.123456789012345}}};
    r.means = mean_metrics(r.per_image);
    r.fps = FpsStats{152.6, 6.55, 0.1, 5, 100, 512};

    const auto j = report_to_json(r);
    CHECK_FALSE(j.contains("speedup"));
    CHECK(j.contains("metadata"));
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.per_image.size() == 2);
    CHECK(back.per_image[1].metrics == r.per_image[1].metrics);
    CHECK(back.means == r.means);
    CHECK(back.fps == r.fps);
    CHECK(back.hardware == r.hardware);

    r.speedup = compute_speedups(r.fps->fps, {{"baseline", 7.0193}});
    const auto back2 = report_from_json(nlohmann::json::parse(report_to_json(r).dump()));
    CHECK(back2.speedup == r.speedup);

    r.fps.reset();
    CHECK(report_from_json(report_to_json(r)).fps.has_value() == false);
}

TEST_CASE("report csv round trip and emit") {
    MetricsReport r;
    r.per_image = {{"x1", {0.25, 0.5, 1, 0, 0.75, 1.0 / 7}}};
    r.means = mean_metrics(r.per_image);
    const auto csv = report_to_csv(r);
    CHECK(csv.rfind(kPerImageCsvHeader, 0) == 0);
    const auto rows = rows_from_csv(csv);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].id == "x1");
    CHECK(rows[0].metrics == r.per_image[0].metrics);

    const auto dir = std::filesystem::temp_directory_path() / "rupnet_unit_report";
    std::filesystem::remove_all(dir);
    r.fps = FpsStats{100.0, 10, 0, 1, 1, 64};
    emit_report(r, {{"ref", 50.0}}, dir / "r.json");
    CHECK(std::filesystem::exists(dir / "r.csv"));
    std::ifstream in(dir / "r.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("speedup").at(0).at("speedup").get<double>() == doctest::Approx(2.0));
    std::filesystem::remove_all(dir);
}
