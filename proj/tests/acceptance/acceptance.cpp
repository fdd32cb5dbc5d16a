// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>

#include "rupnet/bench.hpp"
#include "rupnet/checkpoint.hpp"
#include "rupnet/dataset.hpp"
#include "rupnet/gradcheck.hpp"
#include "rupnet/metrics.hpp"
#include "rupnet/netpbm.hpp"
#include "rupnet/report.hpp"
#include "rupnet/synthetic.hpp"
#include "rupnet/trainer.hpp"

using namespace rupnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

data::Dataset synthetic(int count, int size, std::uint64_t seed) {
    data::SynthConfig cfg;
    cfg.count = count;
    cfg.size = size;
    cfg.seed = seed;
    return data::generate_synthetic(cfg);
}

double batch_dsc(const Tensor& pred, const Tensor& masks) {
    const std::size_t n = pred.dim(0), plane = pred.plane();
    double sum = 0;
    for (std::size_t b = 0; b < n; ++b) {
        const Tensor p({1, pred.height(), pred.width()},
                       std::vector<float>(pred.data() + b * plane, pred.data() + (b + 1) * plane));
        const Tensor g({1, pred.height(), pred.width()},
                       std::vector<float>(masks.data() + b * plane, masks.data() + (b + 1) * plane));
        sum += eval::metrics_from_counts(eval::confusion(p, g)).dsc;
    }
    return sum / static_cast<double>(n);
}

Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    const auto results = gradcheck::run_gradcheck();
    const double secs = seconds_since(t0);
    double worst = 0;
    std::string worst_layer, failed;
    for (const auto& r : results) {
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_layer = r.layer;
        }
        if (!r.passed) failed += " " + r.layer;
    }
    const bool ok = failed.empty() && secs < 300;
    return {ok, format("%zu layer kinds, worst %.2e (%s), %.1fs%s%s", results.size(), worst, worst_layer.c_str(), secs,
                       failed.empty() ? "" : ", failing:", failed.c_str())};
}

Outcome overfit_capacity() {
    const auto t0 = Clock::now();
    NetworkConfig net_cfg;
    net_cfg.image_size = 64;
    Rng init = Rng(1).derive("init");
    auto net = build_network(net_cfg, init);
    const auto data = synthetic(4, 64, 21);
    std::vector<const data::Sample*> ptrs;
    for (const auto& s : data.samples) ptrs.push_back(&s);
    const auto [images, masks] = data::make_batch(ptrs);

    train::TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.augmentation.enabled = false;
    train::AdamState adam;
    double loss = 0, dsc = 0;
    int step = 0;
    for (step = 1; step <= 500; ++step) {
        const auto r = train::train_step(net, images, masks, cfg, adam);
        loss = r.loss;
        dsc = batch_dsc(r.prediction, masks);
        if (loss < 0.1 && dsc > 0.95) break;
    }
    const double infer_dsc = batch_dsc(net.infer(images), masks);
    const double secs = seconds_since(t0);
    const bool ok = loss < 0.1 && dsc > 0.95 && secs < 600;
    return {ok, format("%d steps, loss %.4f, batch DSC %.4f (infer-mode %.4f), %.1fs", std::min(step, 500), loss, dsc,
                       infer_dsc, secs)};
}

Outcome desk_generalization() {
    const auto t0 = Clock::now();
    NetworkConfig net_cfg;
    net_cfg.encoder_channels = {8, 16, 32};
    net_cfg.bridge_channels = 64;
    net_cfg.decoder_channels = {32, 16, 8};
    net_cfg.image_size = 64;
    const std::uint64_t seed = 0;
    const auto all = synthetic(250, 64, seed);
    const auto [train_set, test_set] = data::split_dataset(all, 0.8, seed);
    Rng init = Rng(seed).derive("init");
    auto net = build_network(net_cfg, init);
    train::TrainConfig cfg;
    cfg.epochs = 30;
    cfg.seed = seed;
    train::run_training(net, train_set, cfg);
    const auto report = eval::evaluate(net, test_set);
    const double secs = seconds_since(t0);
    const bool ok = report.means.dsc >= 0.85 && secs < 1800 && train_set.count() == 200 && test_set.count() == 50;
    return {ok, format("%zu train / %zu held out, 30 epochs, mDSC %.4f mIoU %.4f, %.1fs", train_set.count(),
                       test_set.count(), report.means.dsc, report.means.iou, secs)};
}

// Counting oracle written against raw pixels, independent of the metrics module.
Outcome metric_oracle() {
    Rng rng(2024);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Tensor pred({1, 16, 16}), gt({1, 16, 16});
        const double density = rng.uniform();
        for (std::size_t i = 0; i < 256; ++i) {
            pred[i] = static_cast<float>(rng.uniform());
            gt[i] = rng.uniform() < density ? 1.0f : 0.0f;
        }
        if (trial % 97 == 0) pred.fill(0.0f);
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < 256; ++i) {
            const bool p = pred[i] >= 0.5f, g = gt[i] == 1.0f;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
            tn += !p && !g;
        }
        const bool empty = tp + fp + fn == 0;
        auto ratio = [&](double a, double b) { return b == 0 ? (empty ? 1.0 : 0.0) : a / b; };
        const double rec = ratio(tp, tp + fn), prec = ratio(tp, tp + fp);
        const double expect[6] = {ratio(2 * tp, 2 * tp + fp + fn), ratio(tp, tp + fp + fn), rec, prec,
                                  (tp + tn) / 256.0, ratio(5 * prec * rec, 4 * prec + rec)};
        const auto m = eval::metrics_from_counts(eval::confusion(pred, gt));
        const double got[6] = {m.dsc, m.iou, m.recall, m.precision, m.accuracy, m.f2};
        for (int k = 0; k < 6; ++k) worst = std::max(worst, std::abs(expect[k] - got[k]));
    }
    const auto h = eval::metrics_from_counts({2, 2, 0, 0});
    const bool hand = std::abs(h.dsc - 0.6667) < 5e-5 && std::abs(h.iou - 0.5) < 1e-12 &&
                      std::abs(h.recall - 1.0) < 1e-12 && std::abs(h.precision - 0.5) < 1e-12 &&
                      std::abs(h.accuracy - 0.5) < 1e-12 && std::abs(h.f2 - 0.8333) < 5e-5;
    return {worst < 1e-6 && hand,
            format("1000 random 16x16 pairs, max deviation %.1e; hand case dsc %.4f iou %.4f recall %.4f precision "
                   "%.4f accuracy %.4f f2 %.4f",
                   worst, h.dsc, h.iou, h.recall, h.precision, h.accuracy, h.f2)};
}

Outcome shape_contract() {
    Rng init = Rng(0).derive("init");
    const auto net = build_network(NetworkConfig{}, init);
    Rng rng(5);
    const Tensor x = rng_uniform<float>(rng, {1, 3, 512, 512}, 0, 1);
    StageShapes shapes;
    const Tensor y = net.infer(x, &shapes);
    bool in_range = true;
    for (float v : y.values()) in_range = in_range && v > 0.0f && v < 1.0f;
    const bool ok = y.shape() == Shape{1, 1, 512, 512} && in_range && shapes.bridge[2] == 64 && shapes.bridge[3] == 64;
    return {ok, format("output %s, all in (0,1): %s, bridge %s", shape_to_string(y.shape()).c_str(),
                       in_range ? "yes" : "no", shape_to_string(shapes.bridge).c_str())};
}

Outcome determinism_persistence() {
    NetworkConfig net_cfg;
    net_cfg.encoder_channels = {4, 8, 8};
    net_cfg.bridge_channels = 16;
    net_cfg.decoder_channels = {8, 8, 4};
    net_cfg.image_size = 32;
    const auto data = synthetic(12, 32, 3);
    train::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.seed = 17;
    auto run = [&] {
        Rng init = Rng(cfg.seed).derive("init");
        auto net = build_network(net_cfg, init);
        train::run_training(net, data, cfg);
        return net;
    };
    const auto a = run();
    const auto b = run();
    const bool same_ckpt = serialize_checkpoint(a) == serialize_checkpoint(b);

    const auto path = fs::temp_directory_path() / "rupnet_acceptance_ckpt.rupn";
    save_checkpoint(a, path);
    const auto loaded = load_checkpoint(path);
    fs::remove(path);
    Rng rng(8);
    const Tensor x = rng_uniform<float>(rng, {2, 3, 32, 32}, 0, 1);
    const bool same_out = loaded.infer(x) == a.infer(x);
    return {same_ckpt && same_out, format("final checkpoints byte-identical: %s; reload forward bitwise-identical: %s",
                                          same_ckpt ? "yes" : "no", same_out ? "yes" : "no")};
}

Outcome throughput() {
    Rng init = Rng(0).derive("init");
    const auto net = build_network(NetworkConfig{}, init);
    const auto small = eval::benchmark_fps(net, 64, 2, 20);
    const auto large = eval::benchmark_fps(net, 256, 1, 5);

    // Reference throughput figures: this model vs the slowest baseline.
    eval::MetricsReport report;
    report.fps = eval::FpsStats{152.60, 1000.0 / 152.60, 0, 0, 1, 512};
    const auto path = fs::temp_directory_path() / "rupnet_acceptance_speedup.json";
    eval::emit_report(report, {{"reference-baseline", 7.0193}}, path, eval::ReportFormat::kJson);
    std::ifstream in(path);
    const double speedup = nlohmann::json::parse(in).at("speedup").at(0).at("speedup").get<double>();
    fs::remove(path);

    const bool ok = std::isfinite(small.fps) && small.fps > 0 && small.fps > large.fps &&
                    std::abs(speedup - 21.74) <= 0.01;
    return {ok, format("fps@64 %.1f > fps@256 %.1f; speedup(152.60 vs 7.0193) %.4f (%s)", small.fps, large.fps,
                       speedup, eval::hardware_string().c_str())};
}

std::size_t block_oracle(std::size_t in, std::size_t out) {
    return 9 * in * out + 9 * out * out + 4 * out + (in != out ? in * out + 2 * out : 0);
}

Outcome parameter_accounting() {
    const NetworkConfig c;
    const std::size_t expected = block_oracle(3, 16) + block_oracle(16, 32) + block_oracle(32, 64) +
                                 block_oracle(64, 128) + block_oracle(128, 64) + block_oracle(64, 32) +
                                 block_oracle(32, 16) + (16 + 16 + 32 + 64) + 1;
    ParamStore<float> store;
    ResidualBlock<float>::create(store, "unit", 1, 1);
    const bool ok = param_count(c) == expected && store.trainable_count() == 22;
    return {ok, format("param_count(default) %zu, oracle %zu; 1->1 block %zu", param_count(c), expected,
                       store.trainable_count())};
}

Outcome data_pipeline() {
    data::Dataset d;
    for (int i = 0; i < 1000; ++i) {
        d.samples.push_back({"k" + std::to_string(i), Tensor({3, 1, 1}, 0.0f), Tensor({1, 1, 1}, 0.0f)});
    }
    const auto [train_set, test_set] = data::split_dataset(d, 0.88, 0);
    std::set<std::string> ids;
    for (const auto& s : train_set.samples) ids.insert(s.id);
    bool disjoint = true;
    for (const auto& s : test_set.samples) disjoint = ids.insert(s.id).second && disjoint;
    const bool split_ok = train_set.count() == 880 && test_set.count() == 120 && disjoint && ids.size() == 1000;

    Rng rng(6);
    Tensor img({3, 9, 7});
    for (auto& v : img.values()) v = static_cast<float>(rng.below(256)) / 255.0f;
    const bool pbm_ok = data::decode_netpbm(data::encode_netpbm(img)) == img;

    data::SynthConfig sc;
    sc.size = 64;
    sc.seed = 11;
    std::size_t mismatches = 0;
    for (int idx = 0; idx < 50; ++idx) {
        const auto s = data::generate_synthetic_sample(sc, idx);
        for (std::size_t i = 0; i < 64; ++i)
            for (std::size_t j = 0; j < 64; ++j) {
                bool inside = false;
                for (const auto& e : s.ellipses) {
                    const double dx = j + 0.5 - e.cx, dy = i + 0.5 - e.cy;
                    const double u = dx * std::cos(e.angle) + dy * std::sin(e.angle);
                    const double v = dy * std::cos(e.angle) - dx * std::sin(e.angle);
                    inside = inside || u * u / (e.rx * e.rx) + v * v / (e.ry * e.ry) <= 1.0;
                }
                mismatches += (s.sample.mask[i * 64 + j] == 1.0f) != inside;
            }
    }
    return {split_ok && pbm_ok && mismatches == 0,
            format("split %zu/%zu disjoint+covering: %s; netpbm round trip exact: %s; synthetic mask mismatches: %zu",
                   train_set.count(), test_set.count(), split_ok ? "yes" : "no", pbm_ok ? "yes" : "no", mismatches)};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"gradient correctness", gradient_correctness},
        {"overfit capacity", overfit_capacity},
        {"desk-scale generalization", desk_generalization},
        {"metric oracle equivalence", metric_oracle},
        {"shape contract", shape_contract},
        {"determinism and persistence", determinism_persistence},
        {"throughput harness", throughput},
        {"parameter accounting", parameter_accounting},
        {"data pipeline", data_pipeline},
    };
    int failures = 0, index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
