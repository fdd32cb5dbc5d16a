#include "rupnet/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>

#include "rupnet/bench.hpp"
#include "rupnet/checkpoint.hpp"
#include "rupnet/dataset.hpp"
#include "rupnet/error.hpp"
#include "rupnet/netpbm.hpp"
#include "rupnet/report.hpp"
#include "rupnet/run_config.hpp"
#include "rupnet/synthetic.hpp"
#include "rupnet/trainer.hpp"

namespace rupnet::cli {

namespace fs = std::filesystem;

namespace {

int guarded(Console io, const std::function<int()>& body) {
    try {
        return body();
    } catch (const NumericError& e) {
        io.err << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const ConfigError& e) {
        io.err << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument& e) {
        io.err << "invalid argument: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        io.err << "error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        io.err << "io error: " << e.what() << "\n";
        return kData;
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void print_means(std::ostream& out, const eval::ImageMetrics& m) {
    out << "mDSC " << fmt("%.4f", m.dsc) << "  mIoU " << fmt("%.4f", m.iou) << "  recall " << fmt("%.4f", m.recall)
        << "  precision " << fmt("%.4f", m.precision) << "  accuracy " << fmt("%.4f", m.accuracy) << "  F2 "
        << fmt("%.4f", m.f2) << "\n";
}

Tensor to_three_channels(const Tensor& image) {
    if (image.dim(0) == 3) return image;
    Tensor out({3, image.dim(1), image.dim(2)});
    const std::size_t plane = image.dim(1) * image.dim(2);
    for (std::size_t c = 0; c < 3; ++c) std::copy_n(image.data(), plane, out.data() + c * plane);
    return out;
}

}  // namespace

eval::BaselineRow parse_baseline(const std::string& text) {
    const auto eq = text.rfind('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw InvalidArgument("baseline must look like name=fps: " + text);
    }
    eval::BaselineRow row{text.substr(0, eq), 0.0};
    try {
        std::size_t used = 0;
        row.fps = std::stod(text.substr(eq + 1), &used);
        if (used != text.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw InvalidArgument("baseline fps is not a number: " + text);
    }
    if (!(row.fps > 0.0)) throw InvalidArgument("baseline fps must be > 0: " + text);
    return row;
}

int cmd_train(const fs::path& config, const std::vector<std::string>& overrides, Console io) {
    return guarded(io, [&] {
        const RunConfig cfg = load_run_config(config, overrides);
        const Rng root(cfg.seed);

        data::Dataset all;
        if (cfg.data_root.empty()) {
            data::SynthConfig synth;
            synth.count = cfg.synth_count;
            synth.size = cfg.net.image_size;
            synth.seed = cfg.seed;
            all = data::generate_synthetic(synth);
        } else {
            all = data::load_dataset(cfg.data_root, cfg.net.image_size);
        }
        auto [train_set, test_set] = data::split_dataset(all, cfg.train_fraction, cfg.seed);
        io.out << "data: " << all.count() << " samples (" << train_set.count() << " train / " << test_set.count()
               << " held out)\n";

        const fs::path run_dir = cfg.run_dir;
        fs::create_directories(run_dir);
        {
            std::ofstream f(run_dir / "config.json", std::ios::trunc);
            if (!f) throw IoError("cannot write " + (run_dir / "config.json").string());
            f << cfg.to_json().dump(2) << "\n";
        }

        Rng init = root.derive("init");
        Network<float> net = build_network(cfg.net, init);
        io.out << "parameters: " << net.params().trainable_count() << "\n";

        train::RunOptions options;
        options.run_dir = run_dir;
        options.checkpoint_every = cfg.checkpoint_every;
        options.on_epoch = [&](const train::EpochStats& s) {
            io.out << "epoch " << s.epoch << "  loss " << fmt("%.5f", s.mean_loss) << "  " << fmt("%.1f", s.seconds)
                   << "s\n";
        };
        train::run_training(net, train_set, cfg.train, options);

        eval::MetricsReport report = eval::evaluate(net, test_set, cfg.eval_threshold, cfg.eval_batch_size);
        report.checkpoint_hash = file_hash(run_dir / "checkpoints" / "final.rupn");
        report.hardware = eval::hardware_string();
        eval::emit_report(report, {}, run_dir / "report.json");
        io.out << "held-out ";
        print_means(io.out, report.means);
        return kOk;
    });
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data, const fs::path& out, double threshold, Console io) {
    return guarded(io, [&] {
        if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must be in (0, 1]");
        const Network<float> net = load_checkpoint(checkpoint);
        const data::Dataset ds = data::load_dataset(data, net.config().image_size);
        eval::MetricsReport report = eval::evaluate(net, ds, threshold);
        report.checkpoint_hash = file_hash(checkpoint);
        report.hardware = eval::hardware_string();
        eval::emit_report(report, {}, out);
        io.out << ds.count() << " images  ";
        print_means(io.out, report.means);
        return kOk;
    });
}

int cmd_predict(const fs::path& checkpoint, const fs::path& input, const fs::path& out_dir, double threshold,
                Console io) {
    return guarded(io, [&] {
        if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must be in (0, 1]");
        const Network<float> net = load_checkpoint(checkpoint);
        const auto size = static_cast<std::size_t>(net.config().image_size);

        std::vector<fs::path> files;
        if (fs::is_directory(input)) {
            for (const auto& e : fs::directory_iterator(input)) {
                const auto ext = e.path().extension();
                if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
        } else if (fs::exists(input)) {
            files.push_back(input);
        } else {
            throw DataError("not-found: " + input.string());
        }
        if (files.empty()) throw DataError("empty-dataset: no .ppm/.pgm files in " + input.string());

        fs::create_directories(out_dir);
        std::size_t ok = 0;
        for (const auto& file : files) {
            try {
                const Tensor image = to_three_channels(data::read_image(file));
                const std::size_t h = image.dim(1), w = image.dim(2);
                const Tensor resized = (h == size && w == size) ? image : data::resize_bilinear(image, size, size);
                Tensor prob = net.infer(resized.reshaped({1, 3, size, size})).reshaped({1, size, size});
                if (h != size || w != size) prob = data::resize_bilinear(prob, h, w);
                Tensor mask(prob.shape());
                for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = prob[i] >= threshold ? 1.0f : 0.0f;
                const std::string stem = file.stem().string();
                data::write_image(prob, out_dir / (stem + "_prob.pgm"));
                data::write_image(mask, out_dir / (stem + "_mask.pgm"));
                ++ok;
            } catch (const Error& e) {
                io.err << file.string() << ": " << e.what() << "\n";
            }
        }
        io.out << "predicted " << ok << " of " << files.size() << " images into " << out_dir.string() << "\n";
        return ok == 0 ? kData : kOk;
    });
}

int cmd_bench(const BenchArgs& args, Console io) {
    return guarded(io, [&] {
        eval::MetricsReport report;
        std::optional<Network<float>> net;
        if (args.checkpoint) {
            net.emplace(load_checkpoint(*args.checkpoint));
            report.checkpoint_hash = file_hash(*args.checkpoint);
        } else {
            const RunConfig cfg = load_run_config(args.config.value_or(fs::path{}), {});
            Rng init = Rng(args.seed).derive("init");
            net.emplace(build_network(cfg.net, init));
        }
        report.config_fingerprint = net->config().fingerprint();
        report.hardware = eval::hardware_string();
        report.fps = eval::benchmark_fps(*net, args.size, args.warmup, args.iters, args.seed);
        if (!args.baselines.empty()) report.speedup = eval::compute_speedups(report.fps->fps, args.baselines);

        io.out << "size " << args.size << "  fps " << fmt("%.2f", report.fps->fps) << "  per-frame "
               << fmt("%.3f", report.fps->per_frame_ms_mean) << " +- " << fmt("%.3f", report.fps->per_frame_ms_std)
               << " ms  (" << report.hardware << ")\n";
        for (const auto& s : report.speedup) {
            io.out << "speedup vs " << s.name << " (" << fmt("%.2f", s.baseline_fps)
                   << " fps): " << fmt("%.2f", s.speedup) << "x\n";
        }
        if (!args.out.empty()) eval::emit_report(report, {}, args.out, eval::ReportFormat::kJson);
        return kOk;
    });
}

int cmd_gradcheck(const gradcheck::Options& options, Console io) {
    return guarded(io, [&] {
        const auto results = gradcheck::run_gradcheck(options);
        std::vector<std::string> failed;
        for (const auto& r : results) {
            char line[160];
            std::snprintf(line, sizeof line, "%-18s max_rel_error %.3e  checked %6zu  %s\n", r.layer.c_str(),
                          r.max_rel_error, r.checked, r.passed ? "ok" : "FAIL");
            io.out << line;
            if (!r.passed) failed.push_back(r.layer);
        }
        if (failed.empty()) return kOk;
        io.err << "gradcheck failed (tolerance " << options.tolerance << "):";
        for (const auto& f : failed) io.err << " " << f;
        io.err << "\n";
        return kNumeric;
    });
}

int cmd_synth(int count, int size, std::uint64_t seed, const fs::path& out, Console io) {
    return guarded(io, [&] {
        data::SynthConfig cfg;
        cfg.count = count;
        cfg.size = size;
        cfg.seed = seed;
        cfg.validate();
        data::save_dataset(data::generate_synthetic(cfg), out);
        io.out << "wrote " << count << " samples of " << size << "x" << size << " to " << out.string() << "\n";
        return kOk;
    });
}

}  // namespace rupnet::cli
