#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "doctest.h"

#include "rupnet/commands.hpp"
#include "rupnet/dataset.hpp"
#include "rupnet/netpbm.hpp"
#include "rupnet/error.hpp"
#include "rupnet/report.hpp"
#include "rupnet/run_config.hpp"

using namespace rupnet;
namespace fs = std::filesystem;

namespace {

struct Captured {
    std::ostringstream out, err;
    cli::Console io() { return {out, err}; }
};

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path quick_config(const fs::path& dir, const fs::path& run_dir, const std::string& extra = "") {
    const auto path = dir / "quick.json";
    std::ofstream f(path);
    f << R"({"net.encoder_channels": [2, 4, 4], "net.bridge_channels": 8, "net.decoder_channels": [4, 4, 2],)"
      << R"( "net.image_size": 16, "data.synth_count": 10, "data.train_fraction": 0.8, "train.epochs": 2,)"
      << R"( "train.batch_size": 4, "run_dir": ")" << run_dir.string() << "\"" << extra << "}";
    return path;
}

// Payload bytes of a binary netpbm file (header has exactly four tokens, no comments).
std::vector<std::uint8_t> payload(const fs::path& p) {
    const auto raw = slurp(p);
    std::size_t pos = 0;
    for (int tokens = 0; tokens < 4; ++tokens) {
        while (std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
        while (!std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;
    }
    ++pos;
    return {raw.begin() + static_cast<long>(pos), raw.end()};
}

}  // namespace

TEST_CASE("run config defaults, precedence and validation") {
    const RunConfig d;
    CHECK(d.train.batch_size == 8);
    CHECK(d.train.learning_rate == 1e-4);
    CHECK(d.net.image_size == 512);
    CHECK(d.train_fraction == 0.88);

    const auto dir = fresh_dir("rupnet_unit_cfg");
    {
        std::ofstream f(dir / "c.json");
        f << R"({"train.lr": 0.01, "train.epochs": 3, "seed": 5})";
    }
    const auto cfg = load_run_config(dir / "c.json", {"train.epochs=7", "net.encoder_channels=[8,16,32]"});
    CHECK(cfg.train.learning_rate == 0.01);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.seed == 5);
    CHECK(cfg.train.seed == 5);
    CHECK(cfg.net.encoder_channels == std::array<int, 3>{8, 16, 32});

    RunConfig echo;
    echo.apply(cfg.to_json());
    CHECK(echo.to_json() == cfg.to_json());
    CHECK(cfg.to_json().size() == RunConfig::keys().size());

    CHECK_THROWS_AS(load_run_config({}, {"train.nonsense=1"}), ConfigError);
    CHECK_THROWS_AS(load_run_config({}, {"train.epochs=abc"}), ConfigError);
    CHECK_THROWS_AS(load_run_config({}, {"train.epochs"}), ConfigError);
    CHECK_THROWS_AS(load_run_config({}, {"net.image_size=100"}), ConfigError);
    CHECK(load_run_config({}, {"run_dir=some/where"}).run_dir == "some/where");
    CHECK_THROWS_AS(load_run_config(dir / "missing.json", {}), IoError);
    fs::remove_all(dir);
}

TEST_CASE("gradcheck command") {
    Captured c;
    CHECK(cli::cmd_gradcheck({}, c.io()) == cli::kOk);
    const std::string text = c.out.str();
    for (const auto& kind : gradcheck::layer_kinds()) {
        const auto first = text.find(kind + " ");
        CHECK(first != std::string::npos);
        CHECK(text.find("\n" + kind + " ", first + 1) == std::string::npos);
    }
    std::set<std::string> uniq(gradcheck::layer_kinds().begin(), gradcheck::layer_kinds().end());
    CHECK(uniq.size() == gradcheck::layer_kinds().size());
}

TEST_CASE("gradcheck flags a corrupted conv backward") {
    gradcheck::Options o;
    o.corrupt = [](const std::string& layer, std::vector<TensorD>& grads) {
        if (layer == "conv2d") grads[1][0] += 0.5;
    };
    Captured c;
    CHECK(cli::cmd_gradcheck(o, c.io()) == cli::kNumeric);
    CHECK(c.err.str().find("conv2d") != std::string::npos);
    CHECK(c.err.str().find("relu") == std::string::npos);
}

TEST_CASE("synth command") {
    const auto dir = fresh_dir("rupnet_unit_synth");
    Captured c;
    REQUIRE(cli::cmd_synth(10, 16, 3, dir / "a", c.io()) == cli::kOk);
    REQUIRE(cli::cmd_synth(10, 16, 3, dir / "b", c.io()) == cli::kOk);
    const auto ds = data::load_dataset(dir / "a", 16);
    CHECK(ds.count() == 10);
    for (const auto& e : fs::directory_iterator(dir / "a" / "masks")) {
        CHECK(slurp(e.path()) == slurp(dir / "b" / "masks" / e.path().filename()));
        for (auto b : payload(e.path())) CHECK((b == 0 || b == 255));
    }
    for (const auto& e : fs::directory_iterator(dir / "a" / "images"))
        CHECK(slurp(e.path()) == slurp(dir / "b" / "images" / e.path().filename()));
    CHECK(cli::cmd_synth(0, 16, 3, dir / "c", c.io()) == cli::kUsage);
    fs::remove_all(dir);
}

TEST_CASE("train, eval and predict commands") {
    const auto dir = fresh_dir("rupnet_unit_train");
    Captured c;
    const auto cfg = quick_config(dir, dir / "run1");
    REQUIRE(cli::cmd_train(cfg, {}, c.io()) == cli::kOk);
    for (const char* f : {"config.json", "log.csv", "report.json", "report.csv", "checkpoints/final.rupn"})
        CHECK(fs::exists(dir / "run1" / f));

    // Determinism: identical config and seed give identical bytes.
    REQUIRE(cli::cmd_train(cfg, {"run_dir=" + (dir / "run2").string()}, c.io()) == cli::kOk);
    CHECK(slurp(dir / "run1/checkpoints/final.rupn") == slurp(dir / "run2/checkpoints/final.rupn"));
    REQUIRE(cli::cmd_train(cfg, {"run_dir=" + (dir / "run3").string(), "seed=9"}, c.io()) == cli::kOk);
    CHECK(slurp(dir / "run1/checkpoints/final.rupn") != slurp(dir / "run3/checkpoints/final.rupn"));

    // The echoed config reproduces the run.
    std::ifstream echoed(dir / "run1" / "config.json");
    const auto j = nlohmann::json::parse(echoed);
    CHECK(j.at("train.epochs") == 2);
    CHECK(j.at("seed") == 0);

    REQUIRE(cli::cmd_synth(4, 16, 8, dir / "data", c.io()) == cli::kOk);
    const auto ckpt = dir / "run1/checkpoints/final.rupn";
    REQUIRE(cli::cmd_eval(ckpt, dir / "data", dir / "eval/report.json", 0.5, c.io()) == cli::kOk);
    std::ifstream rj(dir / "eval/report.json");
    const auto report = eval::report_from_json(nlohmann::json::parse(rj));
    CHECK(report.per_image.size() == 4);
    CHECK(report.checkpoint_hash.size() == 16);
    const auto raw = slurp(dir / "eval/report.csv");
    const auto rows = eval::rows_from_csv(std::string(raw.begin(), raw.end()));
    const auto means = eval::mean_metrics(rows);
    CHECK(std::abs(means.dsc - report.means.dsc) < 1e-12);
    CHECK(std::abs(means.accuracy - report.means.accuracy) < 1e-12);

    REQUIRE(cli::cmd_predict(ckpt, dir / "data/images/synth_00000.ppm", dir / "pred1", 0.5, c.io()) == cli::kOk);
    CHECK(fs::exists(dir / "pred1/synth_00000_prob.pgm"));
    CHECK(fs::exists(dir / "pred1/synth_00000_mask.pgm"));
    for (auto b : payload(dir / "pred1/synth_00000_mask.pgm")) CHECK((b == 0 || b == 255));

    REQUIRE(cli::cmd_predict(ckpt, dir / "data/images", dir / "pred4", 0.5, c.io()) == cli::kOk);
    CHECK(std::distance(fs::directory_iterator(dir / "pred4"), fs::directory_iterator{}) == 8);

    // Non-matching input size is resized in and out.
    data::write_image(Tensor({3, 20, 12}, 0.4f), dir / "odd/odd.ppm");
    REQUIRE(cli::cmd_predict(ckpt, dir / "odd", dir / "pred_odd", 0.5, c.io()) == cli::kOk);
    CHECK(data::read_image(dir / "pred_odd/odd_mask.pgm").shape() == Shape{1, 20, 12});

    fs::create_directories(dir / "junk");
    std::ofstream(dir / "junk/bad.ppm") << "not an image";
    CHECK(cli::cmd_predict(ckpt, dir / "junk", dir / "pred_bad", 0.5, c.io()) == cli::kData);
    CHECK(c.err.str().find("bad.ppm") != std::string::npos);

    {
        auto bytes = slurp(ckpt);
        bytes.resize(bytes.size() / 2);
        std::ofstream f(dir / "broken.rupn", std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK(cli::cmd_eval(dir / "broken.rupn", dir / "data", dir / "x.json", 0.5, c.io()) == cli::kData);
    fs::remove_all(dir);
}

TEST_CASE("train reports data and config failures") {
    const auto dir = fresh_dir("rupnet_unit_train_bad");
    Captured c;
    const auto cfg = quick_config(dir, dir / "run", R"(, "data.root": "/nonexistent/dataset")");
    CHECK(cli::cmd_train(cfg, {}, c.io()) == cli::kData);
    CHECK(c.err.str().find("not-found") != std::string::npos);

    Captured u;
    CHECK(cli::cmd_train(cfg, {"bogus.key=1"}, u.io()) == cli::kUsage);
    fs::remove_all(dir);
}

TEST_CASE("bench command") {
    const auto dir = fresh_dir("rupnet_unit_bench");
    Captured c;
    cli::BenchArgs args;
    args.size = 100;
    args.iters = 1;
    CHECK(cli::cmd_bench(args, c.io()) == cli::kUsage);

    args.size = 32;
    args.warmup = 1;
    args.iters = 3;
    args.out = dir / "bench.json";
    args.baselines = {cli::parse_baseline("ref=7.0193")};
    REQUIRE(cli::cmd_bench(args, c.io()) == cli::kOk);
    std::ifstream in(args.out);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("fps").at("value").get<double>() > 0);
    CHECK_FALSE(j.at("hardware").get<std::string>().empty());
    CHECK(j.at("speedup").size() == 1);

    CHECK_THROWS_AS(cli::parse_baseline("noequals"), InvalidArgument);
    CHECK_THROWS_AS(cli::parse_baseline("x=abc"), InvalidArgument);
    CHECK_THROWS_AS(cli::parse_baseline("x=-1"), InvalidArgument);
    CHECK(cli::parse_baseline("U-Net=7.0193").name == "U-Net");
    fs::remove_all(dir);
}
