#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rupnet/commands.hpp"
#include "rupnet/error.hpp"

using namespace rupnet;

int main(int argc, char** argv) {
    CLI::App app{"RUPNet polyp segmentation: training, evaluation and benchmarking"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    auto* train = app.add_subcommand("train", "train a model; writes config.json, log.csv, checkpoints/, report.json");
    train->add_option("--config", config, "flat JSON run config")->check(CLI::ExistingFile);
    train->add_option("--override", overrides, "key=value, applied after the config file")->take_all();
    std::uint64_t train_seed = 0;
    auto* train_seed_opt = train->add_option("--seed", train_seed, "shorthand for --override seed=N");

    std::string ckpt, data_dir, out;
    double threshold = 0.5;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
    eval->add_option("--ckpt", ckpt)->required();
    eval->add_option("--data", data_dir)->required();
    eval->add_option("--out", out, "report JSON path; the per-image CSV is written next to it")->required();
    eval->add_option("--threshold", threshold)->capture_default_str();
    eval->add_option("--seed", train_seed, "accepted for uniformity; evaluation is deterministic");

    std::string input;
    auto* predict = app.add_subcommand("predict", "write probability maps and binary masks");
    predict->add_option("--ckpt", ckpt)->required();
    predict->add_option("--in", input, "image file or directory")->required();
    predict->add_option("--out", out, "output directory")->required();
    predict->add_option("--threshold", threshold)->capture_default_str();
    predict->add_option("--seed", train_seed, "accepted for uniformity; prediction is deterministic");

    cli::BenchArgs bench_args;
    std::string bench_ckpt, bench_config, bench_out;
    std::vector<std::string> baselines;
    auto* bench = app.add_subcommand("bench", "measure batch-1 inference throughput");
    bench->add_option("--ckpt", bench_ckpt, "checkpoint; a fresh network is built when omitted");
    bench->add_option("--config", bench_config, "run config for the fresh network")->check(CLI::ExistingFile);
    bench->add_option("--size", bench_args.size)->capture_default_str();
    bench->add_option("--warmup", bench_args.warmup)->capture_default_str();
    bench->add_option("--iters", bench_args.iters)->capture_default_str();
    bench->add_option("--out", bench_out, "report JSON path");
    bench->add_option("--baseline", baselines, "name=fps of an external baseline (repeatable)");
    bench->add_option("--seed", bench_args.seed)->capture_default_str();

    gradcheck::Options gc;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every backward pass in 64-bit");
    grad->add_option("--seed", gc.seed)->capture_default_str();

    int count = 200, size = 64;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic images/ + masks/ dataset");
    synth->add_option("--count", count)->capture_default_str();
    synth->add_option("--size", size)->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kOk : cli::kUsage;
    }

    if (*train) {
        if (*train_seed_opt) overrides.push_back("seed=" + std::to_string(train_seed));
        return cli::cmd_train(config, overrides);
    }
    if (*eval) return cli::cmd_eval(ckpt, data_dir, out, threshold);
    if (*predict) return cli::cmd_predict(ckpt, input, out, threshold);
    if (*bench) {
        try {
            for (const auto& b : baselines) bench_args.baselines.push_back(cli::parse_baseline(b));
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return cli::kUsage;
        }
        if (!bench_ckpt.empty()) bench_args.checkpoint = bench_ckpt;
        if (!bench_config.empty()) bench_args.config = bench_config;
        bench_args.out = bench_out;
        return cli::cmd_bench(bench_args);
    }
    if (*grad) return cli::cmd_gradcheck(gc);
    if (*synth) return cli::cmd_synth(count, size, synth_seed, out);
    return cli::kUsage;
}
