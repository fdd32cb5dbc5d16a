#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rupnet/gradcheck.hpp"
#include "rupnet/metrics.hpp"

namespace rupnet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Output streams for a command; defaults to stdout/stderr.
struct Console {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
};

int cmd_train(const std::filesystem::path& config, const std::vector<std::string>& overrides, Console io = {});

int cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
             const std::filesystem::path& out, double threshold = 0.5, Console io = {});

int cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                const std::filesystem::path& out_dir, double threshold = 0.5, Console io = {});

struct BenchArgs {
    std::optional<std::filesystem::path> checkpoint;
    std::optional<std::filesystem::path> config;  // fresh network from a run config when no checkpoint
    int size = 512;
    int warmup = 5;
    int iters = 100;
    std::filesystem::path out;
    std::vector<eval::BaselineRow> baselines;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& args, Console io = {});

int cmd_gradcheck(const gradcheck::Options& options = {}, Console io = {});

int cmd_synth(int count, int size, std::uint64_t seed, const std::filesystem::path& out, Console io = {});

/// "name=fps". Throws InvalidArgument.
eval::BaselineRow parse_baseline(const std::string& text);

}  // namespace rupnet::cli
