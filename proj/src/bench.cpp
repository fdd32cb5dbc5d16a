#include "rupnet/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "rupnet/rng.hpp"

namespace rupnet::eval {

FpsStats benchmark_fps(const Network<float>& net, int size, int warmup, int iters, std::uint64_t seed) {
    if (size < 8 || size % 8 != 0) {
        throw InvalidArgument("benchmark_fps: size must be a positive multiple of 8, got " + std::to_string(size));
    }
    if (iters < 1) throw InvalidArgument("benchmark_fps: iters must be >= 1");
    if (warmup < 0) throw InvalidArgument("benchmark_fps: warmup must be >= 0");

    Rng rng = Rng(seed).derive("bench");
    const auto s = static_cast<std::size_t>(size);
    const auto channels = static_cast<std::size_t>(net.config().in_channels);
    const Tensor input = rng_uniform<float>(rng, {1, channels, s, s}, 0.0, 1.0);

    volatile float sink = 0.0f;
    for (int i = 0; i < warmup; ++i) sink = sink + net.infer(input)[0];

    using clock = std::chrono::steady_clock;
    std::vector<double> frame_ms;
    frame_ms.reserve(static_cast<std::size_t>(iters));
    const auto start = clock::now();
    for (int i = 0; i < iters; ++i) {
        const auto t0 = clock::now();
        sink = sink + net.infer(input)[0];
        frame_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    const double total_s = std::chrono::duration<double>(clock::now() - start).count();

    double mean = 0.0;
    for (double v : frame_ms) mean += v;
    mean /= static_cast<double>(iters);
    double var = 0.0;
    for (double v : frame_ms) var += (v - mean) * (v - mean);
    var /= static_cast<double>(iters);

    FpsStats stats;
    stats.fps = static_cast<double>(iters) / total_s;
    stats.per_frame_ms_mean = mean;
    stats.per_frame_ms_std = std::sqrt(var);
    stats.warmup = warmup;
    stats.iters = iters;
    stats.image_size = size;
    return stats;
}

std::string hardware_string() {
    std::string model = "unknown CPU";
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(colon + 1);
                model.erase(0, model.find_first_not_of(' '));
            }
            break;
        }
    }
    return model + " (" + std::to_string(std::thread::hardware_concurrency()) + " threads)";
}

}  // namespace rupnet::eval
