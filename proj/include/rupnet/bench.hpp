#pragma once

#include <cstdint>
#include <string>

#include "rupnet/metrics.hpp"
#include "rupnet/model.hpp"

namespace rupnet::eval {

/// Batch-1 infer-mode throughput on a fixed random size x size input: `warmup` untimed
/// forwards, then `iters` individually timed forwards. fps = iters / total timed seconds.
FpsStats benchmark_fps(const Network<float>& net, int size, int warmup, int iters, std::uint64_t seed = 0);

/// CPU model name and logical core count, e.g. "AMD EPYC (1 threads)".
std::string hardware_string();

}  // namespace rupnet::eval
