#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rupnet/tensor.hpp"

namespace rupnet::gradcheck {

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double relative_error(double analytic, double numeric, double floor);

struct Options {
    double step = 1e-5;
    double tolerance = 1e-4;
    double floor = 1e-6;
    std::uint64_t seed = 0;
    // Test hook: called with (layer kind, analytic gradients) before comparison.
    std::function<void(const std::string&, std::vector<TensorD>&)> corrupt;
};

struct LayerResult {
    std::string layer;
    double max_rel_error = 0.0;
    std::size_t checked = 0;  // number of scalar derivatives compared
    bool passed = false;
};

/// Layer kinds in report order.
const std::vector<std::string>& layer_kinds();

/// Central finite differences in double precision for every layer kind, one result each.
std::vector<LayerResult> run_gradcheck(const Options& options = {});

}  // namespace rupnet::gradcheck
