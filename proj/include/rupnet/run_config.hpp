#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "rupnet/model.hpp"
#include "rupnet/trainer.hpp"

namespace rupnet {

/// Everything a command needs, serialized as one flat JSON object with dotted keys
/// ("net.encoder_channels", "train.lr", ...). Every field has a default.
struct RunConfig {
    NetworkConfig net;
    train::TrainConfig train;
    int checkpoint_every = 10;

    std::string data_root;  // empty: generate a synthetic dataset
    double train_fraction = 0.88;
    int synth_count = 200;

    double eval_threshold = 0.5;
    int eval_batch_size = 8;

    int bench_size = 512;
    int bench_warmup = 5;
    int bench_iters = 100;

    std::uint64_t seed = 0;
    std::string run_dir = "runs/default";

    /// Throws ConfigError.
    void validate() const;

    nlohmann::json to_json() const;

    /// Applies every key of a flat object over the current values. Unknown keys and
    /// wrongly typed values raise ConfigError.
    void apply(const nlohmann::json& flat);
    /// "key=value"; the value is parsed as JSON, falling back to a bare string.
    void apply_override(const std::string& assignment);

    static std::vector<std::string> keys();
};

/// defaults < file (if non-empty path) < overrides, then validated.
RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

}  // namespace rupnet
