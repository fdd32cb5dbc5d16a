#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "rupnet/augment.hpp"
#include "rupnet/dataset.hpp"
#include "rupnet/losses.hpp"
#include "rupnet/model.hpp"
#include "rupnet/optim.hpp"

namespace rupnet::train {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 8;
    int epochs = 200;
    std::uint64_t seed = 0;
    LossWeights loss;
    AugmentationConfig augmentation;
    // Normalize with running statistics during training and never update them.
    bool freeze_bn = false;

    /// Throws ConfigError.
    void validate() const;
};

struct StepResult {
    double loss = 0.0;
    Tensor prediction;
};

/// forward(train) -> combined loss -> backward -> Adam. Throws NumericError on a non-finite loss.
StepResult train_step(Network<float>& net, const Tensor& images, const Tensor& masks, const TrainConfig& cfg,
                      AdamState& adam);

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    std::vector<double> batch_losses;
    double seconds = 0.0;
};

/// One pass over `data` in a seeded order (seed, epoch); the final partial batch is kept.
/// Each sample's augmentation stream is keyed by (seed, epoch, sample position in `data`).
EpochStats train_epoch(Network<float>& net, const data::Dataset& data, const TrainConfig& cfg, AdamState& adam,
                       int epoch);

struct RunOptions {
    std::optional<std::filesystem::path> run_dir;  // log.csv and checkpoints/ are written here
    int checkpoint_every = 10;
    std::function<void(const EpochStats&)> on_epoch;
};

/// Trains for cfg.epochs. With a run directory: appends one CSV line per epoch to log.csv and
/// writes checkpoints/epoch_<n>.rupn (every checkpoint_every epochs and the last), best.rupn
/// (lowest mean loss so far), and final.rupn.
std::vector<EpochStats> run_training(Network<float>& net, const data::Dataset& data, const TrainConfig& cfg,
                                     const RunOptions& options = {});

}  // namespace rupnet::train
