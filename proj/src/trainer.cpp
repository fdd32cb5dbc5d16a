#include "rupnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rupnet/checkpoint.hpp"

namespace rupnet::train {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("train.lr must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (loss.bce < 0.0 || loss.dice < 0.0 || (loss.bce == 0.0 && loss.dice == 0.0)) {
        throw ConfigError("train loss weights must be >= 0 and not both zero");
    }
    if (!(loss.dice_smooth > 0.0)) throw ConfigError("train.dice_smooth must be > 0");
    augmentation.validate();
}

StepResult train_step(Network<float>& net, const Tensor& images, const Tensor& masks, const TrainConfig& cfg,
                      AdamState& adam) {
    net.set_bn_frozen(cfg.freeze_bn);
    StepResult r;
    r.prediction = net.forward(images, Mode::kTrain);
    auto loss = combined_loss(r.prediction, masks, cfg.loss);
    r.loss = loss.value;
    if (!std::isfinite(r.loss)) throw NumericError("non-finite loss");
    net.backward(loss.grad);
    adam_step(net.params(), adam, cfg.learning_rate);
    return r;
}

EpochStats train_epoch(Network<float>& net, const data::Dataset& data, const TrainConfig& cfg, AdamState& adam,
                       int epoch) {
    if (data.empty()) throw DataError("empty-dataset: cannot train on an empty dataset");
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = data.count();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng(cfg.seed).derive("shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    EpochStats stats;
    stats.epoch = epoch;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t first = 0, b = 0; first < n; first += batch, ++b) {
        const std::size_t last = std::min(n, first + batch);
        std::vector<data::Sample> augmented;
        augmented.reserve(last - first);
        for (std::size_t k = first; k < last; ++k) {
            Rng rng = Rng(cfg.seed).derive("augment", static_cast<std::uint64_t>(epoch), order[k]);
            augmented.push_back(augment(data.samples[order[k]], rng, cfg.augmentation));
        }
        std::vector<const data::Sample*> ptrs;
        for (const auto& s : augmented) ptrs.push_back(&s);
        const auto [images, masks] = data::make_batch(ptrs);
        double loss;
        try {
            loss = train_step(net, images, masks, cfg, adam).loss;
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " in epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(b));
        }
        stats.batch_losses.push_back(loss);
    }
    stats.mean_loss = std::accumulate(stats.batch_losses.begin(), stats.batch_losses.end(), 0.0) /
                      static_cast<double>(stats.batch_losses.size());
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

std::vector<EpochStats> run_training(Network<float>& net, const data::Dataset& data, const TrainConfig& cfg,
                                     const RunOptions& options) {
    cfg.validate();
    std::optional<std::ofstream> log;
    fs::path ckpt_dir;
    if (options.run_dir) {
        ckpt_dir = *options.run_dir / "checkpoints";
        fs::create_directories(ckpt_dir);
        log.emplace(*options.run_dir / "log.csv", std::ios::trunc);
        if (!*log) throw IoError("cannot write " + (*options.run_dir / "log.csv").string());
        *log << "epoch,mean_loss,seconds\n";
    }

    AdamState adam;
    std::vector<EpochStats> history;
    double best = INFINITY;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto stats = train_epoch(net, data, cfg, adam, epoch);
        if (log) {
            *log << stats.epoch << ',' << stats.mean_loss << ',' << stats.seconds << '\n';
            log->flush();
            const bool periodic = options.checkpoint_every > 0 && epoch % options.checkpoint_every == 0;
            if (periodic || epoch == cfg.epochs) {
                save_checkpoint(net, ckpt_dir / ("epoch_" + std::to_string(epoch) + ".rupn"));
            }
            if (stats.mean_loss < best) {
                best = stats.mean_loss;
                save_checkpoint(net, ckpt_dir / "best.rupn");
            }
        }
        if (options.on_epoch) options.on_epoch(stats);
        history.push_back(std::move(stats));
    }
    if (options.run_dir) save_checkpoint(net, ckpt_dir / "final.rupn");
    return history;
}

}  // namespace rupnet::train
