#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rupnet/dataset.hpp"
#include "rupnet/model.hpp"

namespace rupnet::eval {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// A pixel is predicted positive when pred >= threshold; gt is positive when gt >= 0.5.
ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, double threshold = 0.5);

struct ImageMetrics {
    double dsc = 0, iou = 0, recall = 0, precision = 0, accuracy = 0, f2 = 0;

    friend bool operator==(const ImageMetrics&, const ImageMetrics&) = default;
};

/// Any 0/0 ratio is 1 when neither ground truth nor prediction has a positive pixel, else 0.
ImageMetrics metrics_from_counts(const ConfusionCounts& c);

struct MetricRow {
    std::string id;
    ImageMetrics metrics;
};

/// Arithmetic mean of each metric over rows.
ImageMetrics mean_metrics(const std::vector<MetricRow>& rows);

struct FpsStats {
    double fps = 0;
    double per_frame_ms_mean = 0;
    double per_frame_ms_std = 0;
    int warmup = 0;
    int iters = 0;
    int image_size = 0;

    friend bool operator==(const FpsStats&, const FpsStats&) = default;
};

/// An externally supplied throughput figure, e.g. a published baseline.
struct BaselineRow {
    std::string name;
    double fps = 0;
};

struct SpeedupRow {
    std::string name;
    double baseline_fps = 0;
    double speedup = 0;  // own fps / baseline fps

    friend bool operator==(const SpeedupRow&, const SpeedupRow&) = default;
};

struct MetricsReport {
    std::string config_fingerprint;
    std::string checkpoint_hash;
    std::string hardware;
    double threshold = 0.5;
    std::vector<MetricRow> per_image;
    ImageMetrics means;
    std::optional<FpsStats> fps;
    std::vector<SpeedupRow> speedup;
};

/// Maps an N x 3 x H x W batch to N x 1 x H x W probabilities.
using Predictor = std::function<Tensor(const Tensor&)>;

MetricsReport evaluate(const Predictor& predict, const data::Dataset& dataset, double threshold = 0.5,
                       int batch_size = 8);

/// Infer-mode evaluation. Throws ShapeError if the dataset size is not divisible by 8.
MetricsReport evaluate(const Network<float>& net, const data::Dataset& dataset, double threshold = 0.5,
                       int batch_size = 8);

}  // namespace rupnet::eval
