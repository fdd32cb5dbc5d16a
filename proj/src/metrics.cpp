#include "rupnet/metrics.hpp"

namespace rupnet::eval {

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, double threshold) {
    if (pred.shape() != gt.shape()) {
        throw ShapeError("shape-mismatch: confusion pred " + shape_to_string(pred.shape()) + " vs gt " +
                         shape_to_string(gt.shape()));
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("confusion: threshold must be in (0, 1)");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = static_cast<double>(pred[i]) >= threshold;
        const bool g = gt[i] >= 0.5f;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ImageMetrics metrics_from_counts(const ConfusionCounts& c) {
    const bool perfect_empty = c.tp == 0 && c.fp == 0 && c.fn == 0;
    const double undefined = perfect_empty ? 1.0 : 0.0;
    auto ratio = [&](double num, double den) { return den == 0.0 ? undefined : num / den; };

    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    ImageMetrics m;
    m.dsc = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    m.iou = ratio(tp, tp + fp + fn);
    m.recall = ratio(tp, tp + fn);
    m.precision = ratio(tp, tp + fp);
    m.accuracy = ratio(tp + tn, tp + fp + fn + tn);
    m.f2 = ratio(5.0 * m.precision * m.recall, 4.0 * m.precision + m.recall);
    return m;
}

ImageMetrics mean_metrics(const std::vector<MetricRow>& rows) {
    ImageMetrics sum;
    if (rows.empty()) return sum;
    for (const auto& r : rows) {
        sum.dsc += r.metrics.dsc;
        sum.iou += r.metrics.iou;
        sum.recall += r.metrics.recall;
        sum.precision += r.metrics.precision;
        sum.accuracy += r.metrics.accuracy;
        sum.f2 += r.metrics.f2;
    }
    const double n = static_cast<double>(rows.size());
    return {sum.dsc / n, sum.iou / n, sum.recall / n, sum.precision / n, sum.accuracy / n, sum.f2 / n};
}

MetricsReport evaluate(const Predictor& predict, const data::Dataset& dataset, double threshold, int batch_size) {
    if (dataset.empty()) throw DataError("empty-dataset: nothing to evaluate");
    if (batch_size < 1) throw InvalidArgument("evaluate: batch_size must be >= 1");
    MetricsReport report;
    report.threshold = threshold;
    const std::size_t n = dataset.count();
    const auto batch = static_cast<std::size_t>(batch_size);
    for (std::size_t first = 0; first < n; first += batch) {
        const std::size_t last = std::min(n, first + batch);
        std::vector<const data::Sample*> ptrs;
        for (std::size_t k = first; k < last; ++k) ptrs.push_back(&dataset.samples[k]);
        const auto [images, masks] = data::make_batch(ptrs);
        const Tensor pred = predict(images);
        if (pred.shape() != masks.shape()) {
            throw ShapeError("shape-mismatch: predictor returned " + shape_to_string(pred.shape()) + ", expected " +
                             shape_to_string(masks.shape()));
        }
        for (std::size_t k = first; k < last; ++k) {
            const auto c = confusion(unstack(pred, k - first), dataset.samples[k].mask, threshold);
            report.per_image.push_back({dataset.samples[k].id, metrics_from_counts(c)});
        }
    }
    report.means = mean_metrics(report.per_image);
    return report;
}

MetricsReport evaluate(const Network<float>& net, const data::Dataset& dataset, double threshold, int batch_size) {
    auto report = evaluate([&net](const Tensor& x) { return net.infer(x); }, dataset, threshold, batch_size);
    report.config_fingerprint = net.config().fingerprint();
    return report;
}

}  // namespace rupnet::eval
