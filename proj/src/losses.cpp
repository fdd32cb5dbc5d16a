#include "rupnet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace rupnet::train {

namespace {

template <typename T>
void require_same(const BasicTensor<T>& pred, const BasicTensor<T>& target, const char* what) {
    if (pred.shape() != target.shape()) {
        throw ShapeError(std::string("shape-mismatch: ") + what + " pred " + shape_to_string(pred.shape()) +
                         " vs target " + shape_to_string(target.shape()));
    }
}

}  // namespace

template <typename T>
LossResult<T> bce_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
    require_same(pred, target, "bce_loss");
    const double count = static_cast<double>(pred.size());
    LossResult<T> r;
    r.grad = BasicTensor<T>(pred.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pred[i]), kProbClamp, 1.0 - kProbClamp);
        const double t = target[i];
        sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        r.grad[i] = static_cast<T>((-t / p + (1.0 - t) / (1.0 - p)) / count);
    }
    r.value = sum / count;
    return r;
}

template <typename T>
LossResult<T> dice_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, double smooth) {
    require_same(pred, target, "dice_loss");
    if (!(smooth > 0.0)) throw InvalidArgument("dice_loss: smooth must be > 0");
    const std::size_t images = pred.rank() == 4 ? pred.dim(0) : 1;
    const std::size_t per = pred.size() / images;
    LossResult<T> r;
    r.grad = BasicTensor<T>(pred.shape());
    double total = 0.0;
    for (std::size_t n = 0; n < images; ++n) {
        const T* p = pred.data() + n * per;
        const T* t = target.data() + n * per;
        double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
        for (std::size_t i = 0; i < per; ++i) {
            inter += static_cast<double>(p[i]) * t[i];
            sum_p += p[i];
            sum_t += t[i];
        }
        const double num = 2.0 * inter + smooth;
        const double den = sum_p + sum_t + smooth;
        total += 1.0 - num / den;
        T* g = r.grad.data() + n * per;
        for (std::size_t i = 0; i < per; ++i) {
            g[i] = static_cast<T>(-(2.0 * t[i] * den - num) / (den * den) / static_cast<double>(images));
        }
    }
    r.value = total / static_cast<double>(images);
    return r;
}

template <typename T>
LossResult<T> combined_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, const LossWeights& w) {
    if (w.bce < 0.0 || w.dice < 0.0 || (w.bce == 0.0 && w.dice == 0.0)) {
        throw InvalidArgument("combined_loss: weights must be >= 0 and not both zero");
    }
    LossResult<T> r;
    r.grad = BasicTensor<T>(pred.shape());
    if (w.bce > 0.0) {
        auto b = bce_loss(pred, target);
        r.value += w.bce * b.value;
        for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] += static_cast<T>(w.bce * b.grad[i]);
    }
    if (w.dice > 0.0) {
        auto d = dice_loss(pred, target, w.dice_smooth);
        r.value += w.dice * d.value;
        for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] += static_cast<T>(w.dice * d.grad[i]);
    }
    return r;
}

template LossResult<float> bce_loss(const BasicTensor<float>&, const BasicTensor<float>&);
template LossResult<double> bce_loss(const BasicTensor<double>&, const BasicTensor<double>&);
template LossResult<float> dice_loss(const BasicTensor<float>&, const BasicTensor<float>&, double);
template LossResult<double> dice_loss(const BasicTensor<double>&, const BasicTensor<double>&, double);
template LossResult<float> combined_loss(const BasicTensor<float>&, const BasicTensor<float>&, const LossWeights&);
template LossResult<double> combined_loss(const BasicTensor<double>&, const BasicTensor<double>&, const LossWeights&);

}  // namespace rupnet::train
