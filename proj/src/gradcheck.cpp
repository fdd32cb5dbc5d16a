#include "rupnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "rupnet/error.hpp"
#include "rupnet/losses.hpp"
#include "rupnet/model.hpp"
#include "rupnet/nn_ops.hpp"
#include "rupnet/rng.hpp"

namespace rupnet::gradcheck {

namespace {

using Fn = std::function<double()>;

double dot(const TensorD& a, const TensorD& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

class Checker {
public:
    Checker(const Options& options, std::string layer) : options_(options) { result_.layer = std::move(layer); }

    // Perturbs each element of every target in place, evaluating `loss` on both sides.
    void compare(const std::vector<TensorD*>& targets, std::vector<TensorD> analytic, const Fn& loss) {
        if (targets.size() != analytic.size()) throw InvalidArgument("gradcheck: target/gradient count mismatch");
        if (options_.corrupt) options_.corrupt(result_.layer, analytic);
        const double h = options_.step;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            TensorD& x = *targets[t];
            if (x.size() != analytic[t].size()) {
                throw ShapeError("gradcheck " + result_.layer + ": gradient shape " +
                                 shape_to_string(analytic[t].shape()) + " vs " + shape_to_string(x.shape()));
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double saved = x[i];
                x[i] = saved + h;
                const double up = loss();
                x[i] = saved - h;
                const double down = loss();
                x[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double err = relative_error(analytic[t][i], numeric, options_.floor);
                result_.max_rel_error = std::max(result_.max_rel_error, std::isnan(err) ? INFINITY : err);
                ++result_.checked;
            }
        }
    }

    LayerResult finish() {
        result_.passed = result_.checked > 0 && result_.max_rel_error < options_.tolerance;
        return result_;
    }

private:
    const Options& options_;
    LayerResult result_;
};

TensorD away_from_zero(Rng& rng, const Shape& shape) {
    TensorD x(shape);
    for (auto& v : x.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
    return x;
}

// Distinct values with gaps of 0.01 so no pooling window is near a tie.
TensorD distinct_values(Rng& rng, const Shape& shape) {
    TensorD x(shape);
    std::vector<double> vals(x.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.01 * static_cast<double>(i) - 0.5;
    for (std::size_t i = vals.size(); i > 1; --i) std::swap(vals[i - 1], vals[rng.below(i)]);
    std::copy(vals.begin(), vals.end(), x.data());
    return x;
}

TensorD random_mask(Rng& rng, const Shape& shape) {
    TensorD m(shape);
    for (auto& v : m.values()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
    return m;
}

LayerResult check_conv(const Options& o, Rng& rng) {
    Checker c(o, "conv2d");
    struct Case {
        std::size_t k;
        bool bias;
    };
    for (const Case cs : {Case{1, true}, Case{3, true}, Case{3, false}}) {
        TensorD x = rng_normal<double>(rng, {2, 3, 5, 4}, 0.0, 1.0);
        TensorD w = rng_normal<double>(rng, {4, 3, cs.k, cs.k}, 0.0, 0.5);
        TensorD b = rng_normal<double>(rng, {4}, 0.0, 0.5);
        const int pad = static_cast<int>(cs.k / 2);
        const TensorD* bp = cs.bias ? &b : nullptr;
        nn::ConvRecord<double> rec;
        const TensorD y = nn::conv2d(x, w, bp, pad, &rec);
        const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
        auto g = nn::conv2d_backward(rec, r);
        std::vector<TensorD*> targets{&x, &w};
        std::vector<TensorD> grads{g.input_grad, g.param_grads.at(0)};
        if (cs.bias) {
            targets.push_back(&b);
            grads.push_back(g.param_grads.at(1));
        }
        c.compare(targets, grads, [&] { return dot(r, nn::conv2d(x, w, bp, pad)); });
    }
    return c.finish();
}

LayerResult check_batchnorm(const Options& o, Rng& rng) {
    Checker c(o, "batchnorm");
    for (const bool batch_stats : {true, false}) {
        TensorD x = rng_normal<double>(rng, {3, 2, 3, 3}, 0.5, 2.0);
        TensorD gamma = rng_uniform<double>(rng, {2}, 0.5, 1.5);
        TensorD beta = rng_normal<double>(rng, {2}, 0.0, 0.5);
        const TensorD rmean = rng_normal<double>(rng, {2}, 0.0, 0.5);
        const TensorD rvar = rng_uniform<double>(rng, {2}, 0.5, 2.0);
        const nn::BatchNormParams<double> p{gamma.values(), beta.values(), rmean.values(), rvar.values(), 1e-5};
        nn::BatchNormRecord<double> rec;
        const TensorD y = nn::batchnorm_forward(x, p, batch_stats, &rec);
        const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
        auto g = nn::batchnorm_backward(rec, r);
        c.compare({&x, &gamma, &beta}, {g.input_grad, g.param_grads.at(0), g.param_grads.at(1)},
                  [&] { return dot(r, nn::batchnorm_forward(x, p, batch_stats)); });
    }
    return c.finish();
}

LayerResult check_relu(const Options& o, Rng& rng) {
    Checker c(o, "relu");
    TensorD x = away_from_zero(rng, {2, 3, 4, 4});
    nn::ReluRecord<double> rec;
    const TensorD y = nn::relu(x, &rec);
    const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
    c.compare({&x}, {nn::relu_backward(rec, r).input_grad}, [&] { return dot(r, nn::relu(x)); });
    return c.finish();
}

LayerResult check_maxpool(const Options& o, Rng& rng) {
    Checker c(o, "maxpool2x2");
    TensorD x = distinct_values(rng, {2, 2, 4, 6});
    nn::MaxPoolRecord<double> rec;
    const TensorD y = nn::maxpool2x2(x, &rec);
    const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
    c.compare({&x}, {nn::maxpool2x2_backward(rec, r).input_grad},
              [&] { return dot(r, nn::maxpool2x2(x).output); });
    return c.finish();
}

LayerResult check_upsample(const Options& o, Rng& rng) {
    Checker c(o, "bilinear_upsample");
    for (const int factor : {2, 4}) {
        TensorD x = rng_normal<double>(rng, {1, 2, 3, 4}, 0.0, 1.0);
        nn::UpsampleRecord<double> rec;
        const TensorD y = nn::bilinear_upsample(x, factor, &rec);
        const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
        c.compare({&x}, {nn::bilinear_upsample_backward(rec, r).input_grad},
                  [&] { return dot(r, nn::bilinear_upsample(x, factor)); });
    }
    return c.finish();
}

LayerResult check_sigmoid(const Options& o, Rng& rng) {
    Checker c(o, "sigmoid");
    TensorD x = rng_normal<double>(rng, {2, 1, 4, 4}, 0.0, 2.0);
    nn::SigmoidRecord<double> rec;
    const TensorD y = nn::sigmoid(x, &rec);
    const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
    c.compare({&x}, {nn::sigmoid_backward(rec, r).input_grad}, [&] { return dot(r, nn::sigmoid(x)); });
    return c.finish();
}

LayerResult check_bce(const Options& o, Rng& rng) {
    Checker c(o, "bce_loss");
    TensorD p = rng_uniform<double>(rng, {2, 1, 4, 4}, 0.05, 0.95);
    const TensorD t = random_mask(rng, p.shape());
    c.compare({&p}, {train::bce_loss(p, t).grad}, [&] { return train::bce_loss(p, t).value; });
    return c.finish();
}

LayerResult check_dice(const Options& o, Rng& rng) {
    Checker c(o, "dice_loss");
    TensorD p = rng_uniform<double>(rng, {2, 1, 4, 4}, 0.05, 0.95);
    const TensorD t = random_mask(rng, p.shape());
    c.compare({&p}, {train::dice_loss(p, t, 1.0).grad}, [&] { return train::dice_loss(p, t, 1.0).value; });
    return c.finish();
}

// Moves BN affine parameters off their init values so no ReLU sits exactly at zero.
void perturb_batchnorm(ParamStore<double>& store, Rng& rng) {
    for (auto& e : store.entries()) {
        const auto& n = e.name;
        if (n.ends_with(".gamma")) {
            for (auto& v : e.value.values()) v = rng.uniform(0.5, 1.5);
        } else if (n.ends_with(".beta")) {
            for (auto& v : e.value.values()) v = rng.uniform(-0.3, 0.3);
        }
    }
}

void trainable_targets(ParamStore<double>& store, std::vector<TensorD*>& targets, std::vector<TensorD>& grads) {
    for (auto& e : store.entries()) {
        if (!e.trainable) continue;
        targets.push_back(&e.value);
        grads.push_back(e.grad);
    }
}

LayerResult check_residual_block(const Options& o, Rng& rng) {
    Checker c(o, "residual_block");
    for (const auto& [cin, cout] : {std::pair<std::size_t, std::size_t>{3, 5}, {4, 4}}) {
        ParamStore<double> store;
        const auto block = ResidualBlock<double>::create(store, "block", cin, cout);
        block.initialize(store, rng);
        perturb_batchnorm(store, rng);
        TensorD x = rng_normal<double>(rng, {2, cin, 4, 4}, 0.0, 1.0);
        BlockTape<double> tape;
        const TensorD y = block.forward(store, x, true, 1e-5, &tape);
        const TensorD r = rng_normal<double>(rng, y.shape(), 0.0, 1.0);
        store.zero_grad();
        const TensorD dx = block.backward(store, tape, r);
        std::vector<TensorD*> targets{&x};
        std::vector<TensorD> grads{dx};
        trainable_targets(store, targets, grads);
        c.compare(targets, grads, [&] { return dot(r, block.forward(store, x, true, 1e-5)); });
    }
    return c.finish();
}

LayerResult check_end_to_end(const Options& o, Rng& rng) {
    Checker c(o, "end_to_end");
    for (const bool fusion : {false, true}) {
        NetworkConfig cfg;
        cfg.encoder_channels = {2, 4, 8};
        cfg.bridge_channels = 16;
        cfg.decoder_channels = {8, 4, 2};
        cfg.image_size = 8;
        cfg.decoder_skip_fusion = fusion;
        Network<double> net = build_network<double>(cfg, rng);
        perturb_batchnorm(net.params(), rng);
        const TensorD x = rng_uniform<double>(rng, {1, 3, 8, 8}, 0.0, 1.0);
        const TensorD target = random_mask(rng, {1, 1, 8, 8});
        const train::LossWeights weights;

        net.params().zero_grad();
        const auto loss = train::combined_loss(net.forward(x, Mode::kTrain), target, weights);
        net.backward(loss.grad);
        std::vector<TensorD*> targets;
        std::vector<TensorD> grads;
        trainable_targets(net.params(), targets, grads);
        c.compare(targets, grads,
                  [&] { return train::combined_loss(net.forward(x, Mode::kTrain), target, weights).value; });
    }
    return c.finish();
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

const std::vector<std::string>& layer_kinds() {
    static const std::vector<std::string> kinds{"conv2d",      "batchnorm", "relu",     "maxpool2x2",
                                                "bilinear_upsample", "sigmoid", "bce_loss", "dice_loss",
                                                "residual_block",    "end_to_end"};
    return kinds;
}

std::vector<LayerResult> run_gradcheck(const Options& options) {
    Rng root(options.seed);
    using Check = LayerResult (*)(const Options&, Rng&);
    const Check checks[] = {check_conv,    check_batchnorm, check_relu,     check_maxpool,          check_upsample,
                            check_sigmoid, check_bce,       check_dice,     check_residual_block,   check_end_to_end};
    std::vector<LayerResult> results;
    for (std::size_t i = 0; i < std::size(checks); ++i) {
        Rng rng = root.derive("gradcheck", i);
        results.push_back(checks[i](options, rng));
    }
    return results;
}

}  // namespace rupnet::gradcheck
