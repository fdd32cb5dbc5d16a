#include "rupnet/model.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace rupnet {

// ---------------------------------------------------------------------------
// NetworkConfig
// ---------------------------------------------------------------------------

void NetworkConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string("net.") + name + " must be >= 1, got " + std::to_string(v));
    };
    positive(in_channels, "in_channels");
    for (int c : encoder_channels) positive(c, "encoder_channels");
    positive(bridge_channels, "bridge_channels");
    for (int c : decoder_channels) positive(c, "decoder_channels");
    positive(image_size, "image_size");
    if (image_size % 8 != 0) {
        throw ConfigError("net.image_size must be divisible by 8, got " + std::to_string(image_size));
    }
    if (!(bn_eps > 0.0)) throw ConfigError("net.bn_eps must be > 0");
    if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ConfigError("net.bn_momentum must be in [0, 1]");
}

nlohmann::json NetworkConfig::to_json() const {
    return {
        {"in_channels", in_channels},
        {"encoder_channels", encoder_channels},
        {"bridge_channels", bridge_channels},
        {"decoder_channels", decoder_channels},
        {"image_size", image_size},
        {"decoder_skip_fusion", decoder_skip_fusion},
        {"bn_eps", bn_eps},
        {"bn_momentum", bn_momentum},
    };
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("network config must be a JSON object");
    NetworkConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "in_channels") c.in_channels = value.get<int>();
            else if (key == "encoder_channels") c.encoder_channels = value.get<std::array<int, 3>>();
            else if (key == "bridge_channels") c.bridge_channels = value.get<int>();
            else if (key == "decoder_channels") c.decoder_channels = value.get<std::array<int, 3>>();
            else if (key == "image_size") c.image_size = value.get<int>();
            else if (key == "decoder_skip_fusion") c.decoder_skip_fusion = value.get<bool>();
            else if (key == "bn_eps") c.bn_eps = value.get<double>();
            else if (key == "bn_momentum") c.bn_momentum = value.get<double>();
            else throw ConfigError("unknown network config key: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("network config: ") + e.what());
    }
    return c;
}

std::string NetworkConfig::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// ParamStore
// ---------------------------------------------------------------------------

template <typename T>
std::size_t ParamStore<T>::add_parameter(std::string name, BasicTensor<T> value) {
    if (find(name)) throw InvalidArgument("duplicate parameter name: " + name);
    Entry e;
    e.name = std::move(name);
    e.grad = BasicTensor<T>(value.shape());
    e.m = BasicTensor<T>(value.shape());
    e.v = BasicTensor<T>(value.shape());
    e.value = std::move(value);
    e.trainable = true;
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::add_buffer(std::string name, BasicTensor<T> value) {
    if (find(name)) throw InvalidArgument("duplicate parameter name: " + name);
    Entry e;
    e.name = std::move(name);
    e.value = std::move(value);
    e.trainable = false;
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

template <typename T>
std::optional<std::size_t> ParamStore<T>::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    return std::nullopt;
}

template <typename T>
std::size_t ParamStore<T>::trainable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        if (e.trainable) n += e.value.size();
    }
    return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
    for (auto& e : entries_) {
        if (e.trainable) e.grad.fill(T(0));
    }
}

// ---------------------------------------------------------------------------
// ResidualBlock
// ---------------------------------------------------------------------------

namespace {

template <typename T>
typename ResidualBlock<T>::BatchNormSlots add_batchnorm(ParamStore<T>& store, const std::string& prefix,
                                                        std::size_t channels) {
    typename ResidualBlock<T>::BatchNormSlots s{};
    s.gamma = store.add_parameter(prefix + ".gamma", BasicTensor<T>({channels}, T(1)));
    s.beta = store.add_parameter(prefix + ".beta", BasicTensor<T>({channels}, T(0)));
    s.running_mean = store.add_buffer(prefix + ".running_mean", BasicTensor<T>({channels}, T(0)));
    s.running_var = store.add_buffer(prefix + ".running_var", BasicTensor<T>({channels}, T(1)));
    return s;
}

template <typename T>
nn::BatchNormParams<T> bn_params(const ParamStore<T>& store, const typename ResidualBlock<T>::BatchNormSlots& s,
                                 double eps) {
    return {store[s.gamma].value.values(), store[s.beta].value.values(), store[s.running_mean].value.values(),
            store[s.running_var].value.values(), eps};
}

template <typename T>
void he_init(BasicTensor<T>& w, Rng& rng) {
    const std::size_t fan_in = w.dim(1) * w.dim(2) * w.dim(3);
    w = rng_normal<T>(rng, w.shape(), 0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

template <typename T>
void accumulate(ParamStore<T>& store, std::size_t slot, const BasicTensor<T>& grad) {
    add_inplace(store[slot].grad, grad);
}

template <typename T>
void accumulate_bn(ParamStore<T>& store, const typename ResidualBlock<T>::BatchNormSlots& s,
                   const nn::BackwardResult<T>& r) {
    accumulate(store, s.gamma, r.param_grads[0]);
    accumulate(store, s.beta, r.param_grads[1]);
}

template <typename T>
void update_bn(ParamStore<T>& store, const typename ResidualBlock<T>::BatchNormSlots& s,
               const nn::BatchNormRecord<T>& rec, double momentum) {
    nn::update_running_stats(store[s.running_mean].value.values(), store[s.running_var].value.values(), rec,
                             momentum);
}

}  // namespace

template <typename T>
ResidualBlock<T> ResidualBlock<T>::create(ParamStore<T>& store, const std::string& prefix, std::size_t in,
                                          std::size_t out) {
    ResidualBlock b;
    b.in_channels = in;
    b.out_channels = out;
    b.conv1 = store.add_parameter(prefix + ".conv1.weight", BasicTensor<T>({out, in, 3, 3}));
    b.bn1 = add_batchnorm(store, prefix + ".bn1", out);
    b.conv2 = store.add_parameter(prefix + ".conv2.weight", BasicTensor<T>({out, out, 3, 3}));
    b.bn2 = add_batchnorm(store, prefix + ".bn2", out);
    if (in != out) {
        b.shortcut_conv = store.add_parameter(prefix + ".shortcut.weight", BasicTensor<T>({out, in, 1, 1}));
        b.shortcut_bn = add_batchnorm(store, prefix + ".shortcut_bn", out);
    }
    return b;
}

template <typename T>
void ResidualBlock<T>::initialize(ParamStore<T>& store, Rng& rng) const {
    he_init(store[conv1].value, rng);
    he_init(store[conv2].value, rng);
    if (shortcut_conv) he_init(store[*shortcut_conv].value, rng);
}

template <typename T>
BasicTensor<T> ResidualBlock<T>::forward(const ParamStore<T>& store, const BasicTensor<T>& x, bool batch_stats,
                                         double eps, BlockTape<T>* tape) const {
    if (x.rank() != 4 || x.channels() != in_channels) {
        throw ShapeError("shape-mismatch: residual block expects " + std::to_string(in_channels) +
                         " input channels, got " + shape_to_string(x.shape()));
    }
    auto h = nn::conv2d(x, store[conv1].value, nullptr, 1, tape ? &tape->conv1 : nullptr);
    h = nn::batchnorm_forward(h, bn_params(store, bn1, eps), batch_stats, tape ? &tape->bn1 : nullptr);
    h = nn::relu(h, tape ? &tape->relu1 : nullptr);
    h = nn::conv2d(h, store[conv2].value, nullptr, 1, tape ? &tape->conv2 : nullptr);
    h = nn::batchnorm_forward(h, bn_params(store, bn2, eps), batch_stats, tape ? &tape->bn2 : nullptr);
    if (shortcut_conv) {
        auto s = nn::conv2d(x, store[*shortcut_conv].value, nullptr, 0, tape ? &tape->shortcut_conv : nullptr);
        s = nn::batchnorm_forward(s, bn_params(store, *shortcut_bn, eps), batch_stats,
                                  tape ? &tape->shortcut_bn : nullptr);
        add_inplace(h, s);
    } else {
        add_inplace(h, x);
    }
    return nn::relu(h, tape ? &tape->out : nullptr);
}

template <typename T>
BasicTensor<T> ResidualBlock<T>::backward(ParamStore<T>& store, const BlockTape<T>& tape,
                                          const BasicTensor<T>& upstream) const {
    auto dsum = nn::relu_backward(tape.out, upstream).input_grad;

    auto r = nn::batchnorm_backward(tape.bn2, dsum);
    accumulate_bn(store, bn2, r);
    r = nn::conv2d_backward(tape.conv2, r.input_grad);
    accumulate(store, conv2, r.param_grads[0]);
    r = nn::relu_backward(tape.relu1, r.input_grad);
    r = nn::batchnorm_backward(tape.bn1, r.input_grad);
    accumulate_bn(store, bn1, r);
    r = nn::conv2d_backward(tape.conv1, r.input_grad);
    accumulate(store, conv1, r.param_grads[0]);
    BasicTensor<T> dx = std::move(r.input_grad);

    if (shortcut_conv) {
        auto s = nn::batchnorm_backward(tape.shortcut_bn, dsum);
        accumulate_bn(store, *shortcut_bn, s);
        s = nn::conv2d_backward(tape.shortcut_conv, s.input_grad);
        accumulate(store, *shortcut_conv, s.param_grads[0]);
        add_inplace(dx, s.input_grad);
    } else {
        add_inplace(dx, dsum);
    }
    return dx;
}

template <typename T>
void ResidualBlock<T>::update_running_stats(ParamStore<T>& store, const BlockTape<T>& tape, double momentum) const {
    update_bn(store, bn1, tape.bn1, momentum);
    update_bn(store, bn2, tape.bn2, momentum);
    if (shortcut_bn) update_bn(store, *shortcut_bn, tape.shortcut_bn, momentum);
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(const NetworkConfig& config) : config_(config) {
    config_.validate();
    const auto& e = config_.encoder_channels;
    const auto& d = config_.decoder_channels;
    const auto u = [](int v) { return static_cast<std::size_t>(v); };
    const bool fuse = config_.decoder_skip_fusion;

    std::size_t in = u(config_.in_channels);
    for (std::size_t i = 0; i < 3; ++i) {
        encoders_[i] = ResidualBlock<T>::create(store_, "enc" + std::to_string(i + 1), in, u(e[i]));
        in = u(e[i]);
    }
    bridge_ = ResidualBlock<T>::create(store_, "bridge", in, u(config_.bridge_channels));
    in = u(config_.bridge_channels);
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t skip = fuse ? u(e[2 - i]) : 0;
        decoders_[i] = ResidualBlock<T>::create(store_, "dec" + std::to_string(i + 1), in + skip, u(d[i]));
        in = u(d[i]);
    }
    const std::size_t head_in = u(d[2]) + u(e[0]) + u(e[1]) + u(e[2]);
    head_weight_ = store_.add_parameter("head.weight", BasicTensor<T>({1, head_in, 1, 1}));
    head_bias_ = store_.add_parameter("head.bias", BasicTensor<T>({1}));
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
    for (const auto& b : encoders_) b.initialize(store_, rng);
    bridge_.initialize(store_, rng);
    for (const auto& b : decoders_) b.initialize(store_, rng);
    he_init(store_[head_weight_].value, rng);
    store_[head_bias_].value.fill(T(0));
}

template <typename T>
void Network<T>::check_input(const BasicTensor<T>& x, bool train) const {
    if (x.rank() != 4 || x.channels() != static_cast<std::size_t>(config_.in_channels)) {
        throw ShapeError("shape-mismatch: network expects N x " + std::to_string(config_.in_channels) +
                         " x S x S input, got " + shape_to_string(x.shape()));
    }
    if (x.height() % 8 != 0 || x.width() % 8 != 0) {
        throw ShapeError("invalid-shape: spatial size must be divisible by 8, got " + shape_to_string(x.shape()));
    }
    const auto s = static_cast<std::size_t>(config_.image_size);
    if (train && (x.height() != s || x.width() != s)) {
        throw ShapeError("invalid-shape: train-mode input must be " + std::to_string(s) + "x" + std::to_string(s) +
                         ", got " + shape_to_string(x.shape()));
    }
}

template <typename T>
BasicTensor<T> Network<T>::run(const BasicTensor<T>& x, bool batch_stats, Tape* tape, StageShapes* shapes) const {
    const double eps = config_.bn_eps;
    const bool fuse = config_.decoder_skip_fusion;

    std::array<BasicTensor<T>, 3> skips;
    BasicTensor<T> h = x;
    for (std::size_t i = 0; i < 3; ++i) {
        skips[i] = encoders_[i].forward(store_, h, batch_stats, eps, tape ? &tape->encoders[i] : nullptr);
        if (shapes) shapes->encoders[i] = skips[i].shape();
        h = nn::maxpool2x2(skips[i], tape ? &tape->pools[i] : nullptr);
    }
    h = bridge_.forward(store_, h, batch_stats, eps, tape ? &tape->bridge : nullptr);
    if (shapes) shapes->bridge = h.shape();

    for (std::size_t i = 0; i < 3; ++i) {
        h = nn::bilinear_upsample(h, 2, tape ? &tape->decoder_up[i] : nullptr);
        if (fuse) h = concat_channels<T>({&h, &skips[2 - i]});
        h = decoders_[i].forward(store_, h, batch_stats, eps, tape ? &tape->decoders[i] : nullptr);
        if (shapes) shapes->decoders[i] = h.shape();
    }

    const auto s2 = nn::bilinear_upsample(skips[1], 2, tape ? &tape->skip2_up : nullptr);
    const auto s3 = nn::bilinear_upsample(skips[2], 4, tape ? &tape->skip4_up : nullptr);
    const auto fused = concat_channels<T>({&h, &skips[0], &s2, &s3});
    if (shapes) shapes->head_input = fused.shape();

    auto logits = nn::conv2d(fused, store_[head_weight_].value, &store_[head_bias_].value, 0,
                             tape ? &tape->head : nullptr);
    auto out = nn::sigmoid(logits, tape ? &tape->sigmoid : nullptr);
    if (shapes) shapes->output = out.shape();
    return out;
}

template <typename T>
BasicTensor<T> Network<T>::forward(const BasicTensor<T>& x, Mode mode) {
    if (mode == Mode::kInfer) return infer(x);
    check_input(x, true);
    const bool batch_stats = !bn_frozen_;
    tape_.valid = false;
    auto y = run(x, batch_stats, &tape_, nullptr);
    tape_.valid = true;
    if (batch_stats) {
        const double m = config_.bn_momentum;
        for (std::size_t i = 0; i < 3; ++i) encoders_[i].update_running_stats(store_, tape_.encoders[i], m);
        bridge_.update_running_stats(store_, tape_.bridge, m);
        for (std::size_t i = 0; i < 3; ++i) decoders_[i].update_running_stats(store_, tape_.decoders[i], m);
    }
    return y;
}

template <typename T>
BasicTensor<T> Network<T>::infer(const BasicTensor<T>& x, StageShapes* shapes) const {
    check_input(x, false);
    return run(x, false, nullptr, shapes);
}

template <typename T>
void Network<T>::backward(const BasicTensor<T>& upstream) {
    if (!tape_.valid) throw InvalidArgument("Network::backward called without a preceding train-mode forward");
    const auto& e = config_.encoder_channels;
    const auto& d = config_.decoder_channels;
    const auto u = [](int v) { return static_cast<std::size_t>(v); };

    auto g = nn::sigmoid_backward(tape_.sigmoid, upstream).input_grad;
    auto head = nn::conv2d_backward(tape_.head, g);
    add_inplace(store_[head_weight_].grad, head.param_grads[0]);
    add_inplace(store_[head_bias_].grad, head.param_grads[1]);

    const std::size_t head_split[4] = {u(d[2]), u(e[0]), u(e[1]), u(e[2])};
    auto parts = split_channels(head.input_grad, std::span<const std::size_t>(head_split));
    std::array<BasicTensor<T>, 3> dskip = {
        std::move(parts[1]),
        nn::bilinear_upsample_backward(tape_.skip2_up, parts[2]).input_grad,
        nn::bilinear_upsample_backward(tape_.skip4_up, parts[3]).input_grad,
    };

    BasicTensor<T> dh = std::move(parts[0]);
    for (std::size_t k = 3; k-- > 0;) {
        dh = decoders_[k].backward(store_, tape_.decoders[k], dh);
        if (config_.decoder_skip_fusion) {
            const std::size_t prev = k == 0 ? u(config_.bridge_channels) : u(d[k - 1]);
            const std::size_t split[2] = {prev, u(e[2 - k])};
            auto dp = split_channels(dh, std::span<const std::size_t>(split));
            add_inplace(dskip[2 - k], dp[1]);
            dh = std::move(dp[0]);
        }
        dh = nn::bilinear_upsample_backward(tape_.decoder_up[k], dh).input_grad;
    }
    dh = bridge_.backward(store_, tape_.bridge, dh);
    for (std::size_t k = 3; k-- > 0;) {
        dh = nn::maxpool2x2_backward(tape_.pools[k], dh).input_grad;
        add_inplace(dh, dskip[k]);
        dh = encoders_[k].backward(store_, tape_.encoders[k], dh);
    }
}

std::size_t param_count(const NetworkConfig& config) {
    return Network<float>(config).params().trainable_count();
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template class Network<float>;
template class Network<double>;

}  // namespace rupnet
