#include "rupnet/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "rupnet/error.hpp"

namespace rupnet {

using nlohmann::json;

namespace {

struct Field {
    std::function<json(const RunConfig&)> get;
    std::function<void(RunConfig&, const json&)> set;
};

template <typename V>
V typed(const json& j, const std::string& key) {
    try {
        if constexpr (std::is_same_v<V, bool>) {
            if (!j.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<V>) {
            if (!j.is_number_integer()) throw ConfigError("");
        } else if constexpr (std::is_floating_point_v<V>) {
            if (!j.is_number()) throw ConfigError("");
        }
        return j.get<V>();
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': unexpected value " + j.dump());
    }
}

template <typename V, typename Access>
Field field(const std::string& key, Access access) {
    return {[access](const RunConfig& c) { return json(access(const_cast<RunConfig&>(c))); },
            [access, key](RunConfig& c, const json& j) { access(c) = typed<V>(j, key); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> f;
        f["net.in_channels"] = field<int>("net.in_channels", [](RunConfig& c) -> auto& { return c.net.in_channels; });
        f["net.encoder_channels"] = field<std::array<int, 3>>(
            "net.encoder_channels", [](RunConfig& c) -> auto& { return c.net.encoder_channels; });
        f["net.bridge_channels"] =
            field<int>("net.bridge_channels", [](RunConfig& c) -> auto& { return c.net.bridge_channels; });
        f["net.decoder_channels"] = field<std::array<int, 3>>(
            "net.decoder_channels", [](RunConfig& c) -> auto& { return c.net.decoder_channels; });
        f["net.image_size"] = field<int>("net.image_size", [](RunConfig& c) -> auto& { return c.net.image_size; });
        f["net.decoder_skip_fusion"] = field<bool>(
            "net.decoder_skip_fusion", [](RunConfig& c) -> auto& { return c.net.decoder_skip_fusion; });
        f["net.bn_eps"] = field<double>("net.bn_eps", [](RunConfig& c) -> auto& { return c.net.bn_eps; });
        f["net.bn_momentum"] =
            field<double>("net.bn_momentum", [](RunConfig& c) -> auto& { return c.net.bn_momentum; });

        f["train.lr"] = field<double>("train.lr", [](RunConfig& c) -> auto& { return c.train.learning_rate; });
        f["train.batch_size"] =
            field<int>("train.batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; });
        f["train.epochs"] = field<int>("train.epochs", [](RunConfig& c) -> auto& { return c.train.epochs; });
        f["train.freeze_bn"] = field<bool>("train.freeze_bn", [](RunConfig& c) -> auto& { return c.train.freeze_bn; });
        f["train.checkpoint_every"] =
            field<int>("train.checkpoint_every", [](RunConfig& c) -> auto& { return c.checkpoint_every; });
        f["train.loss.bce_weight"] =
            field<double>("train.loss.bce_weight", [](RunConfig& c) -> auto& { return c.train.loss.bce; });
        f["train.loss.dice_weight"] =
            field<double>("train.loss.dice_weight", [](RunConfig& c) -> auto& { return c.train.loss.dice; });
        f["train.loss.dice_smooth"] =
            field<double>("train.loss.dice_smooth", [](RunConfig& c) -> auto& { return c.train.loss.dice_smooth; });

        f["aug.enabled"] =
            field<bool>("aug.enabled", [](RunConfig& c) -> auto& { return c.train.augmentation.enabled; });
        f["aug.hflip_prob"] =
            field<double>("aug.hflip_prob", [](RunConfig& c) -> auto& { return c.train.augmentation.hflip_prob; });
        f["aug.vflip_prob"] =
            field<double>("aug.vflip_prob", [](RunConfig& c) -> auto& { return c.train.augmentation.vflip_prob; });
        f["aug.rotations"] = field<std::vector<int>>(
            "aug.rotations", [](RunConfig& c) -> auto& { return c.train.augmentation.rotations; });
        f["aug.brightness"] = field<std::array<double, 2>>(
            "aug.brightness", [](RunConfig& c) -> auto& { return c.train.augmentation.brightness; });

        f["data.root"] = field<std::string>("data.root", [](RunConfig& c) -> auto& { return c.data_root; });
        f["data.train_fraction"] =
            field<double>("data.train_fraction", [](RunConfig& c) -> auto& { return c.train_fraction; });
        f["data.synth_count"] = field<int>("data.synth_count", [](RunConfig& c) -> auto& { return c.synth_count; });

        f["eval.threshold"] = field<double>("eval.threshold", [](RunConfig& c) -> auto& { return c.eval_threshold; });
        f["eval.batch_size"] = field<int>("eval.batch_size", [](RunConfig& c) -> auto& { return c.eval_batch_size; });

        f["bench.size"] = field<int>("bench.size", [](RunConfig& c) -> auto& { return c.bench_size; });
        f["bench.warmup"] = field<int>("bench.warmup", [](RunConfig& c) -> auto& { return c.bench_warmup; });
        f["bench.iters"] = field<int>("bench.iters", [](RunConfig& c) -> auto& { return c.bench_iters; });

        f["seed"] = field<std::uint64_t>("seed", [](RunConfig& c) -> auto& { return c.seed; });
        f["run_dir"] = field<std::string>("run_dir", [](RunConfig& c) -> auto& { return c.run_dir; });
        return f;
    }();
    return table;
}

}  // namespace

void RunConfig::validate() const {
    net.validate();
    train.validate();
    if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("data.train_fraction must be in (0, 1)");
    if (synth_count < 2) throw ConfigError("data.synth_count must be >= 2");
    if (!(eval_threshold > 0.0 && eval_threshold <= 1.0)) throw ConfigError("eval.threshold must be in (0, 1]");
    if (eval_batch_size < 1) throw ConfigError("eval.batch_size must be >= 1");
    if (bench_size < 8 || bench_size % 8 != 0) throw ConfigError("bench.size must be a positive multiple of 8");
    if (bench_warmup < 0 || bench_iters < 1) throw ConfigError("bench.warmup must be >= 0 and bench.iters >= 1");
    if (run_dir.empty()) throw ConfigError("run_dir must not be empty");
    if (train.seed != seed) throw ConfigError("train seed and global seed disagree");
}

json RunConfig::to_json() const {
    json j = json::object();
    for (const auto& [key, f] : fields()) j[key] = f.get(*this);
    return j;
}

void RunConfig::apply(const json& flat) {
    if (!flat.is_object()) throw ConfigError("run config must be a JSON object");
    for (const auto& [key, value] : flat.items()) {
        const auto it = fields().find(key);
        if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
        it->second.set(*this, value);
    }
    train.seed = seed;
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    apply(json{{key, value}});
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& [key, f] : fields()) out.push_back(key);
    return out;
}

RunConfig load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open config file: " + file.string());
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + file.string());
        cfg.apply(j);
    }
    for (const auto& o : overrides) cfg.apply_override(o);
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

}  // namespace rupnet
