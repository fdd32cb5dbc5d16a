#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "rupnet/bench.hpp"
#include "rupnet/checkpoint.hpp"
#include "rupnet/error.hpp"
#include "rupnet/gradcheck.hpp"
#include "rupnet/losses.hpp"
#include "rupnet/metrics.hpp"
#include "rupnet/model.hpp"
#include "rupnet/nn_ops.hpp"
#include "rupnet/optim.hpp"
#include "rupnet/synthetic.hpp"
#include "rupnet/trainer.hpp"

namespace py = pybind11;
using namespace rupnet;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    Tensor t(shape);
    std::copy_n(a.data(), t.size(), t.data());
    return t;
}

Array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    Array out(shape);
    std::copy_n(t.data(), t.size(), out.mutable_data());
    return out;
}

py::dict metrics_dict(const eval::ImageMetrics& m) {
    py::dict d;
    d["dsc"] = m.dsc;
    d["iou"] = m.iou;
    d["recall"] = m.recall;
    d["precision"] = m.precision;
    d["accuracy"] = m.accuracy;
    d["f2"] = m.f2;
    return d;
}

// Trainer state kept alongside a network so Python can step it.
struct Model {
    Network<float> net;
    train::AdamState adam;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "RUPNet polyp segmentation core";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", error);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    py::register_exception<NumericError>(m, "NumericError", error);
    py::register_exception<IoError>(m, "IoError", error);
    py::register_exception<DataError>(m, "DataError", error);
    py::register_exception<CorruptCheckpoint>(m, "CorruptCheckpoint", error);
    py::register_exception<DecodeError>(m, "DecodeError", error);

    py::class_<NetworkConfig>(m, "NetworkConfig")
        .def(py::init<>())
        .def_readwrite("in_channels", &NetworkConfig::in_channels)
        .def_readwrite("encoder_channels", &NetworkConfig::encoder_channels)
        .def_readwrite("bridge_channels", &NetworkConfig::bridge_channels)
        .def_readwrite("decoder_channels", &NetworkConfig::decoder_channels)
        .def_readwrite("image_size", &NetworkConfig::image_size)
        .def_readwrite("decoder_skip_fusion", &NetworkConfig::decoder_skip_fusion)
        .def_readwrite("bn_eps", &NetworkConfig::bn_eps)
        .def_readwrite("bn_momentum", &NetworkConfig::bn_momentum)
        .def("validate", &NetworkConfig::validate)
        .def("fingerprint", &NetworkConfig::fingerprint)
        .def("to_json", [](const NetworkConfig& c) { return c.to_json().dump(); })
        .def_static("from_json", [](const std::string& s) { return NetworkConfig::from_json(nlohmann::json::parse(s)); })
        .def("__eq__", [](const NetworkConfig& a, const NetworkConfig& b) { return a == b; });

    m.def("param_count", &param_count, py::arg("config"));

    py::class_<Model>(m, "Network")
        .def(py::init([](const NetworkConfig& config, std::uint64_t seed) {
                 Rng rng = Rng(seed).derive("init");
                 return Model{build_network<float>(config, rng), {}};
             }),
             py::arg("config") = NetworkConfig{}, py::arg("seed") = 0)
        .def_property_readonly("config", [](const Model& s) { return s.net.config(); })
        .def_property_readonly("param_count", [](const Model& s) { return s.net.params().trainable_count(); })
        .def("param_names",
             [](const Model& s) {
                 std::vector<std::string> names;
                 for (const auto& e : s.net.params().entries()) names.push_back(e.name);
                 return names;
             })
        .def(
            "infer",
            [](const Model& s, const Array& x) {
                const Tensor in = to_tensor(x);
                Tensor out;
                {
                    py::gil_scoped_release release;
                    out = s.net.infer(in);
                }
                return to_array(out);
            },
            py::arg("images"), "N x C x H x W float32 -> N x 1 x H x W probabilities")
        .def(
            "train_step",
            [](Model& s, const Array& images, const Array& masks, double lr, bool augment_off) {
                train::TrainConfig cfg;
                cfg.learning_rate = lr;
                if (augment_off) cfg.augmentation.enabled = false;
                return train::train_step(s.net, to_tensor(images), to_tensor(masks), cfg, s.adam).loss;
            },
            py::arg("images"), py::arg("masks"), py::arg("lr") = 1e-4, py::arg("augment_off") = true)
        .def("set_bn_frozen", [](Model& s, bool f) { s.net.set_bn_frozen(f); })
        .def("save", [](const Model& s, const std::filesystem::path& p) { save_checkpoint(s.net, p); })
        .def_static("load", [](const std::filesystem::path& p) { return Model{load_checkpoint(p), {}}; })
        .def("to_bytes",
             [](const Model& s) {
                 const auto b = serialize_checkpoint(s.net);
                 return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
             })
        .def_static("from_bytes", [](const py::bytes& raw) {
            const std::string s = raw;
            return Model{deserialize_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end())), {}};
        });

    auto ops = m.def_submodule("ops", "Single-layer forward operations");
    ops.def(
        "conv2d",
        [](const Array& x, const Array& w, std::optional<Array> bias) {
            const Tensor wt = to_tensor(w);
            std::optional<Tensor> b;
            if (bias) b = to_tensor(*bias);
            return to_array(nn::conv2d(to_tensor(x), wt, b ? &*b : nullptr, static_cast<int>(wt.dim(2) / 2)));
        },
        py::arg("x"), py::arg("weight"), py::arg("bias") = py::none());
    ops.def("relu", [](const Array& x) { return to_array(nn::relu(to_tensor(x))); });
    ops.def("sigmoid", [](const Array& x) { return to_array(nn::sigmoid(to_tensor(x))); });
    ops.def("maxpool2x2", [](const Array& x) { return to_array(nn::maxpool2x2(to_tensor(x)).output); });
    ops.def("bilinear_upsample", [](const Array& x, int factor) { return to_array(nn::bilinear_upsample(to_tensor(x), factor)); },
            py::arg("x"), py::arg("factor"));
    ops.def(
        "batchnorm_infer",
        [](const Array& x, const Array& gamma, const Array& beta, const Array& mean, const Array& var, double eps) {
            nn::BatchNormState<float> st(static_cast<std::size_t>(gamma.size()), 0.1, eps);
            st.gamma = to_tensor(gamma);
            st.beta = to_tensor(beta);
            st.running_mean = to_tensor(mean);
            st.running_var = to_tensor(var);
            return to_array(nn::batchnorm(to_tensor(x), st, nn::Mode::kInfer));
        },
        py::arg("x"), py::arg("gamma"), py::arg("beta"), py::arg("running_mean"), py::arg("running_var"),
        py::arg("eps") = 1e-5);

    m.def("bce_loss", [](const Array& p, const Array& t) { return train::bce_loss(to_tensor(p), to_tensor(t)).value; });
    m.def(
        "dice_loss", [](const Array& p, const Array& t, double smooth) { return train::dice_loss(to_tensor(p), to_tensor(t), smooth).value; },
        py::arg("pred"), py::arg("target"), py::arg("smooth") = 1.0);
    m.def("combined_loss",
          [](const Array& p, const Array& t) { return train::combined_loss(to_tensor(p), to_tensor(t), {}).value; });

    m.def(
        "image_metrics",
        [](const Array& pred, const Array& gt, double threshold) {
            return metrics_dict(eval::metrics_from_counts(eval::confusion(to_tensor(pred), to_tensor(gt), threshold)));
        },
        py::arg("pred"), py::arg("gt"), py::arg("threshold") = 0.5);

    m.def(
        "synthetic",
        [](int count, int size, std::uint64_t seed) {
            data::SynthConfig cfg;
            cfg.count = count;
            cfg.size = size;
            cfg.seed = seed;
            const auto ds = data::generate_synthetic(cfg);
            const auto n = static_cast<py::ssize_t>(ds.count()), s = static_cast<py::ssize_t>(size);
            Array images({n, py::ssize_t{3}, s, s}), masks({n, py::ssize_t{1}, s, s});
            std::vector<std::string> ids;
            for (py::ssize_t i = 0; i < n; ++i) {
                const auto& smp = ds.samples[static_cast<std::size_t>(i)];
                std::copy_n(smp.image.data(), smp.image.size(), images.mutable_data() + i * 3 * s * s);
                std::copy_n(smp.mask.data(), smp.mask.size(), masks.mutable_data() + i * s * s);
                ids.push_back(smp.id);
            }
            return py::make_tuple(images, masks, ids);
        },
        py::arg("count"), py::arg("size") = 64, py::arg("seed") = 0);

    m.def(
        "gradcheck",
        [](std::uint64_t seed) {
            gradcheck::Options o;
            o.seed = seed;
            py::list out;
            for (const auto& r : gradcheck::run_gradcheck(o)) {
                py::dict d;
                d["layer"] = r.layer;
                d["max_rel_error"] = r.max_rel_error;
                d["checked"] = r.checked;
                d["passed"] = r.passed;
                out.append(d);
            }
            return out;
        },
        py::arg("seed") = 0);

    m.def(
        "benchmark_fps",
        [](const Model& s, int size, int warmup, int iters) {
            const auto f = eval::benchmark_fps(s.net, size, warmup, iters);
            py::dict d;
            d["fps"] = f.fps;
            d["per_frame_ms_mean"] = f.per_frame_ms_mean;
            d["per_frame_ms_std"] = f.per_frame_ms_std;
            return d;
        },
        py::arg("network"), py::arg("size") = 512, py::arg("warmup") = 5, py::arg("iters") = 100);
}
