#include "rupnet/nn_ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace rupnet::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;

// Upper bound on im2col tile elements; keeps the column buffer cache-sized at large resolutions.
constexpr std::size_t kMaxTileElements = std::size_t{1} << 20;

template <typename T>
void require_rank4(const BasicTensor<T>& t, const char* op) {
    if (t.rank() != 4) {
        throw ShapeError(std::string(op) + ": expected N x C x H x W tensor, got " + shape_to_string(t.shape()));
    }
}

void require_same_shape(const Shape& expected, const Shape& got, const char* op) {
    if (expected != got) {
        throw ShapeError(std::string("shape-mismatch: ") + op + " upstream " + shape_to_string(got) + ", expected " +
                         shape_to_string(expected));
    }
}

std::size_t tile_rows(std::size_t patch, std::size_t height, std::size_t width) {
    const std::size_t rows = kMaxTileElements / std::max<std::size_t>(1, patch * width);
    return std::clamp<std::size_t>(rows, 1, height);
}

// Unfold rows [r0, r0 + rows) of a Cin x H x W image into a (Cin*9) x (rows*W) matrix for a 3x3 kernel.
template <typename T>
void im2col3x3(const T* x, std::size_t cin, std::size_t height, std::size_t width, std::size_t r0, std::size_t rows,
               T* cols) {
    const std::size_t row_len = rows * width;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        const T* xc = x + ci * height * width;
        for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
                T* dst = cols + ((ci * 3 + u) * 3 + v) * row_len;
                for (std::size_t i = 0; i < rows; ++i) {
                    T* d = dst + i * width;
                    const long xi = static_cast<long>(r0 + i) + u - 1;
                    if (xi < 0 || xi >= static_cast<long>(height)) {
                        std::fill(d, d + width, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<std::size_t>(xi) * width;
                    if (v == 0) {
                        d[0] = T(0);
                        std::memcpy(d + 1, src, (width - 1) * sizeof(T));
                    } else if (v == 1) {
                        std::memcpy(d, src, width * sizeof(T));
                    } else {
                        std::memcpy(d, src + 1, (width - 1) * sizeof(T));
                        d[width - 1] = T(0);
                    }
                }
            }
        }
    }
}

// Adjoint of im2col3x3: scatter-add columns back into the image gradient.
template <typename T>
void col2im3x3(const T* cols, std::size_t cin, std::size_t height, std::size_t width, std::size_t r0,
               std::size_t rows, T* dx) {
    const std::size_t row_len = rows * width;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        T* dxc = dx + ci * height * width;
        for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
                const T* src = cols + ((ci * 3 + u) * 3 + v) * row_len;
                for (std::size_t i = 0; i < rows; ++i) {
                    const long xi = static_cast<long>(r0 + i) + u - 1;
                    if (xi < 0 || xi >= static_cast<long>(height)) continue;
                    const T* s = src + i * width;
                    T* d = dxc + static_cast<std::size_t>(xi) * width;
                    if (v == 0) {
                        for (std::size_t j = 1; j < width; ++j) d[j - 1] += s[j];
                    } else if (v == 1) {
                        for (std::size_t j = 0; j < width; ++j) d[j] += s[j];
                    } else {
                        for (std::size_t j = 0; j + 1 < width; ++j) d[j + 1] += s[j];
                    }
                }
            }
        }
    }
}

struct AxisTable {
    std::vector<std::size_t> i0, i1;
    std::vector<double> w1;
};

AxisTable upsample_axis(std::size_t n, int factor) {
    const std::size_t out = n * static_cast<std::size_t>(factor);
    AxisTable t;
    t.i0.resize(out);
    t.i1.resize(out);
    t.w1.resize(out);
    for (std::size_t d = 0; d < out; ++d) {
        double s = (static_cast<double>(d) + 0.5) / factor - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(n - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(s));
        t.i0[d] = i0;
        t.i1[d] = std::min(i0 + 1, n - 1);
        t.w1[d] = s - static_cast<double>(i0);
    }
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const std::type_identity_t<BasicTensor<T>>* bias, int pad,
                      ConvRecord<T>* record) {
    require_rank4(x, "conv2d");
    require_rank4(w, "conv2d weight");
    const std::size_t k = w.dim(2);
    if (w.dim(3) != k || (k != 1 && k != 3)) {
        throw InvalidArgument("conv2d: unsupported kernel " + shape_to_string(w.shape()) + " (K must be 1 or 3)");
    }
    if (pad != static_cast<int>(k / 2)) {
        throw InvalidArgument("conv2d: pad must be " + std::to_string(k / 2) + " for K=" + std::to_string(k));
    }
    const std::size_t n_batch = x.batch(), cin = x.channels(), height = x.height(), width = x.width();
    const std::size_t cout = w.dim(0);
    if (w.dim(1) != cin) {
        throw ShapeError("shape-mismatch: conv2d input has " + std::to_string(cin) + " channels, weight expects " +
                         std::to_string(w.dim(1)));
    }
    if (bias && bias->size() != cout) {
        throw ShapeError("shape-mismatch: conv2d bias has " + std::to_string(bias->size()) + " values, expected " +
                         std::to_string(cout));
    }

    BasicTensor<T> y({n_batch, cout, height, width});
    const std::size_t plane = height * width;
    const std::size_t patch = cin * k * k;
    ConstMatMap<T> wm(w.data(), cout, patch);

    if (k == 1) {
        for (std::size_t n = 0; n < n_batch; ++n) {
            ConstMatMap<T> xm(x.data() + n * cin * plane, cin, plane);
            MatMap<T> ym(y.data() + n * cout * plane, cout, plane);
            ym.noalias() = wm * xm;
        }
    } else {
        const std::size_t rows = tile_rows(patch, height, width);
        std::vector<T> cols(patch * rows * width);
        for (std::size_t n = 0; n < n_batch; ++n) {
            const T* xn = x.data() + n * cin * plane;
            T* yn = y.data() + n * cout * plane;
            for (std::size_t r0 = 0; r0 < height; r0 += rows) {
                const std::size_t tr = std::min(rows, height - r0);
                im2col3x3(xn, cin, height, width, r0, tr, cols.data());
                ConstMatMap<T> cm(cols.data(), patch, tr * width);
                StridedMap<T> ym(yn + r0 * width, cout, tr * width, Eigen::OuterStride<>(plane));
                ym.noalias() = wm * cm;
            }
        }
    }

    if (bias) {
        for (std::size_t n = 0; n < n_batch; ++n) {
            for (std::size_t co = 0; co < cout; ++co) {
                T* p = y.data() + (n * cout + co) * plane;
                const T b = (*bias)[co];
                for (std::size_t i = 0; i < plane; ++i) p[i] += b;
            }
        }
    }

    if (record) {
        record->input = x;
        record->weight = w;
        record->has_bias = bias != nullptr;
    }
    return y;
}

template <typename T>
BackwardResult<T> conv2d_backward(const ConvRecord<T>& record, const BasicTensor<T>& upstream) {
    const auto& x = record.input;
    const auto& w = record.weight;
    const std::size_t n_batch = x.batch(), cin = x.channels(), height = x.height(), width = x.width();
    const std::size_t cout = w.dim(0), k = w.dim(2);
    require_same_shape({n_batch, cout, height, width}, upstream.shape(), "conv2d backward");

    const std::size_t plane = height * width;
    const std::size_t patch = cin * k * k;
    BackwardResult<T> result;
    result.input_grad = BasicTensor<T>(x.shape());
    BasicTensor<T> dw(w.shape());

    ConstMatMap<T> wm(w.data(), cout, patch);
    MatMap<T> dwm(dw.data(), cout, patch);

    if (k == 1) {
        for (std::size_t n = 0; n < n_batch; ++n) {
            ConstMatMap<T> xm(x.data() + n * cin * plane, cin, plane);
            ConstMatMap<T> dym(upstream.data() + n * cout * plane, cout, plane);
            MatMap<T> dxm(result.input_grad.data() + n * cin * plane, cin, plane);
            dwm.noalias() += dym * xm.transpose();
            dxm.noalias() = wm.transpose() * dym;
        }
    } else {
        const std::size_t rows = tile_rows(patch, height, width);
        std::vector<T> cols(patch * rows * width);
        std::vector<T> dcols(patch * rows * width);
        for (std::size_t n = 0; n < n_batch; ++n) {
            const T* xn = x.data() + n * cin * plane;
            const T* dyn = upstream.data() + n * cout * plane;
            T* dxn = result.input_grad.data() + n * cin * plane;
            for (std::size_t r0 = 0; r0 < height; r0 += rows) {
                const std::size_t tr = std::min(rows, height - r0);
                im2col3x3(xn, cin, height, width, r0, tr, cols.data());
                ConstMatMap<T> cm(cols.data(), patch, tr * width);
                ConstStridedMap<T> dym(dyn + r0 * width, cout, tr * width, Eigen::OuterStride<>(plane));
                dwm.noalias() += dym * cm.transpose();
                MatMap<T> dcm(dcols.data(), patch, tr * width);
                dcm.noalias() = wm.transpose() * dym;
                col2im3x3(dcols.data(), cin, height, width, r0, tr, dxn);
            }
        }
    }
    result.param_grads.push_back(std::move(dw));

    if (record.has_bias) {
        BasicTensor<T> db({cout});
        for (std::size_t co = 0; co < cout; ++co) {
            double acc = 0.0;
            for (std::size_t n = 0; n < n_batch; ++n) {
                const T* p = upstream.data() + (n * cout + co) * plane;
                for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            }
            db[co] = static_cast<T>(acc);
        }
        result.param_grads.push_back(std::move(db));
    }
    return result;
}

// ---------------------------------------------------------------------------
// batchnorm
// ---------------------------------------------------------------------------

template <typename T>
BatchNormState<T>::BatchNormState(std::size_t channels, double momentum_, double eps_)
    : gamma({channels}, T(1)),
      beta({channels}, T(0)),
      running_mean({channels}, T(0)),
      running_var({channels}, T(1)),
      momentum(momentum_),
      eps(eps_) {}

template <typename T>
BatchNormParams<T> BatchNormState<T>::params() const {
    return {gamma.values(), beta.values(), running_mean.values(), running_var.values(), eps};
}

template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& x, const BatchNormParams<T>& p, bool use_batch_stats,
                                 BatchNormRecord<T>* record) {
    require_rank4(x, "batchnorm");
    const std::size_t n_batch = x.batch(), channels = x.channels(), plane = x.plane();
    if (p.gamma.size() != channels || p.beta.size() != channels || p.running_mean.size() != channels ||
        p.running_var.size() != channels) {
        throw ShapeError("shape-mismatch: batchnorm state does not match " + std::to_string(channels) + " channels");
    }
    const double count = static_cast<double>(n_batch * plane);

    std::vector<T> mean(channels), var(channels), inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        if (use_batch_stats) {
            double sum = 0.0;
            for (std::size_t n = 0; n < n_batch; ++n) {
                const T* src = x.data() + (n * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) sum += src[i];
            }
            const double mu = sum / count;
            double sq = 0.0;
            for (std::size_t n = 0; n < n_batch; ++n) {
                const T* src = x.data() + (n * channels + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = src[i] - mu;
                    sq += d * d;
                }
            }
            mean[c] = static_cast<T>(mu);
            var[c] = static_cast<T>(sq / count);
        } else {
            mean[c] = p.running_mean[c];
            var[c] = p.running_var[c];
        }
        inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[c]) + p.eps));
    }

    BasicTensor<T> xhat(x.shape());
    BasicTensor<T> y(x.shape());
    for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t off = (n * channels + c) * plane;
            const T mu = mean[c], is = inv_std[c], g = p.gamma[c], b = p.beta[c];
            for (std::size_t i = 0; i < plane; ++i) {
                const T h = (x[off + i] - mu) * is;
                xhat[off + i] = h;
                y[off + i] = g * h + b;
            }
        }
    }

    if (record) {
        record->xhat = std::move(xhat);
        record->gamma.assign(p.gamma.begin(), p.gamma.end());
        record->inv_std = std::move(inv_std);
        record->used_batch_stats = use_batch_stats;
        if (use_batch_stats) {
            record->batch_mean = std::move(mean);
            record->batch_var = std::move(var);
        } else {
            record->batch_mean.clear();
            record->batch_var.clear();
        }
    }
    return y;
}

template <typename T>
void update_running_stats(std::span<T> running_mean, std::span<T> running_var, const BatchNormRecord<T>& record,
                          double momentum) {
    if (!record.used_batch_stats) return;
    for (std::size_t c = 0; c < running_mean.size(); ++c) {
        running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * record.batch_mean[c]);
        running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * record.batch_var[c]);
    }
}

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode, BatchNormRecord<T>* record) {
    BatchNormRecord<T> local;
    BatchNormRecord<T>* rec = record ? record : &local;
    const bool train = mode == Mode::kTrain;
    auto y = batchnorm_forward(x, state.params(), train, rec);
    if (train) update_running_stats(state.running_mean.values(), state.running_var.values(), *rec, state.momentum);
    return y;
}

template <typename T>
BackwardResult<T> batchnorm_backward(const BatchNormRecord<T>& record, const BasicTensor<T>& upstream) {
    const auto& xhat = record.xhat;
    require_same_shape(xhat.shape(), upstream.shape(), "batchnorm backward");
    const std::size_t n_batch = xhat.batch(), channels = xhat.channels(), plane = xhat.plane();
    const double count = static_cast<double>(n_batch * plane);

    BackwardResult<T> result;
    result.input_grad = BasicTensor<T>(xhat.shape());
    BasicTensor<T> dgamma({channels}), dbeta({channels});
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < n_batch; ++n) {
            const std::size_t off = (n * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += upstream[off + i];
                sum_dy_xhat += static_cast<double>(upstream[off + i]) * xhat[off + i];
            }
        }
        dgamma[c] = static_cast<T>(sum_dy_xhat);
        dbeta[c] = static_cast<T>(sum_dy);
        const double scale = static_cast<double>(record.gamma[c]) * record.inv_std[c];
        for (std::size_t n = 0; n < n_batch; ++n) {
            const std::size_t off = (n * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                double g = upstream[off + i];
                if (record.used_batch_stats) g -= (sum_dy + xhat[off + i] * sum_dy_xhat) / count;
                result.input_grad[off + i] = static_cast<T>(scale * g);
            }
        }
    }
    result.param_grads.push_back(std::move(dgamma));
    result.param_grads.push_back(std::move(dbeta));
    return result;
}

// ---------------------------------------------------------------------------
// relu / sigmoid
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x, ReluRecord<T>* record) {
    BasicTensor<T> y = x;
    for (auto& v : y.values()) v = v > T(0) ? v : T(0);
    if (record) record->output = y;
    return y;
}

template <typename T>
BackwardResult<T> relu_backward(const ReluRecord<T>& record, const BasicTensor<T>& upstream) {
    require_same_shape(record.output.shape(), upstream.shape(), "relu backward");
    BackwardResult<T> result;
    result.input_grad = upstream;
    auto g = result.input_grad.values();
    auto y = record.output.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(y[i] > T(0))) g[i] = T(0);
    }
    return result;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x, SigmoidRecord<T>* record) {
    constexpr T lo = std::numeric_limits<T>::min();
    constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
    BasicTensor<T> y = x;
    for (auto& v : y.values()) {
        T s;
        if (v >= T(0)) {
            s = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            s = e / (T(1) + e);
        }
        v = std::clamp(s, lo, hi);
    }
    if (record) record->output = y;
    return y;
}

template <typename T>
BackwardResult<T> sigmoid_backward(const SigmoidRecord<T>& record, const BasicTensor<T>& upstream) {
    require_same_shape(record.output.shape(), upstream.shape(), "sigmoid backward");
    BackwardResult<T> result;
    result.input_grad = upstream;
    auto g = result.input_grad.values();
    auto y = record.output.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (T(1) - y[i]);
    return result;
}

// ---------------------------------------------------------------------------
// maxpool2x2
// ---------------------------------------------------------------------------

template <typename T>
MaxPoolResult<T> maxpool2x2(const BasicTensor<T>& x) {
    require_rank4(x, "maxpool2x2");
    const std::size_t n_batch = x.batch(), channels = x.channels(), height = x.height(), width = x.width();
    if (height % 2 != 0 || width % 2 != 0) {
        throw ShapeError("invalid-shape: maxpool2x2 needs even H and W, got " + shape_to_string(x.shape()));
    }
    const std::size_t oh = height / 2, ow = width / 2;
    MaxPoolResult<T> r{BasicTensor<T>({n_batch, channels, oh, ow}), {}};
    r.argmax.resize(r.output.size());
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < n_batch * channels; ++nc) {
        const std::size_t base = nc * height * width;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j, ++o) {
                std::size_t best = base + (2 * i) * width + 2 * j;
                T best_v = x[best];
                const std::size_t cand[3] = {best + 1, best + width, best + width + 1};
                for (auto c : cand) {
                    if (x[c] > best_v) {
                        best_v = x[c];
                        best = c;
                    }
                }
                r.output[o] = best_v;
                r.argmax[o] = best;
            }
        }
    }
    return r;
}

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& x, MaxPoolRecord<T>* record) {
    auto r = maxpool2x2(x);
    if (record) {
        record->input_shape = x.shape();
        record->argmax = std::move(r.argmax);
    }
    return std::move(r.output);
}

template <typename T>
BackwardResult<T> maxpool2x2_backward(const MaxPoolRecord<T>& record, const BasicTensor<T>& upstream) {
    const auto& s = record.input_shape;
    require_same_shape({s[0], s[1], s[2] / 2, s[3] / 2}, upstream.shape(), "maxpool2x2 backward");
    BackwardResult<T> result;
    result.input_grad = BasicTensor<T>(s);
    for (std::size_t o = 0; o < upstream.size(); ++o) result.input_grad[record.argmax[o]] += upstream[o];
    return result;
}

// ---------------------------------------------------------------------------
// bilinear upsample
// ---------------------------------------------------------------------------

template <typename T>
BasicTensor<T> bilinear_upsample(const BasicTensor<T>& x, int factor, UpsampleRecord<T>* record) {
    require_rank4(x, "bilinear_upsample");
    if (factor != 2 && factor != 4) {
        throw InvalidArgument("bilinear_upsample: factor must be 2 or 4, got " + std::to_string(factor));
    }
    const std::size_t height = x.height(), width = x.width();
    const std::size_t oh = height * factor, ow = width * factor;
    const AxisTable ty = upsample_axis(height, factor);
    const AxisTable tx = upsample_axis(width, factor);
    BasicTensor<T> y({x.batch(), x.channels(), oh, ow});
    for (std::size_t nc = 0; nc < x.batch() * x.channels(); ++nc) {
        const T* src = x.data() + nc * height * width;
        T* dst = y.data() + nc * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
            const T wy1 = static_cast<T>(ty.w1[i]), wy0 = T(1) - wy1;
            const T* r0 = src + ty.i0[i] * width;
            const T* r1 = src + ty.i1[i] * width;
            for (std::size_t j = 0; j < ow; ++j) {
                const T wx1 = static_cast<T>(tx.w1[j]), wx0 = T(1) - wx1;
                const std::size_t a = tx.i0[j], b = tx.i1[j];
                dst[i * ow + j] = wy0 * (wx0 * r0[a] + wx1 * r0[b]) + wy1 * (wx0 * r1[a] + wx1 * r1[b]);
            }
        }
    }
    if (record) {
        record->input_shape = x.shape();
        record->factor = factor;
    }
    return y;
}

template <typename T>
BackwardResult<T> bilinear_upsample_backward(const UpsampleRecord<T>& record, const BasicTensor<T>& upstream) {
    const auto& s = record.input_shape;
    const std::size_t f = static_cast<std::size_t>(record.factor);
    const std::size_t height = s[2], width = s[3], oh = height * f, ow = width * f;
    require_same_shape({s[0], s[1], oh, ow}, upstream.shape(), "bilinear_upsample backward");
    const AxisTable ty = upsample_axis(height, record.factor);
    const AxisTable tx = upsample_axis(width, record.factor);
    BackwardResult<T> result;
    result.input_grad = BasicTensor<T>(s);
    for (std::size_t nc = 0; nc < s[0] * s[1]; ++nc) {
        const T* g = upstream.data() + nc * oh * ow;
        T* dst = result.input_grad.data() + nc * height * width;
        for (std::size_t i = 0; i < oh; ++i) {
            const T wy1 = static_cast<T>(ty.w1[i]), wy0 = T(1) - wy1;
            T* r0 = dst + ty.i0[i] * width;
            T* r1 = dst + ty.i1[i] * width;
            for (std::size_t j = 0; j < ow; ++j) {
                const T wx1 = static_cast<T>(tx.w1[j]), wx0 = T(1) - wx1;
                const std::size_t a = tx.i0[j], b = tx.i1[j];
                const T v = g[i * ow + j];
                r0[a] += wy0 * wx0 * v;
                r0[b] += wy0 * wx1 * v;
                r1[a] += wy1 * wx0 * v;
                r1[b] += wy1 * wx1 * v;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

template <typename T>
BackwardResult<T> backward(const OpRecord<T>& record, const BasicTensor<T>& upstream) {
    return std::visit(
        [&](const auto& r) -> BackwardResult<T> {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, ConvRecord<T>>) return conv2d_backward(r, upstream);
            else if constexpr (std::is_same_v<R, BatchNormRecord<T>>) return batchnorm_backward(r, upstream);
            else if constexpr (std::is_same_v<R, ReluRecord<T>>) return relu_backward(r, upstream);
            else if constexpr (std::is_same_v<R, MaxPoolRecord<T>>) return maxpool2x2_backward(r, upstream);
            else if constexpr (std::is_same_v<R, UpsampleRecord<T>>) return bilinear_upsample_backward(r, upstream);
            else return sigmoid_backward(r, upstream);
        },
        record);
}

#define RUPNET_INSTANTIATE(T)                                                                                    \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>*, int,      \
                                   ConvRecord<T>*);                                                              \
    template BackwardResult<T> conv2d_backward(const ConvRecord<T>&, const BasicTensor<T>&);                     \
    template struct BatchNormState<T>;                                                                           \
    template BasicTensor<T> batchnorm_forward(const BasicTensor<T>&, const BatchNormParams<T>&, bool,             \
                                              BatchNormRecord<T>*);                                              \
    template void update_running_stats(std::span<T>, std::span<T>, const BatchNormRecord<T>&, double);           \
    template BasicTensor<T> batchnorm(const BasicTensor<T>&, BatchNormState<T>&, Mode, BatchNormRecord<T>*);      \
    template BackwardResult<T> batchnorm_backward(const BatchNormRecord<T>&, const BasicTensor<T>&);             \
    template BasicTensor<T> relu(const BasicTensor<T>&, ReluRecord<T>*);                                         \
    template BackwardResult<T> relu_backward(const ReluRecord<T>&, const BasicTensor<T>&);                       \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&, SigmoidRecord<T>*);                                   \
    template BackwardResult<T> sigmoid_backward(const SigmoidRecord<T>&, const BasicTensor<T>&);                 \
    template MaxPoolResult<T> maxpool2x2(const BasicTensor<T>&);                                                 \
    template BasicTensor<T> maxpool2x2(const BasicTensor<T>&, MaxPoolRecord<T>*);                                \
    template BackwardResult<T> maxpool2x2_backward(const MaxPoolRecord<T>&, const BasicTensor<T>&);              \
    template BasicTensor<T> bilinear_upsample(const BasicTensor<T>&, int, UpsampleRecord<T>*);                   \
    template BackwardResult<T> bilinear_upsample_backward(const UpsampleRecord<T>&, const BasicTensor<T>&);      \
    template BackwardResult<T> backward(const OpRecord<T>&, const BasicTensor<T>&);

RUPNET_INSTANTIATE(float)
RUPNET_INSTANTIATE(double)

#undef RUPNET_INSTANTIATE

}  // namespace rupnet::nn
