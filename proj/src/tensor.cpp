#include "rupnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace rupnet {

std::string shape_to_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw ShapeError("invalid-shape: rank must be 1..4, got " + std::to_string(shape.size()));
    }
    for (auto d : shape) {
        if (d == 0) throw ShapeError("invalid-shape: zero dimension in " + shape_to_string(shape));
    }
}

template <typename T>
void require_rank4(const BasicTensor<T>& t, const char* what) {
    if (t.rank() != 4) {
        throw ShapeError(std::string(what) + ": expected rank-4 tensor, got " + shape_to_string(t.shape()));
    }
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    validate_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("invalid-shape: " + std::to_string(data_.size()) + " values for shape " +
                         shape_to_string(shape_));
    }
}

template <typename T>
void BasicTensor<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
    return BasicTensor(std::move(shape), data_);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, ElementwiseOp op) {
    if (a.shape() != b.shape()) {
        throw ShapeError("shape-mismatch: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    BasicTensor<T> out = a;
    auto o = out.values();
    auto bv = b.values();
    switch (op) {
        case ElementwiseOp::kAdd:
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
            break;
        case ElementwiseOp::kMul:
            for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
            break;
    }
    if (!out.all_finite()) throw NumericError("elementwise: non-finite result");
    return out;
}

template <typename T>
void add_inplace(BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("shape-mismatch: " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
    auto o = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> inputs) {
    if (inputs.empty()) throw InvalidArgument("concat_channels: no inputs");
    const auto& first = *inputs.front();
    require_rank4(first, "concat_channels");
    std::size_t total_c = 0;
    for (const auto* t : inputs) {
        require_rank4(*t, "concat_channels");
        if (t->batch() != first.batch() || t->height() != first.height() || t->width() != first.width()) {
            throw ShapeError("shape-mismatch: concat_channels " + shape_to_string(first.shape()) + " vs " +
                             shape_to_string(t->shape()));
        }
        total_c += t->channels();
    }
    const std::size_t n_batch = first.batch();
    const std::size_t plane = first.plane();
    BasicTensor<T> out({n_batch, total_c, first.height(), first.width()});
    for (std::size_t n = 0; n < n_batch; ++n) {
        T* dst = out.data() + n * total_c * plane;
        for (const auto* t : inputs) {
            const std::size_t chunk = t->channels() * plane;
            std::memcpy(dst, t->data() + n * chunk, chunk * sizeof(T));
            dst += chunk;
        }
    }
    return out;
}

template <typename T>
std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>& t, std::span<const std::size_t> counts) {
    require_rank4(t, "split_channels");
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total != t.channels()) {
        throw ShapeError("shape-mismatch: split_channels counts sum to " + std::to_string(total) + ", tensor has " +
                         std::to_string(t.channels()) + " channels");
    }
    const std::size_t plane = t.plane();
    std::vector<BasicTensor<T>> parts;
    parts.reserve(counts.size());
    std::size_t offset = 0;
    for (auto c : counts) {
        BasicTensor<T> part({t.batch(), c, t.height(), t.width()});
        for (std::size_t n = 0; n < t.batch(); ++n) {
            std::memcpy(part.data() + n * c * plane, t.data() + (n * t.channels() + offset) * plane,
                        c * plane * sizeof(T));
        }
        parts.push_back(std::move(part));
        offset += c;
    }
    return parts;
}

template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>* const> items) {
    if (items.empty()) throw InvalidArgument("stack: no inputs");
    const Shape& s = items.front()->shape();
    if (s.size() != 3) throw ShapeError("stack: expected rank-3 items, got " + shape_to_string(s));
    BasicTensor<T> out({items.size(), s[0], s[1], s[2]});
    const std::size_t chunk = shape_numel(s);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i]->shape() != s) {
            throw ShapeError("shape-mismatch: stack " + shape_to_string(s) + " vs " +
                             shape_to_string(items[i]->shape()));
        }
        std::memcpy(out.data() + i * chunk, items[i]->data(), chunk * sizeof(T));
    }
    return out;
}

template <typename T>
BasicTensor<T> unstack(const BasicTensor<T>& batch, std::size_t n) {
    require_rank4(batch, "unstack");
    if (n >= batch.batch()) throw InvalidArgument("unstack: index out of range");
    const std::size_t chunk = batch.channels() * batch.plane();
    std::vector<T> values(batch.data() + n * chunk, batch.data() + (n + 1) * chunk);
    return BasicTensor<T>({batch.channels(), batch.height(), batch.width()}, std::move(values));
}

#define RUPNET_INSTANTIATE(T)                                                                              \
    template class BasicTensor<T>;                                                                         \
    template BasicTensor<T> elementwise(const BasicTensor<T>&, const BasicTensor<T>&, ElementwiseOp);      \
    template void add_inplace(BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const>);                       \
    template std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>&, std::span<const std::size_t>); \
    template BasicTensor<T> stack(std::span<const BasicTensor<T>* const>);                                 \
    template BasicTensor<T> unstack(const BasicTensor<T>&, std::size_t);

RUPNET_INSTANTIATE(float)
RUPNET_INSTANTIATE(double)

#undef RUPNET_INSTANTIATE

}  // namespace rupnet
