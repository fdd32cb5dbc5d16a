#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "rupnet/error.hpp"

namespace rupnet {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major array of rank 1..4. Rank-4 tensors use batch x channel x height x width.
///
/// Tensors own their storage and have value semantics; there is no aliasing between
/// distinct objects.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    /// Throws ShapeError for rank outside 1..4 or any zero dimension.
    explicit BasicTensor(Shape shape, T fill = T(0));

    BasicTensor(Shape shape, std::vector<T> values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    // NCHW accessors, valid for rank-4 tensors only.
    std::size_t batch() const { return dim(0); }
    std::size_t channels() const { return dim(1); }
    std::size_t height() const { return dim(2); }
    std::size_t width() const { return dim(3); }
    std::size_t plane() const { return dim(2) * dim(3); }

    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(T value);

    /// Same data, new shape with identical element count.
    BasicTensor reshaped(Shape shape) const;

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    bool all_finite() const;

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

std::size_t shape_numel(const Shape& shape);

/// Validated construction; equivalent to the constructor but named for clarity at call sites.
template <typename T>
BasicTensor<T> tensor_create(const Shape& shape, T fill) {
    return BasicTensor<T>(shape, fill);
}

enum class ElementwiseOp { kAdd, kMul };

template <typename T>
BasicTensor<T> elementwise(const BasicTensor<T>& a, const BasicTensor<T>& b, ElementwiseOp op);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return elementwise(a, b, ElementwiseOp::kAdd);
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return elementwise(a, b, ElementwiseOp::kMul);
}

/// In-place a += b.
template <typename T>
void add_inplace(BasicTensor<T>& a, const BasicTensor<T>& b);

/// Concatenate rank-4 tensors along the channel axis, preserving input order.
template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>* const> inputs);

template <typename T>
BasicTensor<T> concat_channels(std::initializer_list<const BasicTensor<T>*> inputs) {
    return concat_channels<T>(std::span<const BasicTensor<T>* const>(inputs.begin(), inputs.size()));
}

/// Inverse of concat_channels: cut a rank-4 tensor into consecutive channel groups.
template <typename T>
std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>& t, std::span<const std::size_t> counts);

/// Stack rank-3 C x H x W tensors into an N x C x H x W batch.
template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>* const> items);

/// Extract item n of a rank-4 tensor as a rank-3 tensor.
template <typename T>
BasicTensor<T> unstack(const BasicTensor<T>& batch, std::size_t n);

}  // namespace rupnet
