#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "colorspace/error.hpp"

namespace colorspace {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
    out << ']';
    return out.str();
}

/// Dense row-major n-dimensional array. Storage length always equals the
/// product of the shape.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), values_(std::move(values)) {
        if (values_.size() != shape_size(shape_))
            throw Error(ErrorKind::invalid_shape, "buffer of " + std::to_string(values_.size()) +
                                                      " values for shape " + shape_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T* data() noexcept { return values_.data(); }
    const T* data() const noexcept { return values_.data(); }

    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }

    void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != size())
            throw Error(ErrorKind::invalid_shape,
                        "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        return Tensor(std::move(shape), values_);
    }

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(values_.begin(), values_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    Shape shape_;
    std::vector<T> values_;
};

}  // namespace colorspace
