#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artdream/error.hpp"

namespace artdream::ndgrid {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

// Dense row-major array. Images and feature maps are (channels, height, width).
// A default-constructed tensor is empty (rank 0, no data) and is only used as
// a "not yet assigned" placeholder.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_volume(shape_), fill);
        if (!std::isfinite(fill)) throw NonFiniteError("tensor fill value is not finite");
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != shape_volume(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
        check_finite("tensor construction");
    }

    static BasicTensor zeros_like(const BasicTensor& other) { return BasicTensor(other.shape_); }

    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // (c, y, x) access for rank-3 tensors.
    T& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    const T& at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    void require_rank(std::size_t r, std::string_view what) const {
        if (rank() != r) {
            throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) + ", got shape " +
                             shape_str(shape_));
        }
    }

    void check_finite(std::string_view where) const {
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i])) {
                throw NonFiniteError(std::string(where) + ": non-finite value at flat index " +
                                     std::to_string(i));
            }
        }
    }

    template <typename U>
    [[nodiscard]] BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(out));
    }

    BasicTensor& operator+=(const BasicTensor& other) {
        require_same_shape(other, "tensor +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    BasicTensor& operator*=(T scale) {
        for (auto& v : data_) v *= scale;
        return *this;
    }

    void require_same_shape(const BasicTensor& other, std::string_view what) const {
        if (shape_ != other.shape_) {
            throw ShapeError(std::string(what) + ": shape " + shape_str(shape_) + " vs " +
                             shape_str(other.shape_));
        }
    }

    [[nodiscard]] T sum() const {
        T acc{0};
        for (auto v : data_) acc += v;
        return acc;
    }

    friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void validate_shape() const {
        if (shape_.empty()) throw ShapeError("tensor shape must have at least one extent");
        for (auto e : shape_) {
            if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
        }
    }

    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

}  // namespace artdream::ndgrid
