#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fpd/error.hpp"

namespace fpd {

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

// Dense row-major n-dimensional array. Scalar is float for training,
// double for gradient verification.
template <typename Scalar>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), Scalar(0)) {}

    Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != data_.size())
            raise(ErrorCategory::Shape,
                  "tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_string(shape_));
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, Scalar v) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::vector<Scalar>& vec() { return data_; }
    const std::vector<Scalar>& vec() const { return data_; }

    Scalar& operator[](std::size_t i) { return data_[i]; }
    Scalar operator[](std::size_t i) const { return data_[i]; }

    // 2-d accessors (B x F layouts)
    Scalar& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    Scalar at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // 4-d accessors (B x C x H x W layouts)
    Scalar& at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    Scalar at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        if (checked_numel(new_shape) != data_.size())
            raise(ErrorCategory::Shape, "cannot reshape " + shape_string(shape_) + " to " +
                                            shape_string(new_shape));
        Tensor t;
        t.shape_ = std::move(new_shape);
        t.data_ = data_;
        return t;
    }

    template <typename Other>
    Tensor<Other> cast() const {
        Tensor<Other> t;
        t.set_raw(shape_, std::vector<Other>(data_.begin(), data_.end()));
        return t;
    }

    bool all_finite() const {
        for (Scalar v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void set_raw(std::vector<std::size_t> shape, std::vector<Scalar> data) {
        shape_ = std::move(shape);
        data_ = std::move(data);
    }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) raise(ErrorCategory::Shape, "zero dimension in shape " + shape_string(shape));
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<Scalar> data_;
};

template <typename Scalar>
void require_shape(const Tensor<Scalar>& t, const std::vector<std::size_t>& want,
                   const char* what) {
    if (t.shape() != want)
        raise(ErrorCategory::Shape, std::string(what) + ": expected shape " + shape_string(want) +
                                        ", got " + shape_string(t.shape()));
}

}  // namespace fpd
