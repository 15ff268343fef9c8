#ifndef ADVFACE_CORE_TENSOR_HPP
#define ADVFACE_CORE_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advface/common.hpp"

namespace advface::nn {

// Dense row-major tensor. Images use NCHW, matrices (rows, cols).
template <typename S>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<size_t>(count(shape_)), S(0));
    }
    Tensor(std::vector<int> shape, std::vector<S> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        require(static_cast<size_t>(count(shape_)) == data_.size(),
                "tensor shape/data mismatch");
    }

    static long count(const std::vector<int>& shape) {
        long n = 1;
        for (int d : shape) {
            require(d >= 0, "negative dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
    int rank() const { return static_cast<int>(shape_.size()); }
    long numel() const { return static_cast<long>(data_.size()); }
    bool empty() const { return data_.empty(); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }
    S& operator[](long i) { return data_[static_cast<size_t>(i)]; }
    const S& operator[](long i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessor.
    S& at(int n, int c, int h, int w) {
        return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const S& at(int n, int c, int h, int w) const {
        return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    // Matrix accessor.
    S& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    const S& at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }

    void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor reshaped(std::vector<int> shape) const {
        require(count(shape) == numel(), "reshape numel mismatch");
        return Tensor(std::move(shape), data_);
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (const S& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    S min() const { return *std::min_element(data_.begin(), data_.end()); }
    S max() const { return *std::max_element(data_.begin(), data_.end()); }

    template <typename T>
    Tensor<T> cast() const {
        std::vector<T> out(data_.size());
        for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<T>(data_[i]);
        return Tensor<T>(shape_, std::move(out));
    }

private:
    std::vector<int> shape_;
    std::vector<S> data_;
};

template <typename S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
    require(a.same_shape(b), "max_abs_diff shape mismatch");
    S m = 0;
    for (long i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

template <typename S>
bool bitwise_equal(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.shape() != b.shape()) return false;
    for (long i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace advface::nn

#endif
