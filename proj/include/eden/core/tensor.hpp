#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eden/core/error.hpp"

namespace eden {

// Dense row-major matrix. Token sequences are (count, dim), images are
// (height * width, channels); everything in the engine is rank 2.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        require(data_.size() == rows_ * cols_, "shape", "tensor data size does not match shape");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const { return "(" + std::to_string(rows_) + ", " + std::to_string(cols_) + ")"; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        fail("shape", std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace eden
