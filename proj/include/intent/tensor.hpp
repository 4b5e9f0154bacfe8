#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "intent/rng.hpp"

namespace intent {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape &shape);

// Dense row-major array with 1 to 3 axes. Three-axis tensors are ordered
// (batch/filter, time, feature). Training runs in float; gradient checks in
// double.
template <typename T>
class Tensor {
  public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{0});
    Tensor(Shape shape, std::vector<T> values);

    const Shape &shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T *data() { return data_.data(); }
    const T *data() const { return data_.data(); }

    T &operator[](std::size_t i) { return data_[i]; }
    const T &operator[](std::size_t i) const { return data_[i]; }

    T &operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T &operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    T &operator()(std::size_t a, std::size_t b, std::size_t c) {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }
    const T &operator()(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }

    // Row r of a rank-2 tensor.
    std::span<T> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * shape_[1], shape_[1]}; }

    void fill(T value);

    bool operator==(const Tensor &) const = default;

  private:
    Shape shape_;
    std::vector<T> data_;
};

enum class Elementwise { Sigmoid, Tanh, Relu, Add, Mul };

// Standard matrix product of rank-2 tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T> &a, const Tensor<T> &b);

// Unary kinds ignore `y`; binary kinds require shape(x) == shape(y).
template <typename T>
Tensor<T> elementwise(const Tensor<T> &x, Elementwise kind, const Tensor<T> *y = nullptr);

// Max-shifted softmax over a rank-1 tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T> &logits);

// Entries i.i.d. uniform in [-limit, +limit].
template <typename T>
Tensor<T> uniform_init(Rng &rng, const Shape &shape, double limit);

template <typename T>
bool all_finite(std::span<const T> values);

template <typename T>
T sigmoid(T x);

// Precision conversion, used to lift trained float models into double for
// gradient checks and back.
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From> &t) {
    std::vector<To> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = static_cast<To>(t[i]);
    return Tensor<To>(t.shape(), std::move(out));
}

} // namespace intent
