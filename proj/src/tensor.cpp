#include "intent/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "intent/error.hpp"

namespace intent {

std::string shape_string(const Shape &shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

std::size_t checked_volume(const Shape &shape) {
    if (shape.empty() || shape.size() > 3)
        throw ShapeError("tensor rank must be 1..3, got " + shape_string(shape));
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_volume(shape_) != data_.size())
        throw ShapeError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(data_.size()) +
                         " values");
}

template <typename T>
void Tensor<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
T sigmoid(T x) {
    // Branching keeps exp() from overflowing for large |x|.
    if (x >= T{0})
        return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
Tensor<T> matmul(const Tensor<T> &a, const Tensor<T> &b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T *dst = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a(i, p);
            const T *src = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j)
                dst[j] += av * src[j];
        }
    }
    return out;
}

template <typename T>
Tensor<T> elementwise(const Tensor<T> &x, Elementwise kind, const Tensor<T> *y) {
    const bool binary = kind == Elementwise::Add || kind == Elementwise::Mul;
    if (binary && (y == nullptr || y->shape() != x.shape()))
        throw ShapeError("elementwise: binary op needs matching shapes, got " + shape_string(x.shape()) + " and " +
                         (y ? shape_string(y->shape()) : std::string("none")));
    Tensor<T> out = x;
    auto v = out.values();
    switch (kind) {
    case Elementwise::Sigmoid:
        for (auto &e : v)
            e = sigmoid(e);
        break;
    case Elementwise::Tanh:
        for (auto &e : v)
            e = std::tanh(e);
        break;
    case Elementwise::Relu:
        for (auto &e : v)
            e = e > T{0} ? e : T{0};
        break;
    case Elementwise::Add:
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] += (*y)[i];
        break;
    case Elementwise::Mul:
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] *= (*y)[i];
        break;
    }
    return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T> &logits) {
    if (logits.empty())
        throw InvalidArgument("softmax: empty input");
    if (logits.rank() != 1)
        throw ShapeError("softmax: expected rank-1 logits, got " + shape_string(logits.shape()));
    const auto in = logits.values();
    const T peak = *std::max_element(in.begin(), in.end());
    Tensor<T> out(logits.shape());
    T total{0};
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = std::exp(in[i] - peak);
        total += out[i];
    }
    for (auto &e : out.values())
        e /= total;
    return out;
}

template <typename T>
Tensor<T> uniform_init(Rng &rng, const Shape &shape, double limit) {
    if (!(limit > 0.0))
        throw InvalidArgument("uniform_init: limit must be positive");
    Tensor<T> out(shape);
    for (auto &e : out.values())
        e = static_cast<T>((2.0 * rng.uniform() - 1.0) * limit);
    return out;
}

template <typename T>
bool all_finite(std::span<const T> values) {
    return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

#define INTENT_INSTANTIATE(T)                                                                                   \
    template class Tensor<T>;                                                                                   \
    template T sigmoid<T>(T);                                                                                   \
    template Tensor<T> matmul<T>(const Tensor<T> &, const Tensor<T> &);                                         \
    template Tensor<T> elementwise<T>(const Tensor<T> &, Elementwise, const Tensor<T> *);                      \
    template Tensor<T> softmax<T>(const Tensor<T> &);                                                           \
    template Tensor<T> uniform_init<T>(Rng &, const Shape &, double);                                           \
    template bool all_finite<T>(std::span<const T>);

INTENT_INSTANTIATE(float)
INTENT_INSTANTIATE(double)
INTENT_INSTANTIATE(long double)

#undef INTENT_INSTANTIATE

} // namespace intent
