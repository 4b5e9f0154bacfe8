#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "intent/data.hpp"
#include "intent/layers.hpp"
#include "intent/rng.hpp"
#include "intent/tensor.hpp"

namespace intent {

struct ModelDims {
    std::size_t vocab = 0;   // V
    std::size_t embed = 64;  // k
    std::size_t hidden = 50; // H
    std::size_t filters = 50; // F
    std::size_t classes = kLabels.size(); // C

    std::size_t fused() const { return 2 * hidden + filters; } // |M|
    bool operator==(const ModelDims &) const = default;
};

// Every trainable tensor of the hybrid network. Also used, with identical
// shapes, as the gradient accumulator.
template <typename T>
struct HybridParams {
    Tensor<T> embedding; // V x k, row 0 (PAD) stays zero
    LstmParams<T> lstm_forward;
    LstmParams<T> lstm_backward;
    ConvParams<T> conv;
    DenseParams<T> dense;

    static HybridParams zeros(const ModelDims &dims);

    ModelDims dims() const;

    // Visits every block as (qualified name, tensor) in a fixed order shared
    // by the optimizer, the serializer and the gradient checker.
    template <typename F>
    void for_each(F &&f) { visit(*this, f); }
    template <typename F>
    void for_each(F &&f) const { visit(*this, f); }

    std::size_t scalar_count() const;

  private:
    template <typename Self, typename F>
    static void visit(Self &self, F &f) {
        f(std::string("embedding"), self.embedding);
        self.lstm_forward.for_each([&](const char *n, auto &t) { f("lstm_fwd." + std::string(n), t); });
        self.lstm_backward.for_each([&](const char *n, auto &t) { f("lstm_bwd." + std::string(n), t); });
        f(std::string("conv.filters"), self.conv.filters);
        f(std::string("conv.bias"), self.conv.bias);
        f(std::string("dense.weight"), self.dense.weight);
        f(std::string("dense.bias"), self.dense.bias);
    }
};

// Glorot-uniform weights, zero biases, forget-gate bias 1, zero PAD row.
template <typename T>
HybridParams<T> init_params(const ModelDims &dims, Rng &rng);

// The assembled classifier: parameters plus everything needed to turn raw
// text into class probabilities.
template <typename T>
struct HybridModel {
    HybridParams<T> params;
    Vocab vocab;
    std::vector<std::string> labels;
    std::size_t max_len = 30;
    double dropout = 0.5;

    ModelDims dims() const { return params.dims(); }
    // Throws DataError unless vocab/labels agree with parameter shapes.
    void validate() const;
};

template <typename T>
struct ForwardCache {
    std::vector<std::int32_t> indices;
    BiLstmCache<T> bilstm;
    ConvOutput<T> conv;
    PoolOutput<T> pool;
    DropoutOutput<T> fused; // M before (x) and after (y) dropout
    Tensor<T> logits;
};

template <typename T>
struct ForwardResult {
    Tensor<T> probs;
    ForwardCache<T> cache;
};

// probs = softmax(dense(dropout([Lf, Lb, C3]))). Dropout is active only when
// `training` is set, in which case `rng` must be non-null.
template <typename T>
ForwardResult<T> forward(const HybridParams<T> &params, std::span<const std::int32_t> indices, std::size_t true_len,
                         bool training, double dropout_rate, Rng *rng);

template <typename T>
ForwardResult<T> forward(const HybridModel<T> &model, const Encoded &input, bool training, Rng *rng) {
    return forward(model.params, input.indices, input.true_len, training, model.dropout, rng);
}

// Backpropagates dlogits through the cached forward pass, adding into grads.
template <typename T>
void backward(const HybridParams<T> &params, const ForwardCache<T> &cache, const Tensor<T> &d_logits,
              HybridParams<T> &grads);

template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> d_logits;
};

// loss = -log probs[gold]; d_logits = probs - onehot(gold).
template <typename T>
LossResult<T> cross_entropy(const Tensor<T> &probs, std::size_t gold);

struct Sample {
    Encoded input;
    std::size_t label = 0;
};

// Forward, loss and backward for one sample; gradients are added into grads.
template <typename T>
double accumulate_sample_gradient(const HybridParams<T> &params, const Sample &sample, bool training,
                                  double dropout_rate, Rng *rng, HybridParams<T> &grads);

// Lowest index wins exact ties.
template <typename T>
std::size_t argmax(std::span<const T> values);

struct Prediction {
    std::size_t index = 0;
    std::string label;
    Tensor<float> probs;
};

Prediction predict(const HybridModel<float> &model, std::string_view text);

} // namespace intent
