#include "intent/model.hpp"

#include <algorithm>
#include <cmath>

#include "intent/error.hpp"

namespace intent {

template <typename T>
HybridParams<T> HybridParams<T>::zeros(const ModelDims &d) {
    if (d.vocab < 2 || d.embed == 0 || d.hidden == 0 || d.filters == 0 || d.classes == 0)
        throw InvalidArgument("model dimensions must be positive and vocab >= 2");
    HybridParams p;
    p.embedding = Tensor<T>({d.vocab, d.embed});
    p.lstm_forward = LstmParams<T>::zeros(d.embed, d.hidden);
    p.lstm_backward = LstmParams<T>::zeros(d.embed, d.hidden);
    p.conv = ConvParams<T>::zeros(d.embed, d.filters);
    p.dense = DenseParams<T>::zeros(d.fused(), d.classes);
    return p;
}

template <typename T>
ModelDims HybridParams<T>::dims() const {
    return {embedding.dim(0), embedding.dim(1), lstm_forward.hidden_size(), conv.filter_count(), dense.weight.dim(1)};
}

template <typename T>
std::size_t HybridParams<T>::scalar_count() const {
    std::size_t n = 0;
    for_each([&](const std::string &, const Tensor<T> &t) { n += t.size(); });
    return n;
}

template <typename T>
HybridParams<T> init_params(const ModelDims &dims, Rng &rng) {
    auto p = HybridParams<T>::zeros(dims);
    auto glorot = [&](Tensor<T> &t, std::size_t fan_in, std::size_t fan_out) {
        t = uniform_init<T>(rng, t.shape(), std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)));
    };
    const std::size_t k = dims.embed, H = dims.hidden;

    glorot(p.embedding, dims.vocab, k);
    std::fill(p.embedding.row(Vocab::kPad).begin(), p.embedding.row(Vocab::kPad).end(), T{0});

    for (auto *lstm : {&p.lstm_forward, &p.lstm_backward}) {
        for (auto *w : {&lstm->w_si, &lstm->w_sf, &lstm->w_sc, &lstm->w_so})
            glorot(*w, k, H);
        for (auto *w : {&lstm->w_hi, &lstm->w_hf, &lstm->w_hc, &lstm->w_ho, &lstm->w_ci, &lstm->w_cf, &lstm->w_co})
            glorot(*w, H, H);
        lstm->b_f.fill(T{1});
    }
    glorot(p.conv.filters, kConvWidth * k, kConvWidth * dims.filters);
    glorot(p.dense.weight, dims.fused(), dims.classes);
    return p;
}

template <typename T>
void HybridModel<T>::validate() const {
    const auto d = dims();
    if (d.vocab != vocab.size())
        throw DataError("model: embedding has " + std::to_string(d.vocab) + " rows but vocab has " +
                        std::to_string(vocab.size()) + " entries");
    if (d.classes != labels.size())
        throw DataError("model: dense layer has " + std::to_string(d.classes) + " outputs but " +
                        std::to_string(labels.size()) + " labels");
    if (max_len < kMinSequence)
        throw DataError("model: max_len must be >= 3");
}

template <typename T>
ForwardResult<T> forward(const HybridParams<T> &params, std::span<const std::int32_t> indices, std::size_t true_len,
                         bool training, double dropout_rate, Rng *rng) {
    if (true_len < kMinSequence || true_len > indices.size())
        throw InvalidArgument("forward: true_len " + std::to_string(true_len) + " outside [3, " +
                              std::to_string(indices.size()) + "]");
    const std::size_t H = params.lstm_forward.hidden_size(), F = params.conv.filter_count();

    ForwardResult<T> r;
    auto &cache = r.cache;
    cache.indices.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(true_len));

    const Tensor<T> X = embedding_forward<T>(cache.indices, params.embedding);
    auto bi = bilstm_forward(X, true_len, params.lstm_forward, params.lstm_backward);
    cache.bilstm = std::move(bi.cache);
    cache.conv = conv_forward(X, params.conv, true_len);
    cache.pool = maxpool_over_time(cache.conv.map);

    Tensor<T> M({2 * H + F});
    std::copy(bi.forward_final.data(), bi.forward_final.data() + H, M.data());
    std::copy(bi.backward_final.data(), bi.backward_final.data() + H, M.data() + H);
    std::copy(cache.pool.pooled.data(), cache.pool.pooled.data() + F, M.data() + 2 * H);

    cache.fused = dropout(M, dropout_rate, training, rng);
    cache.logits = dense_forward(cache.fused.y, params.dense);
    r.probs = softmax(cache.logits);
    return r;
}

template <typename T>
void backward(const HybridParams<T> &params, const ForwardCache<T> &cache, const Tensor<T> &d_logits,
              HybridParams<T> &grads) {
    const std::size_t H = params.lstm_forward.hidden_size(), F = params.conv.filter_count();
    const std::size_t L = cache.indices.size();

    const Tensor<T> d_fused = dense_backward(cache.fused.y, params.dense, d_logits, grads.dense);
    const Tensor<T> dM = dropout_backward(cache.fused, d_fused);

    Tensor<T> d_lf({H}), d_lb({H}), d_c3({F});
    std::copy(dM.data(), dM.data() + H, d_lf.data());
    std::copy(dM.data() + H, dM.data() + 2 * H, d_lb.data());
    std::copy(dM.data() + 2 * H, dM.data() + 2 * H + F, d_c3.data());

    Tensor<T> dX({L, params.embedding.dim(1)});
    conv_backward(cache.conv, params.conv, maxpool_backward(cache.pool, d_c3), grads.conv, dX);
    bilstm_backward(cache.bilstm, params.lstm_forward, params.lstm_backward, d_lf, d_lb, grads.lstm_forward,
                    grads.lstm_backward, dX);
    embedding_backward<T>(cache.indices, dX, grads.embedding);
}

template <typename T>
LossResult<T> cross_entropy(const Tensor<T> &probs, std::size_t gold) {
    if (gold >= probs.size())
        throw InvalidArgument("cross_entropy: gold class " + std::to_string(gold) + " out of range");
    LossResult<T> r;
    // Computed in double so float probabilities near 1 keep their resolution.
    r.loss = -std::log(static_cast<double>(probs[gold]));
    r.d_logits = probs;
    r.d_logits[gold] -= T{1};
    return r;
}

template <typename T>
double accumulate_sample_gradient(const HybridParams<T> &params, const Sample &sample, bool training,
                                  double dropout_rate, Rng *rng, HybridParams<T> &grads) {
    auto fwd = forward(params, sample.input.indices, sample.input.true_len, training, dropout_rate, rng);
    auto loss = cross_entropy(fwd.probs, sample.label);
    backward(params, fwd.cache, loss.d_logits, grads);
    return loss.loss;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
    if (values.empty())
        throw InvalidArgument("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best])
            best = i;
    return best;
}

Prediction predict(const HybridModel<float> &model, std::string_view text) {
    const Encoded input = encode(text, model.vocab, model.max_len);
    auto fwd = forward(model, input, false, nullptr);
    Prediction p;
    p.index = argmax<float>(fwd.probs.values());
    p.label = model.labels.at(p.index);
    p.probs = std::move(fwd.probs);
    return p;
}

#define INTENT_INSTANTIATE(T)                                                                                   \
    template struct HybridParams<T>;                                                                            \
    template struct HybridModel<T>;                                                                             \
    template HybridParams<T> init_params<T>(const ModelDims &, Rng &);                                          \
    template ForwardResult<T> forward<T>(const HybridParams<T> &, std::span<const std::int32_t>, std::size_t,  \
                                         bool, double, Rng *);                                                  \
    template void backward<T>(const HybridParams<T> &, const ForwardCache<T> &, const Tensor<T> &,             \
                              HybridParams<T> &);                                                               \
    template LossResult<T> cross_entropy<T>(const Tensor<T> &, std::size_t);                                    \
    template double accumulate_sample_gradient<T>(const HybridParams<T> &, const Sample &, bool, double, Rng *, \
                                                  HybridParams<T> &);                                           \
    template std::size_t argmax<T>(std::span<const T>);

INTENT_INSTANTIATE(float)
INTENT_INSTANTIATE(double)
INTENT_INSTANTIATE(long double)

#undef INTENT_INSTANTIATE

} // namespace intent
