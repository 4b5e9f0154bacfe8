#include "intent/layers.hpp"

#include <cmath>
#include <tuple>

#include "intent/error.hpp"

namespace intent {

namespace {

// out[j] += sum_m x[m] * W[m, j]
template <typename T>
void vecmat_acc(std::span<const T> x, const Tensor<T> &W, std::span<T> out) {
    const std::size_t cols = W.dim(1);
    for (std::size_t m = 0; m < x.size(); ++m) {
        const T xm = x[m];
        if (xm == T{0})
            continue;
        const T *w = W.data() + m * cols;
        for (std::size_t j = 0; j < cols; ++j)
            out[j] += xm * w[j];
    }
}

// out[m] += sum_j W[m, j] * d[j]
template <typename T>
void matvec_t_acc(std::span<const T> d, const Tensor<T> &W, std::span<T> out) {
    const std::size_t cols = W.dim(1);
    for (std::size_t m = 0; m < out.size(); ++m) {
        const T *w = W.data() + m * cols;
        T acc{0};
        for (std::size_t j = 0; j < cols; ++j)
            acc += w[j] * d[j];
        out[m] += acc;
    }
}

// dW[m, j] += x[m] * d[j]
template <typename T>
void outer_acc(std::span<const T> x, std::span<const T> d, Tensor<T> &dW) {
    const std::size_t cols = dW.dim(1);
    for (std::size_t m = 0; m < x.size(); ++m) {
        const T xm = x[m];
        if (xm == T{0})
            continue;
        T *w = dW.data() + m * cols;
        for (std::size_t j = 0; j < cols; ++j)
            w[j] += xm * d[j];
    }
}

template <typename T>
void add_into(std::span<const T> src, Tensor<T> &dst) {
    for (std::size_t j = 0; j < src.size(); ++j)
        dst[j] += src[j];
}

void require(bool ok, const std::string &what) {
    if (!ok)
        throw ShapeError(what);
}

template <typename T>
void require_vector(const Tensor<T> &t, std::size_t n, const char *what) {
    require(t.rank() == 1 && t.dim(0) == n,
            std::string(what) + ": expected [" + std::to_string(n) + "], got " + shape_string(t.shape()));
}

} // namespace

template <typename T>
LstmParams<T> LstmParams<T>::zeros(std::size_t input, std::size_t hidden) {
    LstmParams p;
    for (auto *w : {&p.w_si, &p.w_sf, &p.w_sc, &p.w_so})
        *w = Tensor<T>({input, hidden});
    for (auto *w : {&p.w_hi, &p.w_hf, &p.w_hc, &p.w_ho, &p.w_ci, &p.w_cf, &p.w_co})
        *w = Tensor<T>({hidden, hidden});
    for (auto *b : {&p.b_i, &p.b_f, &p.b_c, &p.b_o})
        *b = Tensor<T>({hidden});
    return p;
}

template <typename T>
ConvParams<T> ConvParams<T>::zeros(std::size_t input, std::size_t filters) {
    return {Tensor<T>({filters, kConvWidth, input}), Tensor<T>({filters})};
}

template <typename T>
DenseParams<T> DenseParams<T>::zeros(std::size_t input, std::size_t classes) {
    return {Tensor<T>({input, classes}), Tensor<T>({classes})};
}

// ---- embedding ------------------------------------------------------------

template <typename T>
Tensor<T> embedding_forward(std::span<const std::int32_t> indices, const Tensor<T> &table) {
    require(table.rank() == 2, "embedding: table must be rank 2");
    const std::size_t vocab = table.dim(0), k = table.dim(1);
    Tensor<T> out({indices.size(), k});
    for (std::size_t t = 0; t < indices.size(); ++t) {
        const auto idx = indices[t];
        if (idx < 0 || static_cast<std::size_t>(idx) >= vocab)
            throw InvalidArgument("embedding: index " + std::to_string(idx) + " out of range [0, " +
                                  std::to_string(vocab) + ")");
        const auto src = table.row(static_cast<std::size_t>(idx));
        std::copy(src.begin(), src.end(), out.row(t).begin());
    }
    return out;
}

template <typename T>
void embedding_backward(std::span<const std::int32_t> indices, const Tensor<T> &dX, Tensor<T> &dTable) {
    require(dX.rank() == 2 && dX.dim(1) == dTable.dim(1) && dX.dim(0) <= indices.size(),
            "embedding_backward: gradient shape " + shape_string(dX.shape()));
    for (std::size_t t = 0; t < dX.dim(0); ++t) {
        if (indices[t] == 0)
            continue; // PAD row is frozen
        auto dst = dTable.row(static_cast<std::size_t>(indices[t]));
        const auto src = dX.row(t);
        for (std::size_t j = 0; j < src.size(); ++j)
            dst[j] += src[j];
    }
}

// ---- LSTM cell --------------------------------------------------------------

template <typename T>
LstmCellCache<T> lstm_cell_forward(const Tensor<T> &s, const Tensor<T> &h_prev, const Tensor<T> &c_prev,
                                   const LstmParams<T> &p) {
    const std::size_t k = p.input_size(), H = p.hidden_size();
    require_vector(s, k, "lstm_cell_forward: s_t");
    require_vector(h_prev, H, "lstm_cell_forward: h_prev");
    require_vector(c_prev, H, "lstm_cell_forward: c_prev");

    LstmCellCache<T> cc{s, h_prev, c_prev, p.b_i, p.b_f, p.b_c, p.b_o, Tensor<T>({H}), Tensor<T>({H}),
                        Tensor<T>({H})};
    const auto sv = s.values(), hv = h_prev.values(), cv = c_prev.values();

    vecmat_acc(sv, p.w_si, cc.i.values());
    vecmat_acc(hv, p.w_hi, cc.i.values());
    vecmat_acc(cv, p.w_ci, cc.i.values());

    vecmat_acc(sv, p.w_sf, cc.f.values());
    vecmat_acc(hv, p.w_hf, cc.f.values());
    vecmat_acc(cv, p.w_cf, cc.f.values());

    vecmat_acc(sv, p.w_sc, cc.g.values());
    vecmat_acc(hv, p.w_hc, cc.g.values());

    for (std::size_t j = 0; j < H; ++j) {
        cc.i[j] = sigmoid(cc.i[j]);
        cc.f[j] = sigmoid(cc.f[j]);
        cc.g[j] = std::tanh(cc.g[j]);
        cc.c[j] = cc.f[j] * c_prev[j] + cc.i[j] * cc.g[j];
    }

    vecmat_acc(sv, p.w_so, cc.o.values());
    vecmat_acc(hv, p.w_ho, cc.o.values());
    vecmat_acc(std::span<const T>(cc.c.values()), p.w_co, cc.o.values());

    for (std::size_t j = 0; j < H; ++j) {
        cc.o[j] = sigmoid(cc.o[j]);
        cc.tanh_c[j] = std::tanh(cc.c[j]);
        cc.h[j] = cc.o[j] * cc.tanh_c[j];
    }
    return cc;
}

template <typename T>
LstmCellInputGrads<T> lstm_cell_backward(const LstmCellCache<T> &cc, const LstmParams<T> &p, const Tensor<T> &dh,
                                         const Tensor<T> &dc, LstmParams<T> &grads) {
    const std::size_t k = p.input_size(), H = p.hidden_size();
    require(cc.s.size() == k && cc.h.size() == H && cc.c_prev.size() == H,
            "lstm_cell_backward: cache does not match parameters");
    require_vector(dh, H, "lstm_cell_backward: dh");
    require_vector(dc, H, "lstm_cell_backward: dc");

    Tensor<T> da_o({H}), dc_total({H});
    for (std::size_t j = 0; j < H; ++j) {
        const T o = cc.o[j], tc = cc.tanh_c[j];
        da_o[j] = dh[j] * tc * o * (T{1} - o);
        dc_total[j] = dc[j] + dh[j] * o * (T{1} - tc * tc);
    }
    // o reads the new c through W_co.
    matvec_t_acc(std::span<const T>(da_o.values()), p.w_co, dc_total.values());

    Tensor<T> da_i({H}), da_f({H}), da_g({H});
    LstmCellInputGrads<T> out{Tensor<T>({k}), Tensor<T>({H}), Tensor<T>({H})};
    for (std::size_t j = 0; j < H; ++j) {
        const T i = cc.i[j], f = cc.f[j], g = cc.g[j];
        da_i[j] = dc_total[j] * g * i * (T{1} - i);
        da_f[j] = dc_total[j] * cc.c_prev[j] * f * (T{1} - f);
        da_g[j] = dc_total[j] * i * (T{1} - g * g);
        out.dc_prev[j] = dc_total[j] * f;
    }

    const auto sv = cc.s.values(), hv = cc.h_prev.values(), cpv = cc.c_prev.values(), cv = cc.c.values();
    const std::span<const T> di = da_i.values(), df = da_f.values(), dg = da_g.values(), dov = da_o.values();

    outer_acc(sv, di, grads.w_si);
    outer_acc(sv, df, grads.w_sf);
    outer_acc(sv, dg, grads.w_sc);
    outer_acc(sv, dov, grads.w_so);
    outer_acc(hv, di, grads.w_hi);
    outer_acc(hv, df, grads.w_hf);
    outer_acc(hv, dg, grads.w_hc);
    outer_acc(hv, dov, grads.w_ho);
    outer_acc(cpv, di, grads.w_ci);
    outer_acc(cpv, df, grads.w_cf);
    outer_acc(cv, dov, grads.w_co);
    add_into(di, grads.b_i);
    add_into(df, grads.b_f);
    add_into(dg, grads.b_c);
    add_into(dov, grads.b_o);

    for (const auto &[d, w_s, w_h] : {std::tuple{di, &p.w_si, &p.w_hi}, std::tuple{df, &p.w_sf, &p.w_hf},
                                      std::tuple{dg, &p.w_sc, &p.w_hc}, std::tuple{dov, &p.w_so, &p.w_ho}}) {
        matvec_t_acc(d, *w_s, out.ds.values());
        matvec_t_acc(d, *w_h, out.dh_prev.values());
    }
    matvec_t_acc(di, p.w_ci, out.dc_prev.values());
    matvec_t_acc(df, p.w_cf, out.dc_prev.values());
    return out;
}

// ---- BiLSTM -----------------------------------------------------------------

template <typename T>
BiLstmOutput<T> bilstm_forward(const Tensor<T> &X, std::size_t true_len, const LstmParams<T> &p_fwd,
                               const LstmParams<T> &p_bwd) {
    require(X.rank() == 2, "bilstm_forward: X must be rank 2");
    if (true_len < 1 || true_len > X.dim(0))
        throw InvalidArgument("bilstm_forward: true_len " + std::to_string(true_len) + " outside [1, " +
                              std::to_string(X.dim(0)) + "]");
    const std::size_t k = X.dim(1), H = p_fwd.hidden_size();
    require(p_fwd.input_size() == k && p_bwd.input_size() == k && p_bwd.hidden_size() == H,
            "bilstm_forward: parameter shapes disagree with input");

    BiLstmOutput<T> out;
    out.cache.true_len = true_len;
    out.cache.forward.reserve(true_len);
    out.cache.backward.reserve(true_len);

    auto run = [&](const LstmParams<T> &p, bool reverse, std::vector<LstmCellCache<T>> &steps) {
        Tensor<T> h({H}), c({H}), s({k});
        for (std::size_t step = 0; step < true_len; ++step) {
            const std::size_t pos = reverse ? true_len - 1 - step : step;
            const auto src = X.row(pos);
            std::copy(src.begin(), src.end(), s.values().begin());
            steps.push_back(lstm_cell_forward(s, h, c, p));
            h = steps.back().h;
            c = steps.back().c;
        }
        return h;
    };
    out.forward_final = run(p_fwd, false, out.cache.forward);
    out.backward_final = run(p_bwd, true, out.cache.backward);
    return out;
}

template <typename T>
void bilstm_backward(const BiLstmCache<T> &cache, const LstmParams<T> &p_fwd, const LstmParams<T> &p_bwd,
                     const Tensor<T> &d_forward_final, const Tensor<T> &d_backward_final, LstmParams<T> &grads_fwd,
                     LstmParams<T> &grads_bwd, Tensor<T> &dX) {
    const std::size_t L = cache.true_len;
    require(cache.forward.size() == L && cache.backward.size() == L && dX.rank() == 2 && dX.dim(0) >= L,
            "bilstm_backward: cache does not match gradient buffer");

    auto run = [&](const std::vector<LstmCellCache<T>> &steps, const LstmParams<T> &p, const Tensor<T> &d_final,
                   LstmParams<T> &grads, bool reverse) {
        Tensor<T> dh = d_final;
        Tensor<T> dc({p.hidden_size()});
        for (std::size_t step = L; step-- > 0;) {
            auto g = lstm_cell_backward(steps[step], p, dh, dc, grads);
            const std::size_t pos = reverse ? L - 1 - step : step;
            auto dst = dX.row(pos);
            for (std::size_t j = 0; j < dst.size(); ++j)
                dst[j] += g.ds[j];
            dh = std::move(g.dh_prev);
            dc = std::move(g.dc_prev);
        }
    };
    run(cache.forward, p_fwd, d_forward_final, grads_fwd, false);
    run(cache.backward, p_bwd, d_backward_final, grads_bwd, true);
}

// ---- convolution and pooling -------------------------------------------------

template <typename T>
ConvOutput<T> conv_forward(const Tensor<T> &X, const ConvParams<T> &p, std::size_t true_len) {
    require(X.rank() == 2, "conv_forward: X must be rank 2");
    if (true_len < kConvWidth || true_len > X.dim(0))
        throw InvalidArgument("conv_forward: true_len " + std::to_string(true_len) + " outside [3, " +
                              std::to_string(X.dim(0)) + "]");
    const std::size_t k = X.dim(1), F = p.filter_count();
    require(p.input_size() == k && p.filters.dim(1) == kConvWidth, "conv_forward: filter shape " +
                                                                       shape_string(p.filters.shape()) +
                                                                       " vs input width " + std::to_string(k));
    ConvOutput<T> out;
    out.window = Tensor<T>({true_len, k});
    std::copy(X.data(), X.data() + true_len * k, out.window.data());

    const std::size_t steps = true_len - kConvWidth + 1;
    const std::size_t span = kConvWidth * k; // a window is contiguous in row-major X
    out.map = Tensor<T>({steps, F});
    for (std::size_t t = 0; t < steps; ++t) {
        const T *window = out.window.data() + t * k;
        for (std::size_t f = 0; f < F; ++f) {
            const T *w = p.filters.data() + f * span;
            T acc = p.bias[f];
            for (std::size_t e = 0; e < span; ++e)
                acc += w[e] * window[e];
            out.map(t, f) = acc > T{0} ? acc : T{0};
        }
    }
    return out;
}

template <typename T>
void conv_backward(const ConvOutput<T> &out, const ConvParams<T> &p, const Tensor<T> &d_map, ConvParams<T> &grads,
                   Tensor<T> &dX) {
    require(d_map.shape() == out.map.shape(), "conv_backward: gradient shape " + shape_string(d_map.shape()));
    const std::size_t k = out.window.dim(1), F = p.filter_count();
    const std::size_t span = kConvWidth * k;
    require(dX.rank() == 2 && dX.dim(1) == k && dX.dim(0) >= out.window.dim(0),
            "conv_backward: dX shape " + shape_string(dX.shape()));
    for (std::size_t t = 0; t < out.map.dim(0); ++t) {
        const T *window = out.window.data() + t * k;
        T *dwin = dX.data() + t * k;
        for (std::size_t f = 0; f < F; ++f) {
            if (!(out.map(t, f) > T{0}))
                continue; // ReLU gate closed
            const T d = d_map(t, f);
            const T *w = p.filters.data() + f * span;
            T *gw = grads.filters.data() + f * span;
            grads.bias[f] += d;
            for (std::size_t e = 0; e < span; ++e) {
                gw[e] += d * window[e];
                dwin[e] += d * w[e];
            }
        }
    }
}

template <typename T>
PoolOutput<T> maxpool_over_time(const Tensor<T> &map) {
    require(map.rank() == 2, "maxpool_over_time: map must be rank 2");
    if (map.dim(0) == 0)
        throw InvalidArgument("maxpool_over_time: empty feature map");
    const std::size_t steps = map.dim(0), F = map.dim(1);
    PoolOutput<T> out{Tensor<T>({F}), std::vector<std::size_t>(F, 0), steps};
    for (std::size_t f = 0; f < F; ++f) {
        T best = map(0, f);
        for (std::size_t t = 1; t < steps; ++t)
            if (map(t, f) > best) {
                best = map(t, f);
                out.argmax[f] = t;
            }
        out.pooled[f] = best;
    }
    return out;
}

template <typename T>
Tensor<T> maxpool_backward(const PoolOutput<T> &pool, const Tensor<T> &d_pooled) {
    require_vector(d_pooled, pool.argmax.size(), "maxpool_backward: d_pooled");
    Tensor<T> d_map({pool.steps, pool.argmax.size()});
    for (std::size_t f = 0; f < pool.argmax.size(); ++f)
        d_map(pool.argmax[f], f) = d_pooled[f];
    return d_map;
}

// ---- dense and dropout -------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T> &M, const DenseParams<T> &p) {
    require(p.weight.rank() == 2, "dense_forward: weight must be rank 2");
    require_vector(M, p.weight.dim(0), "dense_forward: M");
    Tensor<T> logits = p.bias;
    vecmat_acc(M.values(), p.weight, logits.values());
    return logits;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T> &M, const DenseParams<T> &p, const Tensor<T> &d_logits,
                         DenseParams<T> &grads) {
    require_vector(d_logits, p.weight.dim(1), "dense_backward: d_logits");
    require_vector(M, p.weight.dim(0), "dense_backward: M");
    outer_acc(M.values(), d_logits.values(), grads.weight);
    add_into(d_logits.values(), grads.bias);
    Tensor<T> dM({M.size()});
    matvec_t_acc(d_logits.values(), p.weight, dM.values());
    return dM;
}

template <typename T>
DropoutOutput<T> dropout(const Tensor<T> &x, double rate, bool training, Rng *rng) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw InvalidArgument("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0)
        return {x, Tensor<T>()};
    if (rng == nullptr)
        throw InvalidArgument("dropout: training mode needs an Rng");
    DropoutOutput<T> out{x, Tensor<T>(x.shape())};
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.mask[i] = rng->uniform() < rate ? T{0} : keep_scale;
        out.y[i] *= out.mask[i];
    }
    return out;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutOutput<T> &out, const Tensor<T> &dy) {
    if (out.mask.empty())
        return dy;
    require(dy.shape() == out.mask.shape(), "dropout_backward: gradient shape " + shape_string(dy.shape()));
    return elementwise(dy, Elementwise::Mul, &out.mask);
}

#define INTENT_INSTANTIATE(T)                                                                                   \
    template struct LstmParams<T>;                                                                              \
    template struct ConvParams<T>;                                                                              \
    template struct DenseParams<T>;                                                                             \
    template Tensor<T> embedding_forward<T>(std::span<const std::int32_t>, const Tensor<T> &);                  \
    template void embedding_backward<T>(std::span<const std::int32_t>, const Tensor<T> &, Tensor<T> &);         \
    template LstmCellCache<T> lstm_cell_forward<T>(const Tensor<T> &, const Tensor<T> &, const Tensor<T> &,    \
                                                   const LstmParams<T> &);                                      \
    template LstmCellInputGrads<T> lstm_cell_backward<T>(const LstmCellCache<T> &, const LstmParams<T> &,      \
                                                         const Tensor<T> &, const Tensor<T> &, LstmParams<T> &); \
    template BiLstmOutput<T> bilstm_forward<T>(const Tensor<T> &, std::size_t, const LstmParams<T> &,          \
                                               const LstmParams<T> &);                                          \
    template void bilstm_backward<T>(const BiLstmCache<T> &, const LstmParams<T> &, const LstmParams<T> &,     \
                                     const Tensor<T> &, const Tensor<T> &, LstmParams<T> &, LstmParams<T> &,   \
                                     Tensor<T> &);                                                              \
    template ConvOutput<T> conv_forward<T>(const Tensor<T> &, const ConvParams<T> &, std::size_t);             \
    template void conv_backward<T>(const ConvOutput<T> &, const ConvParams<T> &, const Tensor<T> &,            \
                                   ConvParams<T> &, Tensor<T> &);                                               \
    template PoolOutput<T> maxpool_over_time<T>(const Tensor<T> &);                                             \
    template Tensor<T> maxpool_backward<T>(const PoolOutput<T> &, const Tensor<T> &);                           \
    template Tensor<T> dense_forward<T>(const Tensor<T> &, const DenseParams<T> &);                             \
    template Tensor<T> dense_backward<T>(const Tensor<T> &, const DenseParams<T> &, const Tensor<T> &,         \
                                         DenseParams<T> &);                                                     \
    template DropoutOutput<T> dropout<T>(const Tensor<T> &, double, bool, Rng *);                               \
    template Tensor<T> dropout_backward<T>(const DropoutOutput<T> &, const Tensor<T> &);

INTENT_INSTANTIATE(float)
INTENT_INSTANTIATE(double)
INTENT_INSTANTIATE(long double)

#undef INTENT_INSTANTIATE

} // namespace intent
