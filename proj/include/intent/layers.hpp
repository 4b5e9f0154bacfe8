#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "intent/rng.hpp"
#include "intent/tensor.hpp"

namespace intent {

inline constexpr std::size_t kConvWidth = 3;

// Parameters of one LSTM direction, laid out for row-vector products
// (x[k] . W[k x H]). The cell-feedback weights w_ci, w_cf, w_co are full
// H x H matrices rather than the diagonal peepholes found in most LSTM
// libraries.
template <typename T>
struct LstmParams {
    Tensor<T> w_si, w_sf, w_sc, w_so; // k x H
    Tensor<T> w_hi, w_hf, w_hc, w_ho; // H x H
    Tensor<T> w_ci, w_cf, w_co;       // H x H
    Tensor<T> b_i, b_f, b_c, b_o;     // H

    static LstmParams zeros(std::size_t input, std::size_t hidden);

    std::size_t input_size() const { return w_si.dim(0); }
    std::size_t hidden_size() const { return w_si.dim(1); }

    // Visits every block as (short name, tensor) in a fixed order.
    template <typename F>
    void for_each(F &&f) { visit(*this, f); }
    template <typename F>
    void for_each(F &&f) const { visit(*this, f); }

  private:
    template <typename Self, typename F>
    static void visit(Self &self, F &f) {
        f("w_si", self.w_si), f("w_sf", self.w_sf), f("w_sc", self.w_sc), f("w_so", self.w_so);
        f("w_hi", self.w_hi), f("w_hf", self.w_hf), f("w_hc", self.w_hc), f("w_ho", self.w_ho);
        f("w_ci", self.w_ci), f("w_cf", self.w_cf), f("w_co", self.w_co);
        f("b_i", self.b_i), f("b_f", self.b_f), f("b_c", self.b_c), f("b_o", self.b_o);
    }
};

template <typename T>
struct ConvParams {
    Tensor<T> filters; // F x 3 x k
    Tensor<T> bias;    // F

    static ConvParams zeros(std::size_t input, std::size_t filters);
    std::size_t filter_count() const { return filters.dim(0); }
    std::size_t input_size() const { return filters.dim(2); }
};

template <typename T>
struct DenseParams {
    Tensor<T> weight; // in x C
    Tensor<T> bias;   // C

    static DenseParams zeros(std::size_t input, std::size_t classes);
};

// ---- embedding ------------------------------------------------------------

// Row lookup; returns n x k. Index 0 (PAD) must map to a zero row, which the
// optimizer never updates.
template <typename T>
Tensor<T> embedding_forward(std::span<const std::int32_t> indices, const Tensor<T> &table);

// dTable[indices[t]] += dX[t] for t < dX rows, skipping PAD.
template <typename T>
void embedding_backward(std::span<const std::int32_t> indices, const Tensor<T> &dX, Tensor<T> &dTable);

// ---- LSTM cell --------------------------------------------------------------

// Everything lstm_cell_backward needs from one forward step.
template <typename T>
struct LstmCellCache {
    Tensor<T> s, h_prev, c_prev;
    Tensor<T> i, f, g, o; // gate activations; g = tanh candidate
    Tensor<T> c, tanh_c, h;
};

//   i = sigmoid(s W_si + h_prev W_hi + c_prev W_ci + b_i)
//   f = sigmoid(s W_sf + h_prev W_hf + c_prev W_cf + b_f)
//   c = f * c_prev + i * tanh(s W_sc + h_prev W_hc + b_c)
//   o = sigmoid(s W_so + h_prev W_ho + c W_co + b_o)     (new c)
//   h = o * tanh(c)
template <typename T>
LstmCellCache<T> lstm_cell_forward(const Tensor<T> &s, const Tensor<T> &h_prev, const Tensor<T> &c_prev,
                                   const LstmParams<T> &p);

template <typename T>
struct LstmCellInputGrads {
    Tensor<T> ds, dh_prev, dc_prev;
};

// Adds parameter gradients into `grads` and returns gradients for the
// step's inputs. `dc` is the gradient flowing into c from later steps.
template <typename T>
LstmCellInputGrads<T> lstm_cell_backward(const LstmCellCache<T> &cache, const LstmParams<T> &p, const Tensor<T> &dh,
                                         const Tensor<T> &dc, LstmParams<T> &grads);

// ---- BiLSTM -----------------------------------------------------------------

template <typename T>
struct BiLstmCache {
    std::size_t true_len = 0;
    std::vector<LstmCellCache<T>> forward;  // positions 0 .. true_len-1
    std::vector<LstmCellCache<T>> backward; // positions true_len-1 .. 0
};

template <typename T>
struct BiLstmOutput {
    Tensor<T> forward_final;  // Lf
    Tensor<T> backward_final; // Lb
    BiLstmCache<T> cache;
};

// Runs both directions over X rows [0, true_len) only, starting from zero
// state, and returns the final hidden state of each.
template <typename T>
BiLstmOutput<T> bilstm_forward(const Tensor<T> &X, std::size_t true_len, const LstmParams<T> &p_fwd,
                               const LstmParams<T> &p_bwd);

// Accumulates into grads_fwd/grads_bwd and dX (n x k, same shape as X).
template <typename T>
void bilstm_backward(const BiLstmCache<T> &cache, const LstmParams<T> &p_fwd, const LstmParams<T> &p_bwd,
                     const Tensor<T> &d_forward_final, const Tensor<T> &d_backward_final, LstmParams<T> &grads_fwd,
                     LstmParams<T> &grads_bwd, Tensor<T> &dX);

// ---- convolution and pooling -------------------------------------------------

template <typename T>
struct ConvOutput {
    Tensor<T> map;    // (true_len - 2) x F, after ReLU
    Tensor<T> window; // true_len x k copy of the input rows
};

// Valid width-3 convolution over X rows [0, true_len), ReLU activation.
template <typename T>
ConvOutput<T> conv_forward(const Tensor<T> &X, const ConvParams<T> &p, std::size_t true_len);

template <typename T>
void conv_backward(const ConvOutput<T> &out, const ConvParams<T> &p, const Tensor<T> &d_map, ConvParams<T> &grads,
                   Tensor<T> &dX);

template <typename T>
struct PoolOutput {
    Tensor<T> pooled;                // F
    std::vector<std::size_t> argmax; // per feature, first maximum
    std::size_t steps = 0;
};

template <typename T>
PoolOutput<T> maxpool_over_time(const Tensor<T> &map);

template <typename T>
Tensor<T> maxpool_backward(const PoolOutput<T> &pool, const Tensor<T> &d_pooled);

// ---- dense and dropout -------------------------------------------------------

// logits = M W + b
template <typename T>
Tensor<T> dense_forward(const Tensor<T> &M, const DenseParams<T> &p);

// Accumulates into grads and returns dM.
template <typename T>
Tensor<T> dense_backward(const Tensor<T> &M, const DenseParams<T> &p, const Tensor<T> &d_logits,
                         DenseParams<T> &grads);

template <typename T>
struct DropoutOutput {
    Tensor<T> y;
    Tensor<T> mask; // empty when the layer acted as identity
};

// Inverted dropout: in training, zero each entry with probability `rate` and
// scale survivors by 1/(1-rate). Identity otherwise.
template <typename T>
DropoutOutput<T> dropout(const Tensor<T> &x, double rate, bool training, Rng *rng);

template <typename T>
Tensor<T> dropout_backward(const DropoutOutput<T> &out, const Tensor<T> &dy);

} // namespace intent
