#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "intent/tensor.hpp"

namespace intent {

template <typename T>
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::vector<Tensor<T>> m; // first moments, one per parameter block
    std::vector<Tensor<T>> v; // second moments
};

// One bias-corrected Adam update over parallel lists of parameter and
// gradient blocks. Moments are created lazily on the first call. Throws
// ShapeError on mismatched blocks and NumericError (before touching any
// parameter) on a non-finite gradient.
template <typename T>
void adam_step(std::span<Tensor<T> *const> params, std::span<const Tensor<T> *const> grads, AdamState<T> &state,
               double lr);

// Scales grads in place so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
template <typename T>
double clip_global_norm(std::span<Tensor<T> *const> grads, double max_norm);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_micro_f1 = 0.0;
    double lr = 0.0;

    bool operator==(const EpochRecord &) const = default;
};

using History = std::vector<EpochRecord>;

inline constexpr double kImprovementThreshold = 1e-4;

// Replays the plateau rule over the history and returns the learning rate
// for the next epoch: whenever validation loss fails to beat its best by
// kImprovementThreshold for `patience` consecutive epochs,
// lr <- max(lr * factor, min_lr) and the counter restarts. The starting rate
// is history.front().lr.
double reduce_lr_on_plateau(const History &history, double factor, std::size_t patience, double min_lr);

// True when validation micro-F1 has not improved by kImprovementThreshold
// for `patience` consecutive epochs.
bool should_stop(const History &history, std::size_t patience);

// 1-based epoch with the best validation micro-F1 (earliest on ties), or 0.
std::size_t best_epoch(const History &history);

} // namespace intent
