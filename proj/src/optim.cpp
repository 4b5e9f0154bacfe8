#include "intent/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "intent/error.hpp"

namespace intent {

template <typename T>
void adam_step(std::span<Tensor<T> *const> params, std::span<const Tensor<T> *const> grads, AdamState<T> &state,
               double lr) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameter blocks but " +
                         std::to_string(grads.size()) + " gradient blocks");
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b]->shape() != grads[b]->shape())
            throw ShapeError("adam_step: block " + std::to_string(b) + " parameter " +
                             shape_string(params[b]->shape()) + " vs gradient " + shape_string(grads[b]->shape()));
        if (!all_finite(grads[b]->values()))
            throw NumericError("adam_step: non-finite gradient in block " + std::to_string(b));
    }
    if (state.m.empty()) {
        for (const auto *p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    } else if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state tracks a different parameter set");
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(state.beta1, t);
    const double correct2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b]->values();
        const auto g = grads[b]->values();
        auto m = state.m[b].values();
        auto v = state.v[b].values();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double update = lr * (mi / correct1) / (std::sqrt(vi / correct2) + state.epsilon);
            p[i] = static_cast<T>(p[i] - update);
        }
    }
}

template <typename T>
double clip_global_norm(std::span<Tensor<T> *const> grads, double max_norm) {
    double sq = 0.0;
    for (const auto *g : grads)
        for (const T e : g->values())
            sq += static_cast<double>(e) * static_cast<double>(e);
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const T scale = static_cast<T>(max_norm / norm);
        for (auto *g : grads)
            for (auto &e : g->values())
                e *= scale;
    }
    return norm;
}

double reduce_lr_on_plateau(const History &history, double factor, std::size_t patience, double min_lr) {
    if (history.empty())
        throw InvalidArgument("reduce_lr_on_plateau: empty history");
    double lr = history.front().lr;
    double best = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;
    for (const auto &rec : history) {
        if (rec.val_loss < best - kImprovementThreshold) {
            best = rec.val_loss;
            wait = 0;
        } else if (++wait >= patience) {
            lr = std::max(lr * factor, min_lr);
            wait = 0;
        }
    }
    return lr;
}

bool should_stop(const History &history, std::size_t patience) {
    if (history.empty())
        throw InvalidArgument("should_stop: empty history");
    double best = -std::numeric_limits<double>::infinity();
    std::size_t wait = 0;
    for (const auto &rec : history) {
        if (rec.val_micro_f1 > best + kImprovementThreshold) {
            best = rec.val_micro_f1;
            wait = 0;
        } else {
            ++wait;
        }
    }
    return wait >= patience;
}

std::size_t best_epoch(const History &history) {
    std::size_t best = 0;
    double best_f1 = -std::numeric_limits<double>::infinity();
    for (const auto &rec : history)
        if (rec.val_micro_f1 > best_f1 + kImprovementThreshold) {
            best_f1 = rec.val_micro_f1;
            best = rec.epoch;
        }
    return best;
}

template void adam_step<float>(std::span<Tensor<float> *const>, std::span<const Tensor<float> *const>,
                               AdamState<float> &, double);
template void adam_step<double>(std::span<Tensor<double> *const>, std::span<const Tensor<double> *const>,
                                AdamState<double> &, double);
template double clip_global_norm<float>(std::span<Tensor<float> *const>, double);
template double clip_global_norm<double>(std::span<Tensor<double> *const>, double);

} // namespace intent
