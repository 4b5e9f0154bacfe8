#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "intent/model.hpp"

namespace intent {

// Loss of one sample in inference mode (no dropout).
double sample_loss(const HybridParams<double> &params, const Sample &sample);

// Backprop gradient of sample_loss; the default analytic side of the check.
HybridParams<double> analytic_gradient(const HybridParams<double> &params, const Sample &sample);

using GradientFn = std::function<HybridParams<double>(const HybridParams<double> &, const Sample &)>;

// Central difference (loss(theta + eps) - loss(theta - eps)) / (2 eps) for
// one scalar of the named block.
double numeric_gradient(const HybridParams<double> &params, const Sample &sample, const std::string &block,
                        std::size_t index, double eps);

struct BlockCheck {
    std::string name;
    std::size_t scalars = 0;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<BlockCheck> blocks;
};

// Compares `gradient` against central differences for every trainable scalar
// (the frozen PAD embedding row is excluded) and reports the worst
// |a - n| / max(|a|, |n|, 1e-8) overall and per block. Throws NumericError if
// any perturbed loss is non-finite.
GradCheckReport gradient_check(const HybridParams<double> &params, const Sample &sample, double eps = 1e-5,
                               const GradientFn &gradient = analytic_gradient);

// Same comparison with the loss evaluated in long double (80-bit on x86-64).
// Its finite differences resolve gradients a few orders of magnitude
// smaller than 64-bit ones can, which separates roundoff in the numeric side
// from genuine backward errors.
GradCheckReport gradient_check_extended(const HybridParams<double> &params, const Sample &sample,
                                        long double eps = 1e-7L, const GradientFn &gradient = analytic_gradient);

struct GradCheckCase {
    HybridParams<double> params;
    Sample sample;
};

// Random parameters in [-0.5, 0.5] (PAD row zero) and an unpadded random
// sample of `length` non-reserved tokens.
GradCheckCase random_check_case(std::uint64_t seed, const ModelDims &dims, std::size_t length);

// Down-scaled configuration used by the `gradcheck` command: n=5, k=4, H=3,
// F=2, C=4.
ModelDims gradcheck_dims();
inline constexpr std::size_t kGradcheckLength = 5;

} // namespace intent
