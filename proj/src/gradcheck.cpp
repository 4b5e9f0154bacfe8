#include "intent/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "intent/error.hpp"

namespace intent {

double sample_loss(const HybridParams<double> &params, const Sample &sample) {
    const auto fwd = forward(params, sample.input.indices, sample.input.true_len, false, 0.0, nullptr);
    const double loss = cross_entropy(fwd.probs, sample.label).loss;
    if (!std::isfinite(loss))
        throw NumericError("gradient_check: non-finite loss");
    return loss;
}

HybridParams<double> analytic_gradient(const HybridParams<double> &params, const Sample &sample) {
    auto grads = HybridParams<double>::zeros(params.dims());
    accumulate_sample_gradient(params, sample, false, 0.0, nullptr, grads);
    return grads;
}

namespace {

Tensor<double> &find_block(HybridParams<double> &params, const std::string &block) {
    Tensor<double> *found = nullptr;
    params.for_each([&](const std::string &name, Tensor<double> &t) {
        if (name == block)
            found = &t;
    });
    if (!found)
        throw InvalidArgument("no parameter block named '" + block + "'");
    return *found;
}

double central_difference(HybridParams<double> &work, Tensor<double> &block, std::size_t index, const Sample &sample,
                          double eps) {
    const double saved = block[index];
    block[index] = saved + eps;
    const double up = sample_loss(work, sample);
    block[index] = saved - eps;
    const double down = sample_loss(work, sample);
    block[index] = saved;
    return (up - down) / (2.0 * eps);
}

} // namespace

double numeric_gradient(const HybridParams<double> &params, const Sample &sample, const std::string &block,
                        std::size_t index, double eps) {
    HybridParams<double> work = params;
    Tensor<double> &t = find_block(work, block);
    if (index >= t.size())
        throw InvalidArgument("numeric_gradient: index out of range for " + block);
    return central_difference(work, t, index, sample, eps);
}

namespace {

template <typename N>
N loss_at(const HybridParams<N> &params, const Sample &sample) {
    const auto fwd = forward(params, sample.input.indices, sample.input.true_len, false, 0.0, nullptr);
    const N loss = -std::log(fwd.probs[sample.label]);
    if (!std::isfinite(static_cast<double>(loss)))
        throw NumericError("gradient_check: non-finite loss");
    return loss;
}

template <typename N>
HybridParams<N> lift(const HybridParams<double> &params) {
    auto out = HybridParams<N>::zeros(params.dims());
    std::vector<const Tensor<double> *> src;
    params.for_each([&](const std::string &, const Tensor<double> &t) { src.push_back(&t); });
    std::size_t b = 0;
    out.for_each([&](const std::string &, Tensor<N> &t) { t = tensor_cast<N>(*src[b++]); });
    return out;
}

// Shared driver: analytic side always in double, numeric side in N.
template <typename N>
GradCheckReport check_impl(const HybridParams<double> &params, const Sample &sample, N eps,
                           const GradientFn &gradient) {
    if (!(eps > N{0}))
        throw InvalidArgument("gradient_check: eps must be positive");
    const HybridParams<double> analytic = gradient(params, sample);

    std::vector<const Tensor<double> *> analytic_blocks;
    analytic.for_each([&](const std::string &, const Tensor<double> &t) { analytic_blocks.push_back(&t); });

    HybridParams<N> work = lift<N>(params);
    GradCheckReport report;
    std::size_t b = 0;
    work.for_each([&](const std::string &name, Tensor<N> &t) {
        const Tensor<double> &a = *analytic_blocks[b++];
        if (a.shape() != t.shape())
            throw ShapeError("gradient_check: analytic gradient for " + name + " has shape " +
                             shape_string(a.shape()));
        BlockCheck check;
        check.name = name;
        // The PAD embedding row is frozen, not trainable.
        const std::size_t first = name == "embedding" ? t.dim(1) : 0;
        for (std::size_t i = first; i < t.size(); ++i) {
            const N saved = t[i];
            t[i] = saved + eps;
            const N up = loss_at(work, sample);
            t[i] = saved - eps;
            const N down = loss_at(work, sample);
            t[i] = saved;
            const double num = static_cast<double>((up - down) / (N{2} * eps));
            const double ana = a[i];
            const double denom = std::max({std::abs(ana), std::abs(num), 1e-8});
            const double rel = std::abs(ana - num) / denom;
            ++check.scalars;
            if (rel > check.max_rel_error || check.scalars == 1) {
                check.max_rel_error = rel;
                check.worst_index = i;
                check.analytic = ana;
                check.numeric = num;
            }
        }
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.blocks.push_back(std::move(check));
    });
    return report;
}

} // namespace

GradCheckReport gradient_check(const HybridParams<double> &params, const Sample &sample, double eps,
                               const GradientFn &gradient) {
    return check_impl<double>(params, sample, eps, gradient);
}

GradCheckReport gradient_check_extended(const HybridParams<double> &params, const Sample &sample, long double eps,
                                        const GradientFn &gradient) {
    return check_impl<long double>(params, sample, eps, gradient);
}

GradCheckCase random_check_case(std::uint64_t seed, const ModelDims &dims, std::size_t length) {
    if (length < kMinSequence || dims.vocab < 3)
        throw InvalidArgument("random_check_case: need length >= 3 and vocab >= 3");
    Rng rng(seed);
    GradCheckCase c{HybridParams<double>::zeros(dims), {}};
    c.params.for_each([&](const std::string &, Tensor<double> &t) { t = uniform_init<double>(rng, t.shape(), 0.5); });
    std::fill(c.params.embedding.row(Vocab::kPad).begin(), c.params.embedding.row(Vocab::kPad).end(), 0.0);

    c.sample.input.indices.assign(length, Vocab::kPad);
    c.sample.input.true_len = length;
    for (std::size_t t = 0; t < length; ++t)
        c.sample.input.indices[t] = static_cast<std::int32_t>(2 + rng.below(dims.vocab - 2));
    c.sample.label = rng.below(dims.classes);
    return c;
}

ModelDims gradcheck_dims() { return {8, 4, 3, 2, 4}; }

} // namespace intent
