#include "doctest.h"

#include <cmath>

#include "intent/error.hpp"
#include "intent/layers.hpp"
#include "support/finite_difference.hpp"

using namespace intent;
using intent::testing::check_tensor;
using intent::testing::dot;

namespace {

constexpr int kSeeds = 20;
constexpr double kTol = 1e-4;

template <typename T>
void randomize(LstmParams<T> &p, Rng &rng, double limit) {
    p.for_each([&](const char *, Tensor<T> &t) { t = uniform_init<T>(rng, t.shape(), limit); });
}

Tensor<double> random_vec(Rng &rng, std::size_t n, double limit = 1.0) { return uniform_init<double>(rng, {n}, limit); }

// Scalar re-derivation of the cell equations, row-vector convention:
// (sW)_j = sum_r s_r W[r][j].
struct ScalarCell {
    std::vector<double> c, h;
};

ScalarCell scalar_cell(const LstmParams<double> &p, const Tensor<double> &s, const Tensor<double> &hp,
                       const Tensor<double> &cp) {
    const std::size_t k = p.input_size(), H = p.hidden_size();
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    auto affine = [&](const Tensor<double> &ws, const Tensor<double> &wh, const Tensor<double> *wc,
                      const std::vector<double> &cvec, const Tensor<double> &b, std::size_t j) {
        double z = b[j];
        for (std::size_t r = 0; r < k; ++r)
            z += s[r] * ws(r, j);
        for (std::size_t r = 0; r < H; ++r)
            z += hp[r] * wh(r, j);
        if (wc)
            for (std::size_t r = 0; r < H; ++r)
                z += cvec[r] * (*wc)(r, j);
        return z;
    };
    std::vector<double> cprev(cp.values().begin(), cp.values().end());
    ScalarCell out{std::vector<double>(H), std::vector<double>(H)};
    for (std::size_t j = 0; j < H; ++j) {
        const double i = sig(affine(p.w_si, p.w_hi, &p.w_ci, cprev, p.b_i, j));
        const double f = sig(affine(p.w_sf, p.w_hf, &p.w_cf, cprev, p.b_f, j));
        const double g = std::tanh(affine(p.w_sc, p.w_hc, nullptr, cprev, p.b_c, j));
        out.c[j] = f * cprev[j] + i * g;
    }
    for (std::size_t j = 0; j < H; ++j) {
        const double o = sig(affine(p.w_so, p.w_ho, &p.w_co, out.c, p.b_o, j));
        out.h[j] = o * std::tanh(out.c[j]);
    }
    return out;
}

} // namespace

TEST_CASE("embedding") {
    Tensor<double> table({4, 2}, std::vector<double>{0, 0, 1, 2, 3, 4, 5, 6});
    std::vector<std::int32_t> idx{2, 0, 3};
    auto X = embedding_forward<double>(idx, table);
    CHECK(X.shape() == Shape{3, 2});
    CHECK(X(0, 0) == 3);
    CHECK(X(0, 1) == 4);
    CHECK(X(1, 0) == 0);
    CHECK(X(1, 1) == 0);
    CHECK(X(2, 1) == 6);

    std::vector<std::int32_t> bad{4};
    CHECK_THROWS_AS(embedding_forward<double>(bad, table), InvalidArgument);
    std::vector<std::int32_t> negative{-1};
    CHECK_THROWS_AS(embedding_forward<double>(negative, table), InvalidArgument);

    SUBCASE("duplicate indices accumulate") {
        Rng rng(1);
        auto E = uniform_init<double>(rng, {5, 3}, 1.0);
        for (std::size_t j = 0; j < 3; ++j)
            E(0, j) = 0;
        std::vector<std::int32_t> seq{3, 1, 3, 0, 3};
        auto w = uniform_init<double>(rng, {5, 3}, 1.0);
        Tensor<double> dE(E.shape());
        embedding_backward<double>(seq, w, dE);
        auto loss = [&] { return dot(embedding_forward<double>(seq, E), w); };
        // PAD row is frozen: no gradient flows to it, so only rows 1.. are compared
        double worst = 0;
        for (std::size_t i = 3; i < E.size(); ++i) {
            const double saved = E[i];
            E[i] = saved + 1e-5;
            const double up = loss();
            E[i] = saved - 1e-5;
            const double down = loss();
            E[i] = saved;
            worst = std::max(worst, intent::testing::rel_error(dE[i], (up - down) / 2e-5));
        }
        CHECK(worst <= kTol);
        CHECK(dE(3, 0) == doctest::Approx(w(0, 0) + w(2, 0) + w(4, 0)));
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(dE(0, j) == 0.0);
    }
}

TEST_CASE("lstm cell closed forms") {
    auto p = LstmParams<double>::zeros(1, 1);
    Tensor<double> s({1}), h({1});
    auto zero = lstm_cell_forward(s, h, Tensor<double>({1}), p);
    CHECK(zero.h[0] == 0.0);
    CHECK(zero.c[0] == 0.0);

    auto one = lstm_cell_forward(s, h, Tensor<double>({1}, 1.0), p);
    CHECK(one.c[0] == doctest::Approx(0.5).epsilon(1e-12));
    // 0.5 * tanh(0.5)
    CHECK(one.h[0] == doctest::Approx(0.231058578630004879).epsilon(1e-12));
    CHECK(std::fabs(one.h[0] - 0.23106) <= 1e-5);

    auto pf = LstmParams<float>::zeros(1, 1);
    auto onef = lstm_cell_forward(Tensor<float>({1}), Tensor<float>({1}), Tensor<float>({1}, 1.0f), pf);
    CHECK(onef.c[0] == 0.5f);
    CHECK(std::fabs(onef.h[0] - 0.23106f) <= 1e-5f);

    CHECK_THROWS_AS(lstm_cell_forward(Tensor<double>({2}), h, h, p), ShapeError);
}

TEST_CASE("lstm cell matches scalar oracle") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(100 + seed);
        auto p = LstmParams<double>::zeros(3, 3);
        randomize(p, rng, 1.0);
        auto s = random_vec(rng, 3), hp = random_vec(rng, 3), cp = random_vec(rng, 3, 2.0);
        auto got = lstm_cell_forward(s, hp, cp, p);
        auto want = scalar_cell(p, s, hp, cp);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::fabs(got.c[j] - want.c[j]) <= 1e-6);
            CHECK(std::fabs(got.h[j] - want.h[j]) <= 1e-6);
        }
    }
}

TEST_CASE("lstm cell backward") {
    SUBCASE("zero upstream gives zero gradients") {
        Rng rng(3);
        auto p = LstmParams<double>::zeros(2, 3);
        randomize(p, rng, 1.0);
        auto cache = lstm_cell_forward(random_vec(rng, 2), random_vec(rng, 3), random_vec(rng, 3), p);
        auto grads = LstmParams<double>::zeros(2, 3);
        auto in = lstm_cell_backward(cache, p, Tensor<double>({3}), Tensor<double>({3}), grads);
        grads.for_each([](const char *, const Tensor<double> &t) {
            for (double v : t.values())
                CHECK(v == 0.0);
        });
        for (double v : in.ds.values())
            CHECK(v == 0.0);
        for (double v : in.dc_prev.values())
            CHECK(v == 0.0);
    }
    SUBCASE("finite differences over seeds") {
        for (int seed = 0; seed < kSeeds; ++seed) {
            Rng rng(200 + seed);
            const std::size_t k = 1 + rng.below(5), H = 1 + rng.below(4);
            auto p = LstmParams<double>::zeros(k, H);
            randomize(p, rng, 1.0);
            auto s = random_vec(rng, k), hp = random_vec(rng, H), cp = random_vec(rng, H);
            auto wh = random_vec(rng, H), wc = random_vec(rng, H);
            auto loss = [&] {
                auto c = lstm_cell_forward(s, hp, cp, p);
                return dot(c.h, wh) + dot(c.c, wc);
            };
            auto grads = LstmParams<double>::zeros(k, H);
            auto in = lstm_cell_backward(lstm_cell_forward(s, hp, cp, p), p, wh, wc, grads);

            double worst = 0;
            std::vector<Tensor<double> *> ptensors, gtensors;
            p.for_each([&](const char *, Tensor<double> &t) { ptensors.push_back(&t); });
            grads.for_each([&](const char *, Tensor<double> &t) { gtensors.push_back(&t); });
            for (std::size_t b = 0; b < ptensors.size(); ++b)
                worst = std::max(worst, check_tensor(*ptensors[b], *gtensors[b], loss));
            worst = std::max(worst, check_tensor(s, in.ds, loss));
            worst = std::max(worst, check_tensor(hp, in.dh_prev, loss));
            worst = std::max(worst, check_tensor(cp, in.dc_prev, loss));
            CHECK_MESSAGE(worst <= kTol, "seed " << seed);
        }
    }
}

TEST_CASE("bilstm") {
    SUBCASE("single step equals one cell") {
        Rng rng(1);
        auto pf = LstmParams<double>::zeros(3, 2), pb = LstmParams<double>::zeros(3, 2);
        randomize(pf, rng, 1.0);
        randomize(pb, rng, 1.0);
        auto X = uniform_init<double>(rng, {1, 3}, 1.0);
        auto out = bilstm_forward(X, 1, pf, pb);
        Tensor<double> s({3}, std::vector<double>(X.values().begin(), X.values().end()));
        CHECK(out.forward_final == lstm_cell_forward(s, Tensor<double>({2}), Tensor<double>({2}), pf).h);
        CHECK(out.backward_final == lstm_cell_forward(s, Tensor<double>({2}), Tensor<double>({2}), pb).h);
    }
    SUBCASE("palindrome with shared parameters") {
        Rng rng(2);
        auto p = LstmParams<float>::zeros(4, 3);
        randomize(p, rng, 1.0);
        auto rows = uniform_init<float>(rng, {3, 4}, 1.0);
        Tensor<float> X({5, 4});
        const std::size_t order[] = {0, 1, 2, 1, 0};
        for (std::size_t t = 0; t < 5; ++t)
            for (std::size_t j = 0; j < 4; ++j)
                X(t, j) = rows(order[t], j);
        auto out = bilstm_forward(X, 5, p, p);
        CHECK(out.forward_final == out.backward_final);
    }
    SUBCASE("positions past true_len are ignored") {
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            auto pf = LstmParams<float>::zeros(3, 2), pb = LstmParams<float>::zeros(3, 2);
            randomize(pf, rng, 1.0);
            randomize(pb, rng, 1.0);
            const std::size_t len = 1 + rng.below(5);
            auto X = uniform_init<float>(rng, {len, 3}, 1.0);
            Tensor<float> padded({len + 1 + rng.below(5), 3}, 9.0f);
            for (std::size_t i = 0; i < X.size(); ++i)
                padded[i] = X[i];
            auto a = bilstm_forward(X, len, pf, pb);
            auto b = bilstm_forward(padded, len, pf, pb);
            CHECK(a.forward_final == b.forward_final);
            CHECK(a.backward_final == b.backward_final);
        }
    }
    SUBCASE("true_len out of range") {
        auto p = LstmParams<double>::zeros(2, 2);
        Tensor<double> X({3, 2});
        CHECK_THROWS_AS(bilstm_forward(X, 0, p, p), InvalidArgument);
        CHECK_THROWS_AS(bilstm_forward(X, 4, p, p), InvalidArgument);
    }
    SUBCASE("finite differences over seeds") {
        for (int seed = 0; seed < kSeeds; ++seed) {
            Rng rng(300 + seed);
            const std::size_t n = 1 + rng.below(6), k = 1 + rng.below(5), H = 1 + rng.below(4);
            const std::size_t len = 1 + rng.below(n);
            auto pf = LstmParams<double>::zeros(k, H), pb = LstmParams<double>::zeros(k, H);
            randomize(pf, rng, 1.0);
            randomize(pb, rng, 1.0);
            auto X = uniform_init<double>(rng, {n, k}, 1.0);
            auto wf = random_vec(rng, H), wb = random_vec(rng, H);
            auto loss = [&] {
                auto o = bilstm_forward(X, len, pf, pb);
                return dot(o.forward_final, wf) + dot(o.backward_final, wb);
            };
            auto gf = LstmParams<double>::zeros(k, H), gb = LstmParams<double>::zeros(k, H);
            Tensor<double> dX(X.shape());
            bilstm_backward(bilstm_forward(X, len, pf, pb).cache, pf, pb, wf, wb, gf, gb, dX);

            double worst = check_tensor(X, dX, loss);
            for (auto [params, grads] : {std::pair{&pf, &gf}, std::pair{&pb, &gb}}) {
                std::vector<Tensor<double> *> ps, gs;
                params->for_each([&](const char *, Tensor<double> &t) { ps.push_back(&t); });
                grads->for_each([&](const char *, Tensor<double> &t) { gs.push_back(&t); });
                for (std::size_t b = 0; b < ps.size(); ++b)
                    worst = std::max(worst, check_tensor(*ps[b], *gs[b], loss));
            }
            for (std::size_t t = len; t < n; ++t)
                for (std::size_t j = 0; j < k; ++j)
                    CHECK(dX(t, j) == 0.0);
            CHECK_MESSAGE(worst <= kTol, "seed " << seed);
        }
    }
}

TEST_CASE("conv") {
    SUBCASE("window sums") {
        auto p = ConvParams<double>::zeros(1, 1);
        p.filters.fill(1.0);
        Tensor<double> X({4, 1}, std::vector<double>{1, 2, 3, 4});
        auto out = conv_forward(X, p, 4);
        CHECK(out.map == Tensor<double>({2, 1}, std::vector<double>{6, 9}));
    }
    SUBCASE("zero parameters") {
        auto p = ConvParams<double>::zeros(3, 2);
        Rng rng(1);
        auto out = conv_forward(uniform_init<double>(rng, {5, 3}, 1.0), p, 5);
        CHECK(out.map == Tensor<double>({3, 2}));
    }
    SUBCASE("relu clamps negatives") {
        auto p = ConvParams<double>::zeros(1, 1);
        p.filters.fill(-1.0);
        Tensor<double> X({3, 1}, std::vector<double>{1, 2, 3});
        CHECK(conv_forward(X, p, 3).map[0] == 0.0);
    }
    SUBCASE("output length is true_len - 2") {
        auto p = ConvParams<float>::zeros(2, 2);
        Tensor<float> X({10, 2});
        for (std::size_t len = 3; len <= 10; ++len)
            CHECK(conv_forward(X, p, len).map.dim(0) == len - 2);
        CHECK_THROWS_AS(conv_forward(X, p, 2), InvalidArgument);
        CHECK_THROWS_AS(conv_forward(X, p, 11), InvalidArgument);
    }
    SUBCASE("finite differences over seeds") {
        for (int seed = 0; seed < kSeeds; ++seed) {
            Rng rng(400 + seed);
            const std::size_t n = 3 + rng.below(4), k = 1 + rng.below(5), F = 1 + rng.below(3);
            const std::size_t len = 3 + rng.below(n - 2);
            auto p = ConvParams<double>::zeros(k, F);
            p.filters = uniform_init<double>(rng, p.filters.shape(), 1.0);
            p.bias = uniform_init<double>(rng, p.bias.shape(), 1.0);
            auto X = uniform_init<double>(rng, {n, k}, 1.0);
            auto w = uniform_init<double>(rng, {len - 2, F}, 1.0);
            auto loss = [&] { return dot(conv_forward(X, p, len).map, w); };
            auto grads = ConvParams<double>::zeros(k, F);
            Tensor<double> dX(X.shape());
            conv_backward(conv_forward(X, p, len), p, w, grads, dX);
            double worst = check_tensor(X, dX, loss);
            worst = std::max(worst, check_tensor(p.filters, grads.filters, loss));
            worst = std::max(worst, check_tensor(p.bias, grads.bias, loss));
            CHECK_MESSAGE(worst <= kTol, "seed " << seed);
        }
    }
}

TEST_CASE("max pooling") {
    SUBCASE("single row") {
        Tensor<double> map({1, 3}, std::vector<double>{1, -2, 3});
        CHECK(maxpool_over_time(map).pooled == Tensor<double>({3}, std::vector<double>{1, -2, 3}));
    }
    SUBCASE("column 3,7,2") {
        Tensor<double> map({3, 1}, std::vector<double>{3, 7, 2});
        auto pool = maxpool_over_time(map);
        CHECK(pool.pooled[0] == 7);
        CHECK(pool.argmax[0] == 1);
    }
    SUBCASE("tie routes to first") {
        Tensor<double> map({2, 1}, std::vector<double>{5, 5});
        auto pool = maxpool_over_time(map);
        CHECK(pool.pooled[0] == 5);
        CHECK(pool.argmax[0] == 0);
        auto d = maxpool_backward(pool, Tensor<double>({1}, 1.0));
        CHECK(d == Tensor<double>({2, 1}, std::vector<double>{1, 0}));
    }
    SUBCASE("gradient is one-sparse per column") {
        Rng rng(4);
        auto map = uniform_init<double>(rng, {6, 3}, 1.0);
        auto pool = maxpool_over_time(map);
        auto d = maxpool_backward(pool, Tensor<double>({3}, std::vector<double>{1, 2, 3}));
        for (std::size_t f = 0; f < 3; ++f) {
            int nonzero = 0;
            for (std::size_t t = 0; t < 6; ++t)
                nonzero += d(t, f) != 0.0;
            CHECK(nonzero == 1);
            CHECK(d(pool.argmax[f], f) == double(f + 1));
        }
    }
    SUBCASE("empty map") { CHECK_THROWS_AS(maxpool_over_time(Tensor<double>({0, 2})), InvalidArgument); }
}

TEST_CASE("dense") {
    SUBCASE("zero weight gives bias") {
        auto p = DenseParams<double>::zeros(3, 2);
        p.bias = Tensor<double>({2}, std::vector<double>{0.25, -1});
        CHECK(dense_forward(Tensor<double>({3}, 4.0), p) == p.bias);
    }
    SUBCASE("identity weight") {
        auto p = DenseParams<double>::zeros(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            p.weight(i, i) = 1;
        p.bias = Tensor<double>({3}, std::vector<double>{1, 2, 3});
        Tensor<double> M({3}, std::vector<double>{0.5, -0.5, 2});
        CHECK(dense_forward(M, p) == Tensor<double>({3}, std::vector<double>{1.5, 1.5, 5}));
    }
    SUBCASE("naive dot oracle and finite differences") {
        for (int seed = 0; seed < kSeeds; ++seed) {
            Rng rng(500 + seed);
            const std::size_t in = 1 + rng.below(8), C = 1 + rng.below(5);
            auto p = DenseParams<double>::zeros(in, C);
            p.weight = uniform_init<double>(rng, p.weight.shape(), 1.0);
            p.bias = uniform_init<double>(rng, p.bias.shape(), 1.0);
            auto M = random_vec(rng, in);
            auto logits = dense_forward(M, p);
            for (std::size_t c = 0; c < C; ++c) {
                double z = p.bias[c];
                for (std::size_t r = 0; r < in; ++r)
                    z += M[r] * p.weight(r, c);
                CHECK(std::fabs(logits[c] - z) <= 1e-6);
            }
            auto w = random_vec(rng, C);
            auto loss = [&] { return dot(dense_forward(M, p), w); };
            auto grads = DenseParams<double>::zeros(in, C);
            auto dM = dense_backward(M, p, w, grads);
            double worst = check_tensor(M, dM, loss);
            worst = std::max(worst, check_tensor(p.weight, grads.weight, loss));
            worst = std::max(worst, check_tensor(p.bias, grads.bias, loss));
            CHECK(worst <= kTol);
        }
    }
    SUBCASE("shape mismatch") {
        auto p = DenseParams<double>::zeros(3, 2);
        CHECK_THROWS_AS(dense_forward(Tensor<double>({4}), p), ShapeError);
    }
}

TEST_CASE("dropout") {
    Rng rng(9);
    Tensor<float> x({5}, std::vector<float>{1, 2, 3, 4, 5});
    SUBCASE("rate 0 is identity") {
        auto out = dropout(x, 0.0, true, &rng);
        CHECK(out.y == x);
        CHECK(out.mask.empty());
    }
    SUBCASE("inference is identity") {
        auto out = dropout(x, 0.9, false, nullptr);
        CHECK(out.y == x);
        CHECK(out.mask.empty());
        CHECK(dropout_backward(out, x) == x);
    }
    SUBCASE("inverted scaling keeps the mean") {
        Tensor<double> ones({100000}, 1.0);
        auto out = dropout(ones, 0.5, true, &rng);
        double mean = 0;
        std::size_t zeros = 0;
        for (double v : out.y.values()) {
            mean += v;
            zeros += v == 0.0;
            CHECK((v == 0.0 || v == 2.0));
        }
        mean /= ones.size();
        CHECK(std::fabs(mean - 1.0) < 0.02);
        CHECK(zeros > 45000);
        CHECK(zeros < 55000);
    }
    SUBCASE("backward applies the same mask") {
        auto out = dropout(x, 0.5, true, &rng);
        auto d = dropout_backward(out, Tensor<float>({5}, 1.0f));
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(d[i] * x[i] == out.y[i]);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(dropout(x, 1.0, true, &rng), InvalidArgument);
        CHECK_THROWS_AS(dropout(x, -0.1, true, &rng), InvalidArgument);
    }
}
