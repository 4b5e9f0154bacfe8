// Acceptance suite. Prints one line per criterion:
//   criterion N: PASS|FAIL|SKIP  <detail>
// With no arguments all criteria run; `acceptance_test N` runs one.
// Exit status is 0 when every selected criterion passes or skips, 77 when
// all selected criteria skipped, 1 otherwise.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "intent/baseline.hpp"
#include "intent/gradcheck.hpp"
#include "intent/serialize.hpp"
#include "intent/train.hpp"
#include "support/synthetic.hpp"

using namespace intent;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

std::string fmt(const char *format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Verdict gradient_integrity() {
    const auto t0 = std::chrono::steady_clock::now();
    double strict = 0, extended = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto c = random_check_case(seed, gradcheck_dims(), kGradcheckLength);
        strict = std::max(strict, gradient_check(c.params, c.sample, 1e-5).max_rel_error);
        extended = std::max(extended, gradient_check_extended(c.params, c.sample).max_rel_error);
    }
    const double secs = seconds_since(t0);
    const bool ok = strict <= 1e-4 && secs < 60;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("64-bit max_rel_error %.3e (tol 1e-4), 20 seeds, %.1fs; 80-bit cross-check %.3e", strict, secs,
                extended)};
}

Verdict closed_forms() {
    auto p = LstmParams<double>::zeros(1, 1);
    const auto cell = lstm_cell_forward(Tensor<double>({1}), Tensor<double>({1}), Tensor<double>({1}, 1.0), p);
    const auto uniform = softmax(Tensor<double>({31}));
    double spread = 0;
    for (double v : uniform.values())
        spread = std::max(spread, std::fabs(v - 1.0 / 31));
    const double ce = cross_entropy(uniform, 0).loss;
    const bool ok = std::fabs(cell.c[0] - 0.5) <= 1e-12 && std::fabs(cell.h[0] - 0.23106) <= 1e-5 &&
                    spread <= 1e-15 && std::fabs(ce - 3.4340) <= 1e-4;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("c=%.6f h=%.6f softmax(0) spread %.1e CE %.6f", cell.c[0], cell.h[0], spread, ce)};
}

Verdict padding_invariance() {
    Rng rng(31);
    const ModelDims dims{40, 16, 8, 6, 31};
    const auto params = init_params<float>(dims, rng);
    std::size_t differing = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t len = 3 + rng.below(20);
        std::vector<std::int32_t> idx(len);
        for (auto &i : idx)
            i = static_cast<std::int32_t>(1 + rng.below(dims.vocab - 1));
        const auto base = forward(params, idx, len, false, 0.5, nullptr);
        for (std::size_t extra : {std::size_t{1}, std::size_t{7}, 1 + rng.below(40)}) {
            auto padded = idx;
            padded.resize(len + extra, Vocab::kPad);
            const auto out = forward(params, padded, len, false, 0.5, nullptr);
            const auto &a = base.cache, &b = out.cache;
            const bool same = a.logits == b.logits && base.probs == out.probs && a.pool.pooled == b.pool.pooled &&
                              a.fused.y == b.fused.y;
            differing += !same;
        }
    }
    return {differing == 0 ? Outcome::Pass : Outcome::Fail,
            fmt("100 utterances x 3 pad lengths, %zu differing", differing)};
}

Verdict overfit() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto corpus = intent::testing::separable_corpus(8, 8, 2024);
    TrainConfig config; // batch 10, lr 0.001, plateau factor 0.1, H = F = 50, k = 64
    config.max_epochs = 200;
    const auto result = train(config, corpus, corpus);
    const double acc = evaluate(result.model, corpus).accuracy;
    const double secs = seconds_since(t0);
    return {acc >= 0.99 && secs < 120 ? Outcome::Pass : Outcome::Fail,
            fmt("training accuracy %.4f after %zu epochs (best %zu), %.1fs", acc, result.history.size(),
                result.best_epoch, secs)};
}

Verdict baseline_ladder() {
    const auto t0 = std::chrono::steady_clock::now();
    auto all = intent::testing::noisy_corpus(500, 10, 0.2, 77);
    Rng rng(78);
    for (std::size_t i = all.size() - 1; i > 0; --i)
        std::swap(all[i], all[rng.below(i + 1)]);
    const std::vector<Utterance> train_split(all.begin(), all.begin() + 300), dev(all.begin() + 300, all.begin() + 400),
        test(all.begin() + 400, all.end());
    TrainConfig config;
    config.max_epochs = 60;
    const auto hybrid = train(config, train_split, dev);
    const double hybrid_f1 = evaluate(hybrid.model, test).micro_f1;
    const double nb_f1 = evaluate_nb(train_nb(train_split, build_vocab(train_split)), test).micro_f1;
    const double secs = seconds_since(t0);
    return {hybrid_f1 >= nb_f1 && secs < 300 ? Outcome::Pass : Outcome::Fail,
            fmt("hybrid test micro-F1 %.4f, naive Bayes %.4f, %.1fs", hybrid_f1, nb_f1, secs)};
}

Verdict determinism() {
    const auto dir = intent::testing::temp_dir("accept");
    intent::testing::SplitCorpus c;
    c.train = intent::testing::noisy_corpus(120, 8, 0.2, 5);
    c.dev = intent::testing::noisy_corpus(40, 8, 0.2, 6);
    c.test = intent::testing::noisy_corpus(40, 8, 0.2, 7);
    intent::testing::write_corpus_dir(dir / "corpus", c);
    for (const char *name : {"a.bin", "b.bin"}) {
        std::ostringstream out, err;
        const int code = cli::run({"train", "--corpus", (dir / "corpus").string(), "--out", (dir / name).string(),
                                   "--seed", "7", "--epochs", "4"},
                                  out, err);
        if (code != 0) {
            fs::remove_all(dir);
            return {Outcome::Fail, "train exited " + std::to_string(code) + ": " + err.str()};
        }
    }
    const bool model_same = read_file(dir / "a.bin") == read_file(dir / "b.bin");
    const bool history_same = read_file(dir / "a.bin.history.jsonl") == read_file(dir / "b.bin.history.jsonl");
    fs::remove_all(dir);
    return {model_same && history_same ? Outcome::Pass : Outcome::Fail,
            fmt("model files %s, history files %s", model_same ? "identical" : "differ",
                history_same ? "identical" : "differ")};
}

Verdict serialization() {
    const auto train_split = intent::testing::noisy_corpus(200, 12, 0.2, 9);
    TrainConfig config;
    config.max_epochs = 2;
    config.embed = 16;
    config.hidden = 12;
    config.filters = 12;
    const auto model = train(config, train_split, train_split).model;
    const auto loaded = deserialize_hybrid(serialize_model(model));
    Rng rng(10);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text;
        for (std::size_t n = 1 + rng.below(40); n > 0; --n)
            text += intent::testing::cjk(rng.below(60) + (rng.below(4) == 0 ? 1000 : 0));
        const auto a = predict(model, text), b = predict(loaded, text);
        mismatches += a.index != b.index || a.label != b.label ||
                      std::memcmp(a.probs.data(), b.probs.data(), a.probs.size() * sizeof(float)) != 0;
    }
    return {mismatches == 0 ? Outcome::Pass : Outcome::Fail, fmt("1000 inputs, %zu mismatches", mismatches)};
}

Verdict real_corpus() {
    const char *env = std::getenv("INTENT_CORPUS_DIR");
    if (!env || !*env)
        return {Outcome::Skip, "set INTENT_CORPUS_DIR to a directory with train/dev/test.jsonl"};
    const fs::path dir(env);
    std::ostringstream out, err;
    const int stats_code = cli::run({"stats", "--corpus", dir.string(), "--expect-reference"}, out, err);
    const auto train_split = load_split(dir, Split::Train), dev = load_split(dir, Split::Dev),
               test = load_split(dir, Split::Test);
    TrainConfig config;
    const auto hybrid = train(config, train_split, dev);
    const double hybrid_f1 = evaluate(hybrid.model, test).micro_f1;
    const double nb_f1 = evaluate_nb(train_nb(train_split, build_vocab(train_split)), test).micro_f1;
    const bool ok = stats_code == 0 && hybrid_f1 >= 0.90 && hybrid_f1 > nb_f1;
    return {ok ? Outcome::Pass : Outcome::Fail,
            fmt("stats exit %d, hybrid test micro-F1 %.4f, naive Bayes %.4f", stats_code, hybrid_f1, nb_f1)};
}

struct Criterion {
    const char *name;
    std::function<Verdict()> run;
};

} // namespace

int main(int argc, char **argv) {
    const std::vector<Criterion> criteria = {
        {"gradient integrity", gradient_integrity},   {"closed-form layer checks", closed_forms},
        {"padding invariance", padding_invariance},   {"overfit capability", overfit},
        {"baseline ladder (synthetic)", baseline_ladder}, {"determinism", determinism},
        {"serialization", serialization},             {"real corpus (conditional)", real_corpus},
    };
    std::vector<std::size_t> selected;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > static_cast<int>(criteria.size())) {
            std::cerr << "usage: acceptance_test [criterion 1-" << criteria.size() << "]...\n";
            return 2;
        }
        selected.push_back(static_cast<std::size_t>(n - 1));
    }
    if (selected.empty())
        for (std::size_t i = 0; i < criteria.size(); ++i)
            selected.push_back(i);

    std::size_t failed = 0, skipped = 0;
    for (std::size_t i : selected) {
        Verdict v;
        try {
            v = criteria[i].run();
        } catch (const std::exception &e) {
            v = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char *tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
        std::cout << "criterion " << i + 1 << ": " << tag << "  " << criteria[i].name << "  " << v.detail
                  << std::endl;
        failed += v.outcome == Outcome::Fail;
        skipped += v.outcome == Outcome::Skip;
    }
    if (failed)
        return 1;
    return skipped == selected.size() ? 77 : 0;
}
