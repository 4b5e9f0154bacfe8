#include "cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>

#include "CLI11.hpp"
#include "intent/baseline.hpp"
#include "intent/error.hpp"
#include "intent/gradcheck.hpp"
#include "intent/serialize.hpp"
#include "intent/train.hpp"
#include "json.hpp"

namespace intent::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
  public:
    using Error::Error;
};

struct TrainOptions {
    std::string corpus;
    std::string out;
    std::string history;
    std::string config;
    std::string kind = "hybrid";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs, batch_size, hidden, filters, embed, max_len, min_count, plateau_patience,
        stop_patience;
    std::optional<double> lr, dropout, min_lr, clip_norm;
};

struct EvalOptions {
    std::string model;
    std::string corpus;
    std::string split = "test";
    bool json = false;
};

struct PredictOptions {
    std::string model;
    std::string text;
    bool all = false;
    std::size_t top = 5;
};

struct GradcheckOptions {
    double eps = 1e-5;
    double tol = 1e-4;
    std::size_t seeds = 20;
    std::uint64_t seed = 0;
    bool extended = false;
};

struct StatsOptions {
    std::string corpus;
    bool expect_reference = false;
};

std::string fmt(const char *format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

void require_file(const fs::path &path) {
    if (!fs::is_regular_file(path))
        throw DataError("missing file " + path.string());
}

void require_writable_parent(const fs::path &path) {
    const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(parent) || ::access(parent.c_str(), W_OK) != 0)
        throw DataError("output directory " + parent.string() + " is not writable");
}

Split parse_split(const std::string &name) {
    if (name == "train")
        return Split::Train;
    if (name == "dev")
        return Split::Dev;
    if (name == "test")
        return Split::Test;
    throw UsageError("unknown split '" + name + "'");
}

json history_line(const EpochRecord &r) {
    return {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"val_loss", r.val_loss},
            {"val_micro_f1", r.val_micro_f1},
            {"lr", r.lr}};
}

TrainConfig resolve_config(const TrainOptions &o) {
    TrainConfig c;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in)
            throw UsageError("cannot open config " + o.config);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error &e) {
            throw UsageError("config " + o.config + " is not valid JSON: " + e.what());
        }
        try {
            apply_config_json(j, c);
        } catch (const InvalidArgument &e) {
            throw UsageError(e.what());
        }
    }
    auto set = [](auto &dst, const auto &src) {
        if (src)
            dst = *src;
    };
    set(c.seed, o.seed);
    set(c.max_epochs, o.epochs);
    set(c.batch_size, o.batch_size);
    set(c.hidden, o.hidden);
    set(c.filters, o.filters);
    set(c.embed, o.embed);
    set(c.max_len, o.max_len);
    set(c.min_count, o.min_count);
    set(c.plateau_patience, o.plateau_patience);
    set(c.stop_patience, o.stop_patience);
    set(c.lr, o.lr);
    set(c.dropout, o.dropout);
    set(c.min_lr, o.min_lr);
    set(c.clip_norm, o.clip_norm);
    try {
        c.validate();
    } catch (const InvalidArgument &e) {
        throw UsageError(e.what());
    }
    return c;
}

int cmd_train(const TrainOptions &o, std::ostream &out) {
    const TrainConfig config = resolve_config(o);
    const fs::path corpus(o.corpus);
    const fs::path train_path = split_path(corpus, Split::Train), dev_path = split_path(corpus, Split::Dev);
    require_file(train_path);
    require_file(dev_path);
    const fs::path model_path(o.out);
    const fs::path history_path = o.history.empty() ? fs::path(o.out + ".history.jsonl") : fs::path(o.history);
    require_writable_parent(model_path);
    if (o.kind == "hybrid")
        require_writable_parent(history_path);

    const auto train_split = load_corpus(train_path);
    const auto dev_split = load_corpus(dev_path);

    if (o.kind == "nb") {
        if (train_split.empty())
            throw DataError("empty training split " + train_path.string());
        const NBModel nb = train_nb(train_split, build_vocab(train_split, config.min_count));
        write_file(model_path, serialize_model(nb));
        if (!dev_split.empty())
            out << fmt("naive bayes  classes %zu  vocab %zu  dev micro-F1 %.4f\n", nb.classes(), nb.vocab.size(),
                       evaluate_nb(nb, dev_split).micro_f1);
        return kOk;
    }

    std::string history_text;
    auto on_epoch = [&](const EpochRecord &r) {
        history_text += history_line(r).dump() + "\n";
        out << fmt("epoch %3zu  train_loss %.4f  val_loss %.4f  val_micro_f1 %.4f  lr %.2g\n", r.epoch, r.train_loss,
                   r.val_loss, r.val_micro_f1, r.lr)
            << std::flush;
    };
    const TrainResult result = train(config, train_split, dev_split, on_epoch);
    write_file(model_path, serialize_model(result.model));
    write_file(history_path, history_text);
    out << fmt("best epoch %zu  val_micro_f1 %.4f\n", result.best_epoch,
               result.history.at(result.best_epoch - 1).val_micro_f1);
    return kOk;
}

std::string model_kind_of(const std::string &bytes) { return decode_container(bytes).header.value("model_kind", ""); }

int cmd_eval(const EvalOptions &o, std::ostream &out) {
    const fs::path split_file = split_path(o.corpus, parse_split(o.split));
    require_file(o.model);
    require_file(split_file);
    const std::string bytes = read_file(o.model);
    const auto records = load_corpus(split_file);
    if (records.empty())
        throw DataError("empty split " + split_file.string());

    EvalReport report;
    if (model_kind_of(bytes) == "naive_bayes") {
        report = evaluate_nb(deserialize_nb(bytes), records);
    } else {
        report = evaluate(deserialize_hybrid(bytes), records);
    }
    if (o.json)
        out << report_json(report).dump(2) << "\n";
    else
        out << report_table(report);
    return kOk;
}

int cmd_predict(const PredictOptions &o, std::ostream &out) {
    if (o.text.empty())
        throw UsageError("predict: empty text");
    require_file(o.model);
    const std::string bytes = read_file(o.model);

    std::vector<std::string> labels;
    std::vector<double> probs;
    std::string top_label;
    if (model_kind_of(bytes) == "naive_bayes") {
        const NBModel nb = deserialize_nb(bytes);
        const auto p = predict_nb(nb, o.text);
        const double peak = *std::max_element(p.log_posteriors.begin(), p.log_posteriors.end());
        double total = 0.0;
        for (double lp : p.log_posteriors)
            total += std::exp(lp - peak);
        for (double lp : p.log_posteriors)
            probs.push_back(std::exp(lp - peak) / total);
        labels = nb.labels;
        top_label = p.label;
    } else {
        const HybridModel<float> model = deserialize_hybrid(bytes);
        const Prediction p = predict(model, o.text);
        probs.assign(p.probs.values().begin(), p.probs.values().end());
        labels = model.labels;
        top_label = p.label;
    }

    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    const std::size_t shown = o.all ? order.size() : std::min(o.top, order.size());

    out << "label " << top_label << "\n";
    for (std::size_t r = 0; r < shown; ++r)
        out << fmt("%-12s %.6f\n", labels[order[r]].c_str(), probs[order[r]]);
    return kOk;
}

int cmd_gradcheck(const GradcheckOptions &o, std::ostream &out) {
    const auto started = std::chrono::steady_clock::now();
    const ModelDims dims = gradcheck_dims();
    std::vector<BlockCheck> worst;
    double overall = 0.0, extended = 0.0;
    for (std::size_t s = 0; s < o.seeds; ++s) {
        const auto c = random_check_case(o.seed + s, dims, kGradcheckLength);
        const auto report = gradient_check(c.params, c.sample, o.eps);
        if (o.extended)
            extended = std::max(extended, gradient_check_extended(c.params, c.sample).max_rel_error);
        if (worst.empty())
            worst = report.blocks;
        for (std::size_t b = 0; b < report.blocks.size(); ++b)
            if (report.blocks[b].max_rel_error > worst[b].max_rel_error)
                worst[b] = report.blocks[b];
        overall = std::max(overall, report.max_rel_error);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    out << fmt("gradient check  n=%zu k=%zu H=%zu F=%zu C=%zu  seeds=%zu  eps=%g\n", kGradcheckLength, dims.embed,
               dims.hidden, dims.filters, dims.classes, o.seeds, o.eps);
    out << fmt("%-16s %8s %14s\n", "block", "scalars", "max_rel_error");
    for (const auto &b : worst)
        out << fmt("%-16s %8zu %14.3e\n", b.name.c_str(), b.scalars, b.max_rel_error);
    if (o.extended)
        out << fmt("80-bit cross-check max_rel_error %.3e (informational)\n", extended);
    const bool pass = overall <= o.tol;
    out << fmt("overall max_rel_error %.3e  tolerance %.1e  %s  (%.2fs)\n", overall, o.tol, pass ? "PASS" : "FAIL",
               seconds);
    return pass ? kOk : kNumericError;
}

int cmd_stats(const StatsOptions &o, std::ostream &out) {
    const fs::path corpus(o.corpus);
    for (auto split : {Split::Train, Split::Dev, Split::Test})
        require_file(split_path(corpus, split));
    const auto stats = compute_stats(load_split(corpus, Split::Train), load_split(corpus, Split::Dev),
                                     load_split(corpus, Split::Test));

    out << fmt("%-12s %7s %7s %7s %7s\n", "label", "train", "dev", "test", "sum");
    for (std::size_t l = 0; l < kLabels.size(); ++l)
        out << fmt("%-12s %7zu %7zu %7zu %7zu\n", std::string(kLabels[l]).c_str(), stats.counts[0][l],
                   stats.counts[1][l], stats.counts[2][l], stats.label_total(l));
    out << fmt("%-12s %7zu %7zu %7zu %7zu\n", "total", stats.total(Split::Train), stats.total(Split::Dev),
               stats.total(Split::Test), stats.grand_total());

    if (o.expect_reference) {
        if (const auto mismatch = first_mismatch(stats, reference_stats())) {
            out << "reference mismatch: " << *mismatch << "\n";
            return kDataError;
        }
        out << "matches reference statistics\n";
    }
    return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Hybrid BiLSTM+CNN intent classifier"};
    app.require_subcommand(1);

    TrainOptions train_opts;
    auto *train_cmd = app.add_subcommand("train", "Train a model on <corpus>/train.jsonl and dev.jsonl");
    train_cmd->add_option("--corpus", train_opts.corpus, "Corpus directory")->required();
    train_cmd->add_option("--out", train_opts.out, "Model file to write")->required();
    train_cmd->add_option("--history", train_opts.history, "History JSONL (default <out>.history.jsonl)");
    train_cmd->add_option("--config", train_opts.config, "JSON file of defaults; explicit flags win");
    train_cmd->add_option("--kind", train_opts.kind, "Model kind")->check(CLI::IsMember({"hybrid", "nb"}));
    train_cmd->add_option("--seed", train_opts.seed, "Seed for all randomness");
    train_cmd->add_option("--epochs", train_opts.epochs, "Maximum epochs");
    train_cmd->add_option("--batch-size", train_opts.batch_size);
    train_cmd->add_option("--hidden", train_opts.hidden, "LSTM units per direction");
    train_cmd->add_option("--filters", train_opts.filters, "Convolution feature maps");
    train_cmd->add_option("--embed", train_opts.embed, "Embedding size");
    train_cmd->add_option("--max-len", train_opts.max_len);
    train_cmd->add_option("--min-count", train_opts.min_count);
    train_cmd->add_option("--plateau-patience", train_opts.plateau_patience);
    train_cmd->add_option("--stop-patience", train_opts.stop_patience);
    train_cmd->add_option("--lr", train_opts.lr);
    train_cmd->add_option("--dropout", train_opts.dropout);
    train_cmd->add_option("--min-lr", train_opts.min_lr);
    train_cmd->add_option("--clip-norm", train_opts.clip_norm, "Global gradient norm cap, 0 disables");

    EvalOptions eval_opts;
    auto *eval_cmd = app.add_subcommand("eval", "Evaluate a model on a corpus split");
    eval_cmd->add_option("--model", eval_opts.model)->required();
    eval_cmd->add_option("--corpus", eval_opts.corpus)->required();
    eval_cmd->add_option("--split", eval_opts.split)->check(CLI::IsMember({"train", "dev", "test"}));
    eval_cmd->add_flag("--json", eval_opts.json, "Print the report as JSON");

    PredictOptions predict_opts;
    auto *predict_cmd = app.add_subcommand("predict", "Classify one utterance");
    predict_cmd->add_option("--model", predict_opts.model)->required();
    predict_cmd->add_option("--text,text", predict_opts.text, "Utterance")->required();
    predict_cmd->add_flag("--all", predict_opts.all, "Print every class probability");

    GradcheckOptions grad_opts;
    auto *grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full backward pass");
    grad_cmd->add_option("--eps", grad_opts.eps);
    grad_cmd->add_option("--tol", grad_opts.tol);
    grad_cmd->add_option("--seeds", grad_opts.seeds);
    grad_cmd->add_option("--seed", grad_opts.seed, "First seed");
    grad_cmd->add_flag("--extended", grad_opts.extended,
                       "Also compare against long double finite differences (does not affect the exit code)");

    StatsOptions stats_opts;
    auto *stats_cmd = app.add_subcommand("stats", "Per-label counts of a corpus");
    stats_cmd->add_option("--corpus", stats_opts.corpus)->required();
    stats_cmd->add_flag("--expect-reference", stats_opts.expect_reference,
                        "Fail unless counts match the released corpus");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*train_cmd)
            return cmd_train(train_opts, out);
        if (*eval_cmd)
            return cmd_eval(eval_opts, out);
        if (*predict_cmd)
            return cmd_predict(predict_opts, out);
        if (*grad_cmd)
            return cmd_gradcheck(grad_opts, out);
        if (*stats_cmd)
            return cmd_stats(stats_opts, out);
    } catch (const UsageError &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericError &e) {
        err << "numeric failure: " << e.what() << "\n";
        return kNumericError;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsage;
}

} // namespace intent::cli
