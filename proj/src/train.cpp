#include "intent/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "intent/error.hpp"

namespace intent {

void TrainConfig::validate() const {
    auto positive = [](std::size_t v, const char *name) {
        if (v == 0)
            throw InvalidArgument(std::string("config: ") + name + " must be positive");
    };
    positive(batch_size, "batch_size");
    positive(hidden, "hidden");
    positive(filters, "filters");
    positive(embed, "embed");
    positive(min_count, "min_count");
    positive(plateau_patience, "plateau_patience");
    positive(stop_patience, "stop_patience");
    positive(max_epochs, "max_epochs");
    if (max_len < kMinSequence)
        throw InvalidArgument("config: max_len must be >= 3");
    if (!(lr > 0.0) || !(min_lr > 0.0))
        throw InvalidArgument("config: lr and min_lr must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw InvalidArgument("config: dropout must be in [0, 1)");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
        throw InvalidArgument("config: plateau_factor must be in (0, 1)");
    if (!(clip_norm >= 0.0))
        throw InvalidArgument("config: clip_norm must be >= 0");
}

void apply_config_json(const nlohmann::json &j, TrainConfig &c) {
    if (!j.is_object())
        throw InvalidArgument("config: expected a JSON object");
    for (const auto &[key, value] : j.items()) {
        try {
            if (key == "batch_size")
                c.batch_size = value.get<std::size_t>();
            else if (key == "hidden")
                c.hidden = value.get<std::size_t>();
            else if (key == "filters")
                c.filters = value.get<std::size_t>();
            else if (key == "embed")
                c.embed = value.get<std::size_t>();
            else if (key == "max_len")
                c.max_len = value.get<std::size_t>();
            else if (key == "min_count")
                c.min_count = value.get<std::size_t>();
            else if (key == "lr")
                c.lr = value.get<double>();
            else if (key == "dropout")
                c.dropout = value.get<double>();
            else if (key == "plateau_factor")
                c.plateau_factor = value.get<double>();
            else if (key == "plateau_patience")
                c.plateau_patience = value.get<std::size_t>();
            else if (key == "stop_patience")
                c.stop_patience = value.get<std::size_t>();
            else if (key == "min_lr")
                c.min_lr = value.get<double>();
            else if (key == "clip_norm")
                c.clip_norm = value.get<double>();
            else if (key == "max_epochs" || key == "epochs")
                c.max_epochs = value.get<std::size_t>();
            else if (key == "seed")
                c.seed = value.get<std::uint64_t>();
            else
                throw InvalidArgument("config: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception &e) {
            throw InvalidArgument("config: bad value for '" + key + "': " + e.what());
        }
    }
}

nlohmann::json config_json(const TrainConfig &c) {
    return {{"batch_size", c.batch_size},
            {"hidden", c.hidden},
            {"filters", c.filters},
            {"embed", c.embed},
            {"max_len", c.max_len},
            {"min_count", c.min_count},
            {"lr", c.lr},
            {"dropout", c.dropout},
            {"plateau_factor", c.plateau_factor},
            {"plateau_patience", c.plateau_patience},
            {"stop_patience", c.stop_patience},
            {"min_lr", c.min_lr},
            {"clip_norm", c.clip_norm},
            {"max_epochs", c.max_epochs},
            {"seed", c.seed}};
}

std::vector<std::size_t> shuffled_order(std::size_t n, Rng &rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

std::vector<Sample> encode_split(const HybridModel<float> &model, const std::vector<Utterance> &records) {
    std::vector<Sample> out;
    out.reserve(records.size());
    for (const auto &u : records) {
        const auto it = std::find(model.labels.begin(), model.labels.end(), u.label);
        if (it == model.labels.end())
            throw DataError("label '" + u.label + "' (record id " + std::to_string(u.id) +
                            ") is not in the model's label set");
        out.push_back({encode(u, model.vocab, model.max_len), static_cast<std::size_t>(it - model.labels.begin())});
    }
    return out;
}

std::vector<std::size_t> predict_indices(const HybridModel<float> &model, const std::vector<Sample> &samples) {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto &s : samples)
        out.push_back(argmax<float>(forward(model, s.input, false, nullptr).probs.values()));
    return out;
}

EvalReport evaluate(const HybridModel<float> &model, const std::vector<Utterance> &split) {
    if (split.empty())
        throw InvalidArgument("evaluate: empty split");
    const auto samples = encode_split(model, split);
    std::vector<std::size_t> gold;
    for (const auto &s : samples)
        gold.push_back(s.label);
    return make_report(model.labels, gold, predict_indices(model, samples));
}

namespace {

struct ValidationResult {
    double loss = 0.0;
    double micro_f1 = 0.0;
};

ValidationResult validate_epoch(const HybridModel<float> &model, const std::vector<Sample> &dev) {
    ValidationResult r;
    std::size_t correct = 0;
    for (const auto &s : dev) {
        const auto fwd = forward(model, s.input, false, nullptr);
        r.loss += cross_entropy(fwd.probs, s.label).loss;
        correct += argmax<float>(fwd.probs.values()) == s.label;
    }
    r.loss /= static_cast<double>(dev.size());
    // micro-F1 equals accuracy for single-label prediction.
    r.micro_f1 = static_cast<double>(correct) / static_cast<double>(dev.size());
    return r;
}

} // namespace

TrainResult train(const TrainConfig &config, const std::vector<Utterance> &train_split,
                  const std::vector<Utterance> &dev_split, const EpochCallback &on_epoch) {
    config.validate();
    if (train_split.empty())
        throw DataError("train: empty training split");
    if (dev_split.empty())
        throw DataError("train: empty validation split");

    std::vector<Utterance> records = train_split;
    std::stable_sort(records.begin(), records.end(), [](const Utterance &a, const Utterance &b) {
        return std::tie(a.id, a.text, a.label) < std::tie(b.id, b.text, b.label);
    });

    TrainResult result;
    HybridModel<float> &model = result.model;
    model.vocab = build_vocab(records, config.min_count);
    model.labels = reference_labels();
    model.max_len = config.max_len;
    model.dropout = config.dropout;
    const ModelDims dims{model.vocab.size(), config.embed, config.hidden, config.filters, model.labels.size()};

    Rng init_rng(mix_seed(config.seed, 1));
    model.params = init_params<float>(dims, init_rng);
    Rng dropout_rng(mix_seed(config.seed, 2));

    const auto samples = encode_split(model, records);
    const auto dev = encode_split(model, dev_split);

    auto grads = HybridParams<float>::zeros(dims);
    std::vector<Tensor<float> *> param_blocks, grad_blocks;
    model.params.for_each([&](const std::string &, Tensor<float> &t) { param_blocks.push_back(&t); });
    grads.for_each([&](const std::string &, Tensor<float> &t) { grad_blocks.push_back(&t); });
    const std::vector<const Tensor<float> *> grad_view(grad_blocks.begin(), grad_blocks.end());

    AdamState<float> adam;
    HybridParams<float> best_params = model.params;
    double best_f1 = -1.0;
    double lr = config.lr;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(config.seed, 1000 + epoch));
        const auto order = shuffled_order(samples.size(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            for (auto *g : grad_blocks)
                g->fill(0.0f);
            for (std::size_t i = start; i < stop; ++i) {
                const double loss = accumulate_sample_gradient(model.params, samples[order[i]], true, config.dropout,
                                                               &dropout_rng, grads);
                if (!std::isfinite(loss))
                    throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index));
                loss_sum += loss;
            }
            const float inv = 1.0f / static_cast<float>(stop - start);
            for (auto *g : grad_blocks)
                for (auto &e : g->values())
                    e *= inv;
            clip_global_norm<float>(grad_blocks, config.clip_norm);
            try {
                adam_step<float>(param_blocks, grad_view, adam, lr);
            } catch (const NumericError &e) {
                throw NumericError("train: epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " + e.what());
            }
        }

        const auto val = validate_epoch(model, dev);
        const EpochRecord rec{epoch, loss_sum / static_cast<double>(samples.size()), val.loss, val.micro_f1, lr};
        result.history.push_back(rec);
        if (on_epoch)
            on_epoch(rec);

        if (val.micro_f1 > best_f1 + kImprovementThreshold) {
            best_f1 = val.micro_f1;
            best_params = model.params;
            result.best_epoch = epoch;
        }
        if (should_stop(result.history, config.stop_patience))
            break;
        lr = reduce_lr_on_plateau(result.history, config.plateau_factor, config.plateau_patience, config.min_lr);
    }

    model.params = std::move(best_params);
    return result;
}

} // namespace intent
