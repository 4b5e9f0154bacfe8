#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "intent/data.hpp"
#include "intent/metrics.hpp"
#include "intent/model.hpp"
#include "intent/optim.hpp"
#include "json.hpp"

namespace intent {

struct TrainConfig {
    std::size_t batch_size = 10;
    std::size_t hidden = 50;  // LSTM units per direction
    std::size_t filters = 50; // width-3 feature maps
    std::size_t embed = 64;
    std::size_t max_len = 30;
    std::size_t min_count = 1;
    double lr = 0.001;
    double dropout = 0.5;
    double plateau_factor = 0.1;
    std::size_t plateau_patience = 3;
    std::size_t stop_patience = 8;
    double min_lr = 1e-6;
    double clip_norm = 5.0; // 0 disables clipping
    std::size_t max_epochs = 50;
    std::uint64_t seed = 1;

    // Throws InvalidArgument on any out-of-domain field.
    void validate() const;
};

// Overwrites fields named in `j`; unknown keys are rejected.
void apply_config_json(const nlohmann::json &j, TrainConfig &config);
nlohmann::json config_json(const TrainConfig &config);

struct TrainResult {
    HybridModel<float> model; // parameters from the best validation epoch
    History history;
    std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

// Mini-batch Adam training with plateau decay and early stopping on
// validation micro-F1. Records are put in canonical (id, text, label) order
// before the per-epoch shuffle, so the result depends only on the record
// multiset and the seed.
TrainResult train(const TrainConfig &config, const std::vector<Utterance> &train_split,
                  const std::vector<Utterance> &dev_split, const EpochCallback &on_epoch = {});

// Encodes records against the model's vocabulary and label list. Throws
// DataError if a record's label is not one of the model's labels.
std::vector<Sample> encode_split(const HybridModel<float> &model, const std::vector<Utterance> &records);

std::vector<std::size_t> predict_indices(const HybridModel<float> &model, const std::vector<Sample> &samples);

EvalReport evaluate(const HybridModel<float> &model, const std::vector<Utterance> &split);

// Fisher-Yates permutation of [0, n) driven by `rng`.
std::vector<std::size_t> shuffled_order(std::size_t n, Rng &rng);

} // namespace intent
