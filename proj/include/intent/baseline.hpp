#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "intent/data.hpp"
#include "intent/metrics.hpp"
#include "intent/tensor.hpp"

namespace intent {

// Multinomial Naive Bayes over character unigrams with add-one smoothing.
// Only labels present in the training split become classes, so every log
// prior is finite.
struct NBModel {
    Vocab vocab;
    std::vector<std::string> labels; // canonical order, observed labels only
    std::vector<double> doc_counts;  // per class
    Tensor<double> token_counts;     // C x V
    std::vector<double> log_prior;   // C
    Tensor<double> log_likelihood;   // C x V

    std::size_t classes() const { return labels.size(); }
    // Rebuilds log_prior and log_likelihood from the counts.
    void finalize();
};

NBModel train_nb(const std::vector<Utterance> &train, const Vocab &vocab);

struct NBPrediction {
    std::size_t index = 0; // into model.labels
    std::string label;
    std::vector<double> log_posteriors; // unnormalized: log prior + sum of token log likelihoods
};

// Out-of-vocabulary tokens are skipped; ties go to the lowest class index.
NBPrediction predict_nb(const NBModel &model, std::string_view text);

// Report over the full 31-label taxonomy, so classes never seen in training
// still count toward recall.
EvalReport evaluate_nb(const NBModel &model, const std::vector<Utterance> &split);

} // namespace intent
