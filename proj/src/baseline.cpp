#include "intent/baseline.hpp"

#include <cmath>

#include "intent/error.hpp"

namespace intent {

void NBModel::finalize() {
    const std::size_t C = labels.size(), V = vocab.size();
    if (doc_counts.size() != C || token_counts.shape() != Shape{C, V})
        throw DataError("naive bayes: count tables do not match labels/vocab");
    double docs = 0.0;
    for (double d : doc_counts)
        docs += d;
    log_prior.assign(C, 0.0);
    log_likelihood = Tensor<double>({C, V});
    for (std::size_t c = 0; c < C; ++c) {
        log_prior[c] = std::log(doc_counts[c] / docs);
        double total = 0.0;
        for (double n : token_counts.row(c))
            total += n;
        const double denom = total + static_cast<double>(V);
        for (std::size_t v = 0; v < V; ++v)
            log_likelihood(c, v) = std::log((token_counts(c, v) + 1.0) / denom);
    }
}

NBModel train_nb(const std::vector<Utterance> &train, const Vocab &vocab) {
    if (train.empty())
        throw InvalidArgument("train_nb: empty training split");
    std::vector<bool> seen(kLabels.size(), false);
    for (const auto &u : train) {
        const auto idx = label_index(u.label);
        if (!idx)
            throw DataError("train_nb: unknown label '" + u.label + "'");
        seen[*idx] = true;
    }
    NBModel m;
    m.vocab = vocab;
    std::vector<std::size_t> class_of(kLabels.size(), 0);
    for (std::size_t l = 0; l < kLabels.size(); ++l)
        if (seen[l]) {
            class_of[l] = m.labels.size();
            m.labels.emplace_back(kLabels[l]);
        }
    m.doc_counts.assign(m.labels.size(), 0.0);
    m.token_counts = Tensor<double>({m.labels.size(), vocab.size()});
    for (const auto &u : train) {
        const std::size_t c = class_of[*label_index(u.label)];
        m.doc_counts[c] += 1.0;
        for (const auto &tok : tokenize(u.text)) {
            const auto idx = vocab.index_of(tok);
            if (idx != Vocab::kUnk)
                m.token_counts(c, static_cast<std::size_t>(idx)) += 1.0;
        }
    }
    m.finalize();
    return m;
}

NBPrediction predict_nb(const NBModel &model, std::string_view text) {
    if (text.empty())
        throw InvalidArgument("predict_nb: empty text");
    NBPrediction p;
    p.log_posteriors = model.log_prior;
    for (const auto &tok : tokenize(text)) {
        const auto idx = model.vocab.index_of(tok);
        if (idx == Vocab::kUnk)
            continue;
        for (std::size_t c = 0; c < model.classes(); ++c)
            p.log_posteriors[c] += model.log_likelihood(c, static_cast<std::size_t>(idx));
    }
    for (std::size_t c = 1; c < model.classes(); ++c)
        if (p.log_posteriors[c] > p.log_posteriors[p.index])
            p.index = c;
    p.label = model.labels.at(p.index);
    return p;
}

EvalReport evaluate_nb(const NBModel &model, const std::vector<Utterance> &split) {
    if (split.empty())
        throw InvalidArgument("evaluate: empty split");
    std::vector<std::size_t> gold, predicted;
    for (const auto &u : split) {
        const auto g = label_index(u.label);
        if (!g)
            throw DataError("evaluate: unknown label '" + u.label + "'");
        gold.push_back(*g);
        predicted.push_back(*label_index(predict_nb(model, u.text).label));
    }
    return make_report(reference_labels(), gold, predicted);
}

} // namespace intent
