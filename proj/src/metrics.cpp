#include "intent/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "intent/error.hpp"

namespace intent {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

} // namespace

EvalReport make_report(const std::vector<std::string> &labels, std::span<const std::size_t> gold,
                       std::span<const std::size_t> predicted) {
    if (gold.empty())
        throw InvalidArgument("evaluate: empty split");
    if (gold.size() != predicted.size())
        throw InvalidArgument("evaluate: gold and predicted lengths differ");
    const std::size_t C = labels.size();
    EvalReport r;
    r.total = gold.size();
    r.confusion.assign(C, std::vector<std::size_t>(C, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= C || predicted[i] >= C)
            throw InvalidArgument("evaluate: class index out of range");
        ++r.confusion[gold[i]][predicted[i]];
    }

    std::size_t tp_total = 0;
    for (std::size_t c = 0; c < C; ++c) {
        ClassMetrics m;
        m.label = labels[c];
        const std::size_t tp = r.confusion[c][c];
        m.support = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
        for (std::size_t g = 0; g < C; ++g)
            m.predicted += r.confusion[g][c];
        m.precision = ratio(tp, m.predicted);
        m.recall = ratio(tp, m.support);
        m.f1 = harmonic(m.precision, m.recall);
        tp_total += tp;
        r.macro_f1 += m.f1;
        r.mean_precision += m.precision;
        r.classes.push_back(std::move(m));
    }
    r.macro_f1 /= static_cast<double>(C);
    r.mean_precision /= static_cast<double>(C);
    // Every sample is exactly one prediction, so global FP == global FN and
    // micro precision == micro recall == accuracy.
    r.accuracy = ratio(tp_total, r.total);
    r.micro_f1 = harmonic(r.accuracy, r.accuracy);
    return r;
}

nlohmann::json report_json(const EvalReport &r) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto &m : r.classes)
        classes.push_back({{"label", m.label},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"predicted", m.predicted}});
    return {{"classes", classes},      {"confusion", r.confusion},         {"micro_f1", r.micro_f1},
            {"macro_f1", r.macro_f1},  {"mean_precision", r.mean_precision}, {"accuracy", r.accuracy},
            {"total", r.total}};
}

EvalReport report_from_json(const nlohmann::json &j) {
    EvalReport r;
    for (const auto &c : j.at("classes"))
        r.classes.push_back({c.at("label").get<std::string>(), c.at("precision").get<double>(),
                             c.at("recall").get<double>(), c.at("f1").get<double>(),
                             c.at("support").get<std::size_t>(), c.at("predicted").get<std::size_t>()});
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    r.micro_f1 = j.at("micro_f1").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.mean_precision = j.at("mean_precision").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    r.total = j.at("total").get<std::size_t>();
    return r;
}

std::string report_table(const EvalReport &r) {
    std::vector<const ClassMetrics *> rows;
    for (const auto &m : r.classes)
        rows.push_back(&m);
    std::sort(rows.begin(), rows.end(), [](const auto *a, const auto *b) { return a->label < b->label; });

    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %8s\n", "label", "precision", "recall", "f1", "support");
    out += line;
    for (const auto *m : rows) {
        std::snprintf(line, sizeof line, "%-12s %9.3f %9.3f %9.3f %8zu\n", m->label.c_str(), m->precision, m->recall,
                      m->f1, m->support);
        out += line;
    }
    std::snprintf(line, sizeof line, "\nsamples %zu  accuracy %.4f  micro-F1 %.4f  macro-F1 %.4f  avg precision %.4f\n",
                  r.total, r.accuracy, r.micro_f1, r.macro_f1, r.mean_precision);
    out += line;
    return out;
}

} // namespace intent
