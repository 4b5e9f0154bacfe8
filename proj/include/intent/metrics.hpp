#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace intent {

struct ClassMetrics {
    std::string label;
    double precision = 0.0; // TP / (TP + FP), 0 when undefined
    double recall = 0.0;    // TP / (TP + FN), 0 when undefined
    double f1 = 0.0;
    std::size_t support = 0; // gold count
    std::size_t predicted = 0;
};

struct EvalReport {
    std::vector<ClassMetrics> classes;
    // confusion[gold][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;       // unweighted mean over all classes
    double mean_precision = 0.0; // unweighted mean of per-class precision
    double accuracy = 0.0;
    std::size_t total = 0;
};

// Builds the report from parallel gold/predicted class indices into `labels`.
// Throws InvalidArgument on an empty split or out-of-range index.
EvalReport make_report(const std::vector<std::string> &labels, std::span<const std::size_t> gold,
                       std::span<const std::size_t> predicted);

nlohmann::json report_json(const EvalReport &report);
EvalReport report_from_json(const nlohmann::json &j);

// Fixed-width table, one row per class sorted by label name, followed by the
// summary figures.
std::string report_table(const EvalReport &report);

} // namespace intent
