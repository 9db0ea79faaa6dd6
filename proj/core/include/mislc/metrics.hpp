#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mislc/datamodel.hpp"

namespace mislc {

struct EvalReport {
    double bin_f1 = 0.0;
    double ma_f1 = 0.0;
    double mi_f1 = 0.0;
    double error_rate = 0.0;
    size_t n = 0;
    std::array<std::array<int64_t, 3>, 3> confusion{};  // [gold][pred]
    std::array<int64_t, 3> label_distribution{};        // predicted counts
    // conventional 3-class averages, reported alongside for comparison
    double macro_f1_3class = 0.0;
    double micro_f1_3class = 0.0;
};

// F1 with MisLC as the only positive class; 0/0 is defined as 0.
double bin_f1(std::span<const Label> preds, std::span<const Label> golds);

// Mean of the per-class F1 of the two positive classes (Unclear, MisLC).
double ma_f1(std::span<const Label> preds, std::span<const Label> golds);

// F1 of the collapsed binary task where positive means label in
// {Unclear, MisLC} on both sides.
double mi_f1(std::span<const Label> preds, std::span<const Label> golds);

double macro_f1_3class(std::span<const Label> preds, std::span<const Label> golds);
double micro_f1_3class(std::span<const Label> preds, std::span<const Label> golds);

double error_rate(std::span<const Prediction> preds);

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Label>& golds);

std::string eval_report_to_json(const EvalReport& report, bool extra_f1 = false);

struct MetricStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n-1)
};

struct RandomBaselineReport {
    MetricStats bin;
    MetricStats ma;
    MetricStats mi;
    size_t runs = 0;
};

// Uniform-over-three-classes predictions repeated `runs` times.
RandomBaselineReport random_classifier_report(std::span<const Label> golds, size_t runs,
                                              uint64_t seed);

}  // namespace mislc
