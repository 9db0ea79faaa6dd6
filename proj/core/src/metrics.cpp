#include "mislc/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "mislc/errors.hpp"
#include "mislc/rng.hpp"

namespace mislc {

namespace {

void check_lengths(size_t a, size_t b) {
    if (a != b) {
        throw LengthMismatchError("prediction/gold length mismatch: " + std::to_string(a) +
                                  " vs " + std::to_string(b));
    }
    if (a == 0) throw LengthMismatchError("empty prediction set");
}

double f1_from_counts(int64_t tp, int64_t fp, int64_t fn) {
    const int64_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double class_f1(std::span<const Label> preds, std::span<const Label> golds, Label cls) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == cls;
        const bool g = golds[i] == cls;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    return f1_from_counts(tp, fp, fn);
}

}  // namespace

double bin_f1(std::span<const Label> preds, std::span<const Label> golds) {
    check_lengths(preds.size(), golds.size());
    return class_f1(preds, golds, Label::MisLC);
}

double ma_f1(std::span<const Label> preds, std::span<const Label> golds) {
    check_lengths(preds.size(), golds.size());
    return 0.5 * (class_f1(preds, golds, Label::Unclear) + class_f1(preds, golds, Label::MisLC));
}

double mi_f1(std::span<const Label> preds, std::span<const Label> golds) {
    check_lengths(preds.size(), golds.size());
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] != Label::NonMisLC;
        const bool g = golds[i] != Label::NonMisLC;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    return f1_from_counts(tp, fp, fn);
}

double macro_f1_3class(std::span<const Label> preds, std::span<const Label> golds) {
    check_lengths(preds.size(), golds.size());
    return (class_f1(preds, golds, Label::NonMisLC) + class_f1(preds, golds, Label::Unclear) +
            class_f1(preds, golds, Label::MisLC)) /
           3.0;
}

double micro_f1_3class(std::span<const Label> preds, std::span<const Label> golds) {
    check_lengths(preds.size(), golds.size());
    // single-label multiclass micro F1 reduces to accuracy
    int64_t correct = 0;
    for (size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double error_rate(std::span<const Prediction> preds) {
    if (preds.empty()) return 0.0;
    int64_t errs = 0;
    for (const auto& p : preds) errs += p.is_error;
    return static_cast<double>(errs) / static_cast<double>(preds.size());
}

EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<Label>& golds) {
    check_lengths(preds.size(), golds.size());
    std::vector<Label> labels;
    labels.reserve(preds.size());
    for (const auto& p : preds) labels.push_back(p.verdict);

    EvalReport r;
    r.n = preds.size();
    r.bin_f1 = bin_f1(labels, golds);
    r.ma_f1 = ma_f1(labels, golds);
    r.mi_f1 = mi_f1(labels, golds);
    r.macro_f1_3class = macro_f1_3class(labels, golds);
    r.micro_f1_3class = micro_f1_3class(labels, golds);
    r.error_rate = error_rate(preds);
    for (size_t i = 0; i < preds.size(); ++i) {
        r.confusion[label_code(golds[i])][label_code(labels[i])] += 1;
        r.label_distribution[label_code(labels[i])] += 1;
    }
    return r;
}

std::string eval_report_to_json(const EvalReport& report, bool extra_f1) {
    nlohmann::json j;
    j["n"] = report.n;
    j["bin_f1"] = report.bin_f1;
    j["ma_f1"] = report.ma_f1;
    j["mi_f1"] = report.mi_f1;
    j["error_rate"] = report.error_rate;
    j["confusion"] = report.confusion;
    j["label_distribution"] = {{"non_mislc", report.label_distribution[0]},
                               {"unclear", report.label_distribution[1]},
                               {"mislc", report.label_distribution[2]}};
    if (extra_f1) {
        j["macro_f1_3class"] = report.macro_f1_3class;
        j["micro_f1_3class"] = report.micro_f1_3class;
    }
    return j.dump(2);
}

RandomBaselineReport random_classifier_report(std::span<const Label> golds, size_t runs,
                                              uint64_t seed) {
    if (golds.empty() || runs == 0) throw LengthMismatchError("empty golds or zero runs");
    Rng rng(seed);
    std::vector<double> bins, mas, mis;
    bins.reserve(runs);
    mas.reserve(runs);
    mis.reserve(runs);
    std::vector<Label> preds(golds.size());
    for (size_t r = 0; r < runs; ++r) {
        for (auto& p : preds) p = label_from_code(static_cast<int>(rng.next_index(3)));
        bins.push_back(bin_f1(preds, golds));
        mas.push_back(ma_f1(preds, golds));
        mis.push_back(mi_f1(preds, golds));
    }

    auto stats = [&](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
        return MetricStats{mean, std::sqrt(var)};
    };

    RandomBaselineReport report;
    report.bin = stats(bins);
    report.ma = stats(mas);
    report.mi = stats(mis);
    report.runs = runs;
    return report;
}

}  // namespace mislc
