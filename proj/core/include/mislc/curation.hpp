#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mislc/datamodel.hpp"
#include "mislc/metrics.hpp"

namespace mislc {

// Label rule over (|E|, |L|, claim): no claim -> NonMisLC; no evidence ->
// Unclear; evidence plus at least one issue -> MisLC; otherwise NonMisLC.
Label assign_label(int64_t evidence_count, int64_t issue_count, bool is_claim);

struct VoteResult {
    Label label = Label::Unclear;
    std::vector<std::string> issues;  // chosen by a strict majority of annotators
};

// Plurality over {yes, no, unclear}; ties resolve to Unclear. Issue ids are
// kept when strictly more than half of the annotators marked them.
VoteResult majority_vote(const std::vector<AnnotationRecord>& annotations);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual size_t dim() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
};

// Feature-hash bag of words, L2-normalized with sign hashing. Fully
// deterministic and model-free so filtering runs hermetically.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(size_t dim = 64) : dim_(dim) {}
    std::string name() const override { return "hash_bow"; }
    size_t dim() const override { return dim_; }
    std::vector<double> embed(const std::string& text) const override;

private:
    size_t dim_;
};

struct FilterRound {
    size_t kept = 0;
    double tau = 0.0;     // mean KL loss over the kept set
    size_t removed = 0;
};

struct FilterResult {
    std::vector<std::string> kept_ids;  // input order
    std::vector<FilterRound> rounds;
};

struct FilterOptions {
    size_t epochs = 200;
    double learning_rate = 0.1;
};

// Iterative removal of samples whose softmaxed vote distribution a linear
// classifier fits worst (KL loss strictly above the mean). Stops when a
// removal would shrink the kept set below k, or when no sample sits above
// the mean (the equal-loss degenerate case).
FilterResult adversarial_filter(const std::vector<Sample>& samples,
                                const EmbeddingProvider& provider, size_t k, uint64_t seed,
                                const FilterOptions& opts = {});

std::set<std::string> intersect_runs(const std::vector<std::set<std::string>>& runs);

struct AlphaResult {
    double alpha = 0.0;
    std::array<std::array<double, 3>, 3> coincidence{};  // verdict x verdict
    std::array<double, 3> margins{};
    double n = 0.0;  // pairable values
    size_t units = 0;
};

// Nominal Krippendorff's alpha over per-sample verdicts; units with fewer
// than two annotations are excluded. Throws DegenerateDataError when every
// pairable value is identical (expected disagreement is zero).
AlphaResult krippendorff_alpha(const std::vector<AnnotationRecord>& annotations);

// Same statistic for arbitrary nominal category codes, one vector of values
// per unit (unequal sizes model missing data).
double nominal_alpha(const std::vector<std::vector<int>>& units);

// KL(p || q) over 3-way distributions; the filtering loss.
double kl_divergence3(const std::array<double, 3>& p, const std::array<double, 3>& q);

struct ExpertReport {
    std::string annotator_id;
    size_t annotation_count = 0;
    double bin_f1 = 0.0;
    double ma_f1 = 0.0;
    double mi_f1 = 0.0;
};

struct ExpertPerformance {
    std::vector<ExpertReport> experts;
    MetricStats bin;
    MetricStats ma;
    MetricStats mi;
};

// Scores annotators with more than `min_count` annotations against the
// consensus labels, treating their verdicts as predictions.
ExpertPerformance expert_performance(const std::vector<AnnotationRecord>& annotations,
                                     const std::map<std::string, Label>& consensus,
                                     size_t min_count = 50);

// Majority-vote consensus per sample id over an annotation file.
std::map<std::string, VoteResult> consensus_by_sample(
    const std::vector<AnnotationRecord>& annotations);

}  // namespace mislc
