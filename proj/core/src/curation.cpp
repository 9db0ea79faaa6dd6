#include "mislc/curation.hpp"

#include <algorithm>
#include <cmath>

#include "mislc/errors.hpp"
#include "mislc/rng.hpp"
#include "mislc/tokenizer.hpp"

namespace mislc {

Label assign_label(int64_t evidence_count, int64_t issue_count, bool is_claim) {
    if (!is_claim) return Label::NonMisLC;
    if (evidence_count == 0) return Label::Unclear;
    if (issue_count > 0) return Label::MisLC;
    return Label::NonMisLC;
}

VoteResult majority_vote(const std::vector<AnnotationRecord>& annotations) {
    if (annotations.empty()) throw LengthMismatchError("majority_vote needs >= 1 annotation");

    std::array<size_t, 3> counts{0, 0, 0};  // no, unclear, yes
    std::map<std::string, size_t> issue_counts;
    for (const auto& a : annotations) {
        counts[static_cast<size_t>(a.verdict)] += 1;
        for (const auto& issue : a.issues) issue_counts[issue] += 1;
    }

    const size_t best = *std::max_element(counts.begin(), counts.end());
    size_t winners = 0;
    size_t winner_idx = 0;
    for (size_t i = 0; i < 3; ++i) {
        if (counts[i] == best) {
            ++winners;
            winner_idx = i;
        }
    }

    VoteResult result;
    if (winners > 1) {
        result.label = Label::Unclear;
    } else {
        switch (static_cast<Verdict3>(winner_idx)) {
            case Verdict3::Yes: result.label = Label::MisLC; break;
            case Verdict3::No: result.label = Label::NonMisLC; break;
            case Verdict3::Unclear: result.label = Label::Unclear; break;
        }
    }
    for (const auto& [issue, count] : issue_counts) {
        if (2 * count > annotations.size()) result.issues.push_back(issue);
    }
    return result;
}

std::vector<double> HashEmbeddingProvider::embed(const std::string& text) const {
    static const WhitespacePunctTokenizer tok;
    std::vector<double> v(dim_, 0.0);
    for (const auto& t : tok.tokenize(text)) {
        const std::string term = ascii_lower(t.text);
        uint64_t h = 1469598103934665603ULL;  // FNV-1a
        for (unsigned char c : term) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        const double sign = (h >> 63) ? 1.0 : -1.0;
        v[h % dim_] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

namespace {

std::array<double, 3> softmax3(const std::array<double, 3>& z) {
    const double m = std::max({z[0], z[1], z[2]});
    std::array<double, 3> e{std::exp(z[0] - m), std::exp(z[1] - m), std::exp(z[2] - m)};
    const double s = e[0] + e[1] + e[2];
    return {e[0] / s, e[1] / s, e[2] / s};
}

}  // namespace

double kl_divergence3(const std::array<double, 3>& p, const std::array<double, 3>& q) {
    // the model output p against the softmaxed vote target q
    double loss = 0.0;
    for (size_t c = 0; c < 3; ++c) {
        if (p[c] > 0.0) loss += p[c] * (std::log(p[c]) - std::log(q[c]));
    }
    return loss;
}

namespace {

double kl_loss(const std::array<double, 3>& p, const std::array<double, 3>& q) {
    return kl_divergence3(p, q);
}


struct LinearClassifier {
    size_t dim;
    std::vector<double> w;  // 3 x dim
    std::array<double, 3> bias{};

    explicit LinearClassifier(size_t d, Rng& rng) : dim(d), w(3 * d) {
        for (auto& x : w) x = 0.01 * rng.next_gaussian();
    }

    std::array<double, 3> logits(const std::vector<double>& x) const {
        std::array<double, 3> z{bias[0], bias[1], bias[2]};
        for (size_t c = 0; c < 3; ++c) {
            const double* row = w.data() + c * dim;
            for (size_t j = 0; j < dim; ++j) z[c] += row[j] * x[j];
        }
        return z;
    }

    void train(const std::vector<const std::vector<double>*>& xs,
               const std::vector<const std::array<double, 3>*>& qs, size_t epochs, double lr) {
        const double inv_n = 1.0 / static_cast<double>(xs.size());
        std::vector<double> gw(3 * dim);
        std::array<double, 3> gb{};
        for (size_t epoch = 0; epoch < epochs; ++epoch) {
            std::fill(gw.begin(), gw.end(), 0.0);
            gb = {0.0, 0.0, 0.0};
            for (size_t i = 0; i < xs.size(); ++i) {
                const auto p = softmax3(logits(*xs[i]));
                const auto& q = *qs[i];
                std::array<double, 3> a{};
                double loss = 0.0;
                for (size_t c = 0; c < 3; ++c) {
                    a[c] = std::log(p[c]) - std::log(q[c]);
                    loss += p[c] * a[c];
                }
                for (size_t c = 0; c < 3; ++c) {
                    const double g = p[c] * (a[c] - loss);
                    gb[c] += g;
                    double* grow = gw.data() + c * dim;
                    const auto& x = *xs[i];
                    for (size_t j = 0; j < dim; ++j) grow[j] += g * x[j];
                }
            }
            for (size_t c = 0; c < 3; ++c) bias[c] -= lr * gb[c] * inv_n;
            for (size_t j = 0; j < w.size(); ++j) w[j] -= lr * gw[j] * inv_n;
        }
    }
};

}  // namespace

FilterResult adversarial_filter(const std::vector<Sample>& samples,
                                const EmbeddingProvider& provider, size_t k, uint64_t seed,
                                const FilterOptions& opts) {
    if (samples.empty()) return {};

    const size_t n = samples.size();
    std::vector<std::vector<double>> embeddings(n);
    std::vector<std::array<double, 3>> targets(n);
    for (size_t i = 0; i < n; ++i) {
        embeddings[i] = provider.embed(samples[i].text);
        targets[i] = softmax3({static_cast<double>(samples[i].checkworthy_votes[0]),
                               static_cast<double>(samples[i].checkworthy_votes[1]),
                               static_cast<double>(samples[i].checkworthy_votes[2])});
    }

    Rng rng(seed);
    std::vector<size_t> kept(n);
    for (size_t i = 0; i < n; ++i) kept[i] = i;

    FilterResult result;
    while (true) {
        LinearClassifier clf(provider.dim(), rng);
        std::vector<const std::vector<double>*> xs;
        std::vector<const std::array<double, 3>*> qs;
        xs.reserve(kept.size());
        qs.reserve(kept.size());
        for (size_t i : kept) {
            xs.push_back(&embeddings[i]);
            qs.push_back(&targets[i]);
        }
        clf.train(xs, qs, opts.epochs, opts.learning_rate);

        std::vector<double> losses(kept.size());
        double tau = 0.0;
        for (size_t j = 0; j < kept.size(); ++j) {
            losses[j] = kl_loss(softmax3(clf.logits(embeddings[kept[j]])), targets[kept[j]]);
            tau += losses[j];
        }
        tau /= static_cast<double>(kept.size());

        std::vector<size_t> survivors;
        survivors.reserve(kept.size());
        for (size_t j = 0; j < kept.size(); ++j) {
            if (!(losses[j] > tau)) survivors.push_back(kept[j]);
        }
        const size_t removed = kept.size() - survivors.size();
        result.rounds.push_back(FilterRound{kept.size(), tau, removed});

        if (survivors.size() < k) break;   // removing would undershoot the target
        if (removed == 0) break;           // equal-loss degeneracy, nothing above the mean
        kept = std::move(survivors);
    }

    result.kept_ids.reserve(kept.size());
    for (size_t i : kept) result.kept_ids.push_back(samples[i].id);
    return result;
}

std::set<std::string> intersect_runs(const std::vector<std::set<std::string>>& runs) {
    if (runs.empty()) return {};
    std::set<std::string> acc = runs.front();
    for (size_t i = 1; i < runs.size(); ++i) {
        std::set<std::string> next;
        std::set_intersection(acc.begin(), acc.end(), runs[i].begin(), runs[i].end(),
                              std::inserter(next, next.begin()));
        acc = std::move(next);
    }
    return acc;
}

AlphaResult krippendorff_alpha(const std::vector<AnnotationRecord>& annotations) {
    std::map<std::string, std::array<double, 3>> units;  // verdict counts per sample
    for (const auto& a : annotations) {
        units[a.sample_id][static_cast<size_t>(a.verdict)] += 1.0;
    }

    AlphaResult res;
    for (const auto& [id, counts] : units) {
        const double m = counts[0] + counts[1] + counts[2];
        if (m < 2.0) continue;  // not pairable
        ++res.units;
        for (size_t c = 0; c < 3; ++c) {
            for (size_t d = 0; d < 3; ++d) {
                const double pairs = c == d ? counts[c] * (counts[c] - 1.0)
                                            : counts[c] * counts[d];
                res.coincidence[c][d] += pairs / (m - 1.0);
            }
        }
    }
    if (res.units == 0) throw DegenerateDataError("no unit has two or more annotations");

    for (size_t c = 0; c < 3; ++c) {
        for (size_t d = 0; d < 3; ++d) res.margins[c] += res.coincidence[c][d];
        res.n += res.margins[c];
    }

    double observed = 0.0;
    double expected = 0.0;
    for (size_t c = 0; c < 3; ++c) {
        for (size_t d = 0; d < 3; ++d) {
            if (c == d) continue;
            observed += res.coincidence[c][d];
            expected += res.margins[c] * res.margins[d];
        }
    }
    if (expected == 0.0) {
        throw DegenerateDataError("every pairable value is identical; alpha undefined");
    }
    res.alpha = 1.0 - (res.n - 1.0) * observed / expected;
    return res;
}

double nominal_alpha(const std::vector<std::vector<int>>& units) {
    std::map<int, std::map<int, double>> coincidence;
    size_t pairable_units = 0;
    for (const auto& values : units) {
        if (values.size() < 2) continue;
        ++pairable_units;
        std::map<int, double> counts;
        for (int v : values) counts[v] += 1.0;
        const double m = static_cast<double>(values.size());
        for (const auto& [c, nc] : counts) {
            for (const auto& [d, nd] : counts) {
                const double pairs = c == d ? nc * (nc - 1.0) : nc * nd;
                coincidence[c][d] += pairs / (m - 1.0);
            }
        }
    }
    if (pairable_units == 0) throw DegenerateDataError("no unit has two or more values");

    std::map<int, double> margins;
    double n = 0.0;
    for (const auto& [c, row] : coincidence) {
        for (const auto& [d, v] : row) margins[c] += v;
        n += margins[c];
    }
    double observed = 0.0;
    double expected = 0.0;
    for (const auto& [c, nc] : margins) {
        for (const auto& [d, nd] : margins) {
            if (c == d) continue;
            auto row = coincidence.find(c);
            if (row != coincidence.end()) {
                auto cell = row->second.find(d);
                if (cell != row->second.end()) observed += cell->second;
            }
            expected += nc * nd;
        }
    }
    if (expected == 0.0) {
        throw DegenerateDataError("every pairable value is identical; alpha undefined");
    }
    return 1.0 - (n - 1.0) * observed / expected;
}

std::map<std::string, VoteResult> consensus_by_sample(
    const std::vector<AnnotationRecord>& annotations) {
    std::map<std::string, std::vector<AnnotationRecord>> grouped;
    for (const auto& a : annotations) grouped[a.sample_id].push_back(a);
    std::map<std::string, VoteResult> out;
    for (const auto& [id, anns] : grouped) out[id] = majority_vote(anns);
    return out;
}

ExpertPerformance expert_performance(const std::vector<AnnotationRecord>& annotations,
                                     const std::map<std::string, Label>& consensus,
                                     size_t min_count) {
    std::map<std::string, std::vector<const AnnotationRecord*>> by_annotator;
    for (const auto& a : annotations) {
        if (consensus.count(a.sample_id) > 0) by_annotator[a.annotator_id].push_back(&a);
    }

    ExpertPerformance perf;
    std::vector<double> bins, mas, mis;
    for (const auto& [annotator, anns] : by_annotator) {
        if (anns.size() <= min_count) continue;  // strictly more than min_count
        std::vector<Label> preds, golds;
        preds.reserve(anns.size());
        golds.reserve(anns.size());
        for (const auto* a : anns) {
            switch (a->verdict) {
                case Verdict3::Yes: preds.push_back(Label::MisLC); break;
                case Verdict3::No: preds.push_back(Label::NonMisLC); break;
                case Verdict3::Unclear: preds.push_back(Label::Unclear); break;
            }
            golds.push_back(consensus.at(a->sample_id));
        }
        ExpertReport report;
        report.annotator_id = annotator;
        report.annotation_count = anns.size();
        report.bin_f1 = bin_f1(preds, golds);
        report.ma_f1 = ma_f1(preds, golds);
        report.mi_f1 = mi_f1(preds, golds);
        bins.push_back(report.bin_f1);
        mas.push_back(report.ma_f1);
        mis.push_back(report.mi_f1);
        perf.experts.push_back(std::move(report));
    }
    if (perf.experts.empty()) throw NoQualifiedExpertsError();

    auto stats = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
        return MetricStats{mean, std::sqrt(var)};
    };
    perf.bin = stats(bins);
    perf.ma = stats(mas);
    perf.mi = stats(mis);
    return perf;
}

}  // namespace mislc
