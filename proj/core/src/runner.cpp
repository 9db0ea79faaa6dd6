#include "mislc/runner.hpp"

#include <atomic>
#include <thread>

#include "mislc/errors.hpp"

namespace mislc {

namespace {

Prediction error_prediction(const Sample& sample, const std::string& reason) {
    Prediction p;
    p.sample_id = sample.id;
    p.verdict = Label::NonMisLC;
    p.is_error = true;
    p.raw_text = reason;
    return p;
}

}  // namespace

std::vector<Prediction> run_pipeline(const std::vector<Sample>& samples,
                                     const ClassifyOptions& options, const ClassifyDeps& deps,
                                     size_t parallelism, const ProgressFn& progress) {
    if (parallelism < 1) throw ConfigError("run.parallelism must be >= 1");

    std::vector<Prediction> predictions(samples.size());
    std::atomic<size_t> cursor{0};
    std::atomic<size_t> done{0};
    std::atomic<bool> fatal{false};
    std::exception_ptr fatal_error;
    std::mutex fatal_mu;

    auto report_progress = [&]() {
        const size_t d = done.fetch_add(1) + 1;
        if (progress) progress(d, samples.size());
    };

    auto worker = [&]() {
        while (!fatal.load()) {
            const size_t i = cursor.fetch_add(1);
            if (i >= samples.size()) return;
            try {
                predictions[i] = classify_sample(samples[i], options, deps);
            } catch (const TransportError& e) {
                predictions[i] = error_prediction(samples[i], e.what());
            } catch (const ProtocolError& e) {
                predictions[i] = error_prediction(samples[i], e.what());
            } catch (const QuotaExceededError& e) {
                predictions[i] = error_prediction(samples[i], e.what());
            } catch (const LogprobsUnavailableError& e) {
                predictions[i] = error_prediction(samples[i], e.what());
            } catch (...) {
                // configuration and logic errors abort the batch
                std::lock_guard<std::mutex> lock(fatal_mu);
                if (!fatal.exchange(true)) fatal_error = std::current_exception();
                return;
            }
            report_progress();
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const size_t workers = std::min(parallelism, samples.size() > 0 ? samples.size() : 1);
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal.load()) std::rethrow_exception(fatal_error);
    return predictions;
}

ClassifyOptions classify_options_from_config(const RunConfig& cfg) {
    ClassifyOptions opts;
    opts.llm_seed = cfg.seed;
    opts.mode = retrieval_mode_from_string(cfg.retrieval.mode);
    opts.prompt_mode = prompt_mode_from_string(cfg.prompt.mode);
    opts.ralm.delta = cfg.retrieval.delta;
    opts.ralm.ell = cfg.retrieval.ell;
    opts.flare.theta = cfg.retrieval.theta;
    opts.flare.beta = cfg.retrieval.beta;
    opts.flare.query_strategy = query_strategy_from_string(cfg.retrieval.query_strategy);
    opts.temperature = cfg.llm.temperature;
    opts.max_tokens = cfg.llm.max_tokens;
    opts.seed = cfg.retrieval.seed;
    opts.legal_top_k = cfg.retrieval.top_k;
    opts.web_num = cfg.search.num;
    return opts;
}

TraceSummary summarize_traces(const std::vector<Prediction>& predictions) {
    TraceSummary s;
    for (const auto& p : predictions) {
        s.errors += p.is_error;
        s.retrieval_events += p.retrieval_trace.size();
        for (const auto& ev : p.retrieval_trace) {
            s.legal_chunks += ev.chunk_ids.size();
            s.web_queries += ev.source != "legal";
        }
    }
    return s;
}

}  // namespace mislc
