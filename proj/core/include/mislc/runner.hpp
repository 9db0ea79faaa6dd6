#pragma once

#include <functional>
#include <vector>

#include "mislc/config.hpp"
#include "mislc/datamodel.hpp"
#include "mislc/detector.hpp"

namespace mislc {

using ProgressFn = std::function<void(size_t done, size_t total)>;

// Classifies every sample over a bounded worker pool. Predictions come back
// in input order regardless of completion order; gateway failures become
// error predictions instead of aborting the batch.
std::vector<Prediction> run_pipeline(const std::vector<Sample>& samples,
                                     const ClassifyOptions& options, const ClassifyDeps& deps,
                                     size_t parallelism, const ProgressFn& progress = {});

ClassifyOptions classify_options_from_config(const RunConfig& cfg);

// Aggregate retrieval statistics for run logs and theta sweeps.
struct TraceSummary {
    size_t retrieval_events = 0;
    size_t legal_chunks = 0;
    size_t web_queries = 0;
    size_t errors = 0;
};
TraceSummary summarize_traces(const std::vector<Prediction>& predictions);

}  // namespace mislc
