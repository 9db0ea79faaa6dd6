#pragma once

#include <string>
#include <utility>

#include "mislc/datamodel.hpp"
#include "mislc/gateways.hpp"
#include "mislc/index.hpp"
#include "mislc/retrieval.hpp"

namespace mislc {

enum class PromptMode { Constrained, Unconstrained };
PromptMode prompt_mode_from_string(const std::string& s);

// Blocks in order: legal context, web results, claim, classification
// instruction, and (constrained only) the output constraints. `accepted`
// carries already-generated text when a controller continues a generation.
std::string assemble_prompt(std::string_view sample_text, const RetrievedContext& ctx,
                            PromptMode mode, std::string_view accepted = "");

// Total verdict parse; the bool is the error flag and an error always maps
// to NonMisLC. Constrained mode searches for the three instructed keywords;
// multiple distinct keywords mean Unclear. Unconstrained mode prefers
// keyword mentions inside double quotes and knows only "factual" and
// "misinformation".
std::pair<Label, bool> parse_verdict(std::string_view text, PromptMode mode);

enum class RetrievalMode {
    None,
    RalmLegal,
    FlareLegal,
    FlareWeb,
    FlareLegalWeb,
    RandomLegal,
    OracleLegal,
    OracleWeb,
    OracleLegalWeb,
    FlareTheta1,  // flare_legal pinned to theta = 1
};
RetrievalMode retrieval_mode_from_string(const std::string& s);
std::string retrieval_mode_to_string(RetrievalMode m);

struct ClassifyOptions {
    RetrievalMode mode = RetrievalMode::None;
    PromptMode prompt_mode = PromptMode::Constrained;
    RalmParams ralm;
    FlareParams flare;
    double temperature = 0.3;
    int max_tokens = 1024;
    uint64_t seed = 0;      // drives the random-document ablation
    uint64_t llm_seed = 0;  // forwarded to backends that accept one
    size_t legal_top_k = 1;
    int web_num = 10;
};

struct ClassifyDeps {
    LlmClient* llm = nullptr;
    const PostingsIndex* index = nullptr;
    SearchClient* web = nullptr;
    PageFetcher* pages = nullptr;        // oracle evidence fetches
    const IssueCatalog* catalog = nullptr;  // oracle issue definitions
};

// Runs the configured controller for one sample, parses the verdict, and
// returns the prediction with its retrieval trace. Gateway errors propagate;
// the batch runner converts them into error predictions.
Prediction classify_sample(const Sample& sample, const ClassifyOptions& options,
                           const ClassifyDeps& deps);

}  // namespace mislc
