#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mislc/datamodel.hpp"
#include "mislc/gateways.hpp"
#include "mislc/index.hpp"
#include "mislc/rng.hpp"
#include "mislc/tokenizer.hpp"

namespace mislc {

struct RalmParams {
    size_t delta = 4;  // retrieval stride, in generated tokens
    size_t ell = 32;   // query window, in tokens of the running sequence
};

enum class QueryStrategy { Masked, LlmGenerated };
QueryStrategy query_strategy_from_string(const std::string& s);

struct FlareParams {
    double theta = 0.5;  // regenerate when the sentence's min token prob < theta
    double beta = 0.4;   // mask tokens below beta when forming queries
    QueryStrategy query_strategy = QueryStrategy::Masked;
};

// Builds the full prompt for a generation attempt: retrieval blocks, claim,
// instructions, then any already-accepted generation text. Supplied by the
// detector so controllers stay template-agnostic.
using PromptBuilder =
    std::function<std::string(const RetrievedContext&, std::string_view accepted)>;

struct RetrievalBackends {
    const PostingsIndex* index = nullptr;
    SearchClient* web = nullptr;
    size_t legal_top_k = 1;  // documents prepended per trigger
    int web_num = 10;        // fetched per query; only the first result is consumed
};

struct ControllerResult {
    std::string text;  // the full generation
    std::vector<RetrievalEvent> events;
    size_t regenerations = 0;  // FLARE only
    std::vector<std::string> prompts;  // every prompt issued, in order
};

// Fixed-stride retrieval: before each stride of delta tokens the last
// min(ell, history) tokens of the running sequence (claim + generation so
// far) form the query, and the retrieved document replaces the retrieval
// slot of the prompt.
ControllerResult ralm_generate(const std::string& sample_text, SourceMode mode,
                               const RalmParams& params, LlmClient& llm,
                               const RetrievalBackends& backends, const PromptBuilder& builder,
                               const GenerationRequest& base, const Tokenizer& tok);

// Confidence-gated retrieval: each sentence is generated tentatively without
// fresh retrieval and kept if its minimum token probability reaches theta;
// otherwise queries are formed, context is retrieved, and the sentence is
// regenerated with that context prepended.
ControllerResult flare_generate(const std::string& sample_text, SourceMode mode,
                                const FlareParams& params, LlmClient& llm,
                                const RetrievalBackends& backends, const PromptBuilder& builder,
                                const GenerationRequest& base);

// Sentence with every token below beta removed; falls back to the full
// sentence when everything is masked. Token texts are trimmed and joined
// with single spaces.
std::string qry_masked(const std::vector<TokenLogprob>& sentence_tokens, double beta);

// Maximal runs of consecutive tokens with probability < beta.
std::vector<std::string> low_confidence_spans(const std::vector<TokenLogprob>& sentence_tokens,
                                              double beta);

// One LLM-written query per low-confidence span; an empty reply falls back
// to the masked query for the sentence.
std::vector<std::string> qry_llm(const std::vector<TokenLogprob>& sentence_tokens, double beta,
                                 LlmClient& llm);

struct RandomChunk {
    std::string chunk_id;
    std::string text;
};

// Uniform draw over the index, deterministic per generator state.
RandomChunk random_legal_retrieve(const PostingsIndex& index, Rng& rng);

// Concatenated definitions of the sample's gold issues in catalog order;
// nullopt signals "no gold issues, run the normal retrieval pipeline".
std::optional<std::string> oracle_legal_context(const Sample& sample,
                                                const IssueCatalog& catalog);

// Byte spans covering the whole string; a sentence ends after [.!?]+
// followed by whitespace (the whitespace stays with the ending sentence).
std::vector<std::pair<size_t, size_t>> split_sentence_spans(std::string_view text);

}  // namespace mislc
