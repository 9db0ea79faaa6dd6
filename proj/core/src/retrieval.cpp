#include "mislc/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "mislc/errors.hpp"

namespace mislc {

QueryStrategy query_strategy_from_string(const std::string& s) {
    if (s == "masked") return QueryStrategy::Masked;
    if (s == "llm_generated") return QueryStrategy::LlmGenerated;
    throw ConfigError("unknown query strategy: " + s);
}

namespace {

std::string trim_copy(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

const char* source_label(SourceMode mode) {
    switch (mode) {
        case SourceMode::Legal: return "legal";
        case SourceMode::Web: return "web";
        default: return "both";
    }
}

bool wants_legal(SourceMode mode) {
    return mode == SourceMode::Legal || mode == SourceMode::LegalWeb;
}
bool wants_web(SourceMode mode) {
    return mode == SourceMode::Web || mode == SourceMode::LegalWeb;
}

// One retrieval trigger: query both configured backends, fold the results
// into the context, and record the trace event.
void retrieve_into(const std::string& query, SourceMode mode, const RetrievalBackends& backends,
                   uint64_t position, RetrievedContext& ctx,
                   std::vector<RetrievalEvent>& events) {
    RetrievalEvent ev;
    ev.position = position;
    ev.query = query;
    ev.source = source_label(mode);

    if (wants_legal(mode) && backends.index != nullptr && !query.empty()) {
        for (const auto& hit : backends.index->query(query, backends.legal_top_k)) {
            ev.chunk_ids.push_back(hit.chunk_id);
            ctx.legal_chunks.emplace_back(hit.chunk_id, backends.index->chunk_text(hit.ordinal));
        }
    }
    if (wants_web(mode) && backends.web != nullptr && !query.empty()) {
        const auto results = backends.web->web_search(query, backends.web_num);
        ev.web_result_count = results.size();
        if (!results.empty() && !results.front().snippet.empty()) {
            ctx.web_snippets.push_back(results.front().snippet);
        }
    }
    events.push_back(std::move(ev));
}

double token_prob(const TokenLogprob& t) { return std::exp(t.logprob); }

}  // namespace

ControllerResult ralm_generate(const std::string& sample_text, SourceMode mode,
                               const RalmParams& params, LlmClient& llm,
                               const RetrievalBackends& backends, const PromptBuilder& builder,
                               const GenerationRequest& base, const Tokenizer& tok) {
    if (params.delta < 1 || params.ell < 1) throw ConfigError("ralm stride/window must be >= 1");

    ControllerResult result;
    std::vector<std::string> sequence;  // claim tokens followed by generated tokens
    for (const auto& t : tok.tokenize(sample_text)) sequence.push_back(t.text);

    size_t generated = 0;
    const size_t budget = base.max_tokens > 0 ? static_cast<size_t>(base.max_tokens) : 0;

    while (true) {
        const size_t window = std::min(params.ell, sequence.size());
        std::string query;
        for (size_t i = sequence.size() - window; i < sequence.size(); ++i) {
            if (!query.empty()) query += ' ';
            query += sequence[i];
        }

        RetrievedContext ctx;
        ctx.source_mode = mode;
        retrieve_into(query, mode, backends, generated, ctx, result.events);

        GenerationRequest req = base;
        req.want_logprobs = false;
        req.prompt = builder(ctx, result.text);
        req.max_tokens = static_cast<int>(std::min(params.delta, budget - generated));
        result.prompts.push_back(req.prompt);

        const auto resp = llm.generate(req);
        const auto stride_tokens = tok.tokenize(resp.text);
        for (const auto& t : stride_tokens) sequence.push_back(t.text);
        generated += stride_tokens.size();
        result.text += resp.text;

        if (resp.finish_reason == FinishReason::Stop || resp.text.empty() ||
            stride_tokens.size() < params.delta || generated >= budget) {
            break;
        }
    }
    return result;
}

std::vector<std::pair<size_t, size_t>> split_sentence_spans(std::string_view text) {
    std::vector<std::pair<size_t, size_t>> spans;
    size_t start = 0;
    size_t i = 0;
    const size_t n = text.size();
    auto is_terminator = [](char c) { return c == '.' || c == '!' || c == '?'; };

    while (i < n) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        size_t j = i + 1;
        while (j < n && is_terminator(text[j])) ++j;
        if (j >= n) break;  // terminal punctuation at end: the tail closes below
        if (std::isspace(static_cast<unsigned char>(text[j]))) {
            size_t k = j;
            while (k < n && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
            spans.emplace_back(start, k);  // trailing whitespace stays with the sentence
            start = k;
            i = k;
        } else {
            i = j;
        }
    }
    if (start < n) spans.emplace_back(start, n);
    return spans;
}

std::string qry_masked(const std::vector<TokenLogprob>& sentence_tokens, double beta) {
    std::string masked;
    for (const auto& t : sentence_tokens) {
        if (token_prob(t) < beta) continue;
        const std::string word = trim_copy(t.token);
        if (word.empty()) continue;
        if (!masked.empty()) masked += ' ';
        masked += word;
    }
    if (!masked.empty()) return masked;
    // everything was masked: fall back to the whole sentence
    std::string full;
    for (const auto& t : sentence_tokens) full += t.token;
    return trim_copy(full);
}

std::vector<std::string> low_confidence_spans(const std::vector<TokenLogprob>& sentence_tokens,
                                              double beta) {
    std::vector<std::string> spans;
    std::string current;
    for (const auto& t : sentence_tokens) {
        if (token_prob(t) < beta) {
            current += t.token;
        } else if (!current.empty()) {
            spans.push_back(trim_copy(current));
            current.clear();
        }
    }
    if (!current.empty()) spans.push_back(trim_copy(current));
    return spans;
}

std::vector<std::string> qry_llm(const std::vector<TokenLogprob>& sentence_tokens, double beta,
                                 LlmClient& llm) {
    std::string sentence;
    for (const auto& t : sentence_tokens) sentence += t.token;
    sentence = trim_copy(sentence);

    std::vector<std::string> queries;
    for (const auto& span : low_confidence_spans(sentence_tokens, beta)) {
        GenerationRequest req;
        req.prompt = "Write a short search query, phrased as a question, about the uncertain "
                     "span below.\nSentence: \"" +
                     sentence + "\"\nSpan: \"" + span + "\"\nQuery:";
        req.temperature = 0.0;
        req.max_tokens = 64;
        const auto resp = llm.generate(req);
        std::string query = trim_copy(resp.text);
        if (query.empty()) query = qry_masked(sentence_tokens, beta);
        queries.push_back(std::move(query));
    }
    return queries;
}

ControllerResult flare_generate(const std::string& sample_text, SourceMode mode,
                                const FlareParams& params, LlmClient& llm,
                                const RetrievalBackends& backends, const PromptBuilder& builder,
                                const GenerationRequest& base) {
    (void)sample_text;  // the claim lives in the prompt template
    if (params.theta < 0.0 || params.theta > 1.0 || params.beta < 0.0 || params.beta > 1.0) {
        throw ConfigError("flare theta/beta must lie in [0,1]");
    }

    ControllerResult result;
    RetrievedContext no_ctx;
    no_ctx.source_mode = SourceMode::None;

    auto append_sentence = [&result](std::string_view sentence) {
        if (sentence.empty()) return;
        if (!result.text.empty() &&
            !std::isspace(static_cast<unsigned char>(result.text.back())) &&
            !std::isspace(static_cast<unsigned char>(sentence.front()))) {
            result.text += ' ';
        }
        result.text += sentence;
    };

    constexpr size_t kSentenceCap = 256;
    size_t sentence_index = 0;

    while (sentence_index < kSentenceCap) {
        GenerationRequest req = base;
        req.want_logprobs = true;
        req.prompt = builder(no_ctx, result.text);
        result.prompts.push_back(req.prompt);
        const auto tentative = llm.generate(req);
        if (tentative.text.empty()) break;
        if (tentative.tokens.empty()) throw LogprobsUnavailableError();

        const auto spans = split_sentence_spans(tentative.text);
        const auto [sb, se] = spans.front();
        const std::string sentence = tentative.text.substr(sb, se - sb);

        // tokens belong to the sentence containing their final character
        std::vector<TokenLogprob> sentence_tokens;
        size_t offset = 0;
        for (const auto& t : tentative.tokens) {
            const size_t t_end = offset + t.token.size();
            if (t_end > sb && t_end - 1 < se) sentence_tokens.push_back(t);
            offset = t_end;
        }

        double min_prob = 1.0;
        for (const auto& t : sentence_tokens) min_prob = std::min(min_prob, token_prob(t));

        if (min_prob >= params.theta || sentence_tokens.empty()) {
            append_sentence(sentence);
        } else {
            std::vector<std::string> queries;
            if (params.query_strategy == QueryStrategy::LlmGenerated) {
                queries = qry_llm(sentence_tokens, params.beta, llm);
            }
            if (queries.empty()) queries.push_back(qry_masked(sentence_tokens, params.beta));

            RetrievedContext ctx;
            ctx.source_mode = mode;
            for (const auto& q : queries) {
                retrieve_into(q, mode, backends, sentence_index, ctx, result.events);
            }

            GenerationRequest regen_req = base;
            regen_req.want_logprobs = true;
            regen_req.prompt = builder(ctx, result.text);
            result.prompts.push_back(regen_req.prompt);
            const auto regen = llm.generate(regen_req);

            const auto regen_spans = split_sentence_spans(regen.text);
            if (!regen_spans.empty()) {
                const auto [rb, re] = regen_spans.front();
                append_sentence(std::string_view(regen.text).substr(rb, re - rb));
            }
            ++result.regenerations;
        }

        ++sentence_index;
        const bool consumed_all = spans.size() == 1;
        if (consumed_all && tentative.finish_reason == FinishReason::Stop) break;
    }
    return result;
}

RandomChunk random_legal_retrieve(const PostingsIndex& index, Rng& rng) {
    if (index.size() == 0) throw EmptyCorpusError();
    const uint64_t ordinal = rng.next_index(index.size());
    return RandomChunk{index.doc(ordinal).chunk_id, index.chunk_text(ordinal)};
}

std::optional<std::string> oracle_legal_context(const Sample& sample,
                                                const IssueCatalog& catalog) {
    if (sample.legal_issues.empty()) return std::nullopt;
    for (const auto& id : sample.legal_issues) {
        if (!catalog.contains(id)) throw UnknownIssueIdError(id);
    }
    std::string out;
    for (const auto& issue : catalog.issues()) {
        if (std::find(sample.legal_issues.begin(), sample.legal_issues.end(), issue.id) ==
            sample.legal_issues.end()) {
            continue;
        }
        if (!out.empty()) out += "\n\n";
        out += issue.definition_text;
    }
    return out;
}

}  // namespace mislc
