#include "mislc/detector.hpp"

#include <algorithm>

#include "mislc/errors.hpp"
#include "mislc/hash.hpp"
#include "mislc/tokenizer.hpp"

namespace mislc {

namespace {

constexpr std::string_view kLegalPreamble =
    "Here is some relevant legal context on \"misinformation\": ";
constexpr std::string_view kWebPreamble = "Web search results for the claim: ";
constexpr std::string_view kClassify =
    "Classify the claim as either \"factual\" or \"misinformation.\"";
constexpr std::string_view kConstraints =
    "Do not refuse to answer. Do not engage in explanations and politeness. Only respond with "
    "the words \"misinformation\", \"factual\", or \"unsure\". Do not add further context.";

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

// text between successive pairs of straight double quotes
std::string quoted_segments(std::string_view text) {
    std::string out;
    size_t pos = 0;
    while (true) {
        const size_t open = text.find('"', pos);
        if (open == std::string_view::npos) break;
        const size_t close = text.find('"', open + 1);
        if (close == std::string_view::npos) break;
        out.append(text.substr(open + 1, close - open - 1));
        out.push_back('\n');
        pos = close + 1;
    }
    return out;
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

PromptMode prompt_mode_from_string(const std::string& s) {
    if (s == "constrained") return PromptMode::Constrained;
    if (s == "unconstrained") return PromptMode::Unconstrained;
    throw ConfigError("unknown prompt mode: " + s);
}

std::string assemble_prompt(std::string_view sample_text, const RetrievedContext& ctx,
                            PromptMode mode, std::string_view accepted) {
    std::string prompt;

    if (!ctx.legal_chunks.empty()) {
        prompt += kLegalPreamble;
        for (size_t i = 0; i < ctx.legal_chunks.size(); ++i) {
            if (i > 0) prompt += "\n\n";
            prompt += ctx.legal_chunks[i].second;
        }
        prompt += "\n\n";
    }
    if (!ctx.web_snippets.empty()) {
        prompt += kWebPreamble;
        for (size_t i = 0; i < ctx.web_snippets.size(); ++i) {
            if (i > 0) prompt += ' ';
            prompt += ctx.web_snippets[i];
        }
        prompt += "\n\n";
    }

    prompt += "Claim: ";
    prompt += sample_text;
    prompt += '\n';
    prompt += kClassify;
    if (mode == PromptMode::Constrained) {
        prompt += '\n';
        prompt += kConstraints;
    }
    if (!accepted.empty()) {
        prompt += '\n';
        prompt += accepted;
    }
    return prompt;
}

std::pair<Label, bool> parse_verdict(std::string_view text, PromptMode mode) {
    const std::string lower = ascii_lower(text);

    if (mode == PromptMode::Constrained) {
        const bool has_mis = contains(lower, "misinformation");
        const bool has_fact = contains(lower, "factual");
        const bool has_unsure = contains(lower, "unsure");
        const int found = has_mis + has_fact + has_unsure;
        if (found == 0) return {Label::NonMisLC, true};
        if (found > 1) return {Label::Unclear, false};
        if (has_mis) return {Label::MisLC, false};
        if (has_fact) return {Label::NonMisLC, false};
        return {Label::Unclear, false};
    }

    // unconstrained: quoted mentions win over the full text
    const std::string quoted = quoted_segments(lower);
    std::string_view space = lower;
    if (contains(quoted, "misinformation") || contains(quoted, "factual")) space = quoted;
    const bool has_mis = contains(space, "misinformation");
    const bool has_fact = contains(space, "factual");
    if (has_mis && has_fact) return {Label::Unclear, false};
    if (has_mis) return {Label::MisLC, false};
    if (has_fact) return {Label::NonMisLC, false};
    return {Label::NonMisLC, true};
}

RetrievalMode retrieval_mode_from_string(const std::string& s) {
    if (s == "none") return RetrievalMode::None;
    if (s == "ralm_legal") return RetrievalMode::RalmLegal;
    if (s == "flare_legal") return RetrievalMode::FlareLegal;
    if (s == "flare_web") return RetrievalMode::FlareWeb;
    if (s == "flare_legal_web") return RetrievalMode::FlareLegalWeb;
    if (s == "random_legal") return RetrievalMode::RandomLegal;
    if (s == "oracle_legal") return RetrievalMode::OracleLegal;
    if (s == "oracle_web") return RetrievalMode::OracleWeb;
    if (s == "oracle_legal_web") return RetrievalMode::OracleLegalWeb;
    if (s == "flare_theta1") return RetrievalMode::FlareTheta1;
    throw ConfigError("unknown retrieval mode: " + s);
}

std::string retrieval_mode_to_string(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::None: return "none";
        case RetrievalMode::RalmLegal: return "ralm_legal";
        case RetrievalMode::FlareLegal: return "flare_legal";
        case RetrievalMode::FlareWeb: return "flare_web";
        case RetrievalMode::FlareLegalWeb: return "flare_legal_web";
        case RetrievalMode::RandomLegal: return "random_legal";
        case RetrievalMode::OracleLegal: return "oracle_legal";
        case RetrievalMode::OracleWeb: return "oracle_web";
        case RetrievalMode::OracleLegalWeb: return "oracle_legal_web";
        case RetrievalMode::FlareTheta1: return "flare_theta1";
    }
    return "?";
}

namespace {

struct GenerationOutcome {
    std::string text;
    std::vector<RetrievalEvent> events;
    std::vector<std::string> prompts;
};

GenerationOutcome single_shot(const Sample& sample, const RetrievedContext& ctx,
                              const ClassifyOptions& options, LlmClient& llm) {
    GenerationRequest req;
    req.prompt = assemble_prompt(sample.text, ctx, options.prompt_mode);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.seed = options.llm_seed;
    GenerationOutcome out;
    out.prompts.push_back(req.prompt);
    out.text = llm.generate(req).text;
    return out;
}

GenerationOutcome run_controller(const Sample& sample, const ClassifyOptions& options,
                                 const ClassifyDeps& deps, RetrievalMode mode) {
    PromptBuilder builder = [&](const RetrievedContext& ctx, std::string_view accepted) {
        return assemble_prompt(sample.text, ctx, options.prompt_mode, accepted);
    };
    RetrievalBackends backends;
    backends.index = deps.index;
    backends.web = deps.web;
    backends.legal_top_k = options.legal_top_k;
    backends.web_num = options.web_num;

    GenerationRequest base;
    base.temperature = options.temperature;
    base.max_tokens = options.max_tokens;
    base.seed = options.llm_seed;

    ControllerResult res;
    switch (mode) {
        case RetrievalMode::RalmLegal: {
            if (deps.index == nullptr) throw ConfigError("ralm_legal requires an index");
            WhitespacePunctTokenizer tok;
            res = ralm_generate(sample.text, SourceMode::Legal, options.ralm, *deps.llm, backends,
                                builder, base, tok);
            break;
        }
        case RetrievalMode::FlareLegal:
        case RetrievalMode::FlareWeb:
        case RetrievalMode::FlareLegalWeb:
        case RetrievalMode::FlareTheta1: {
            SourceMode src = SourceMode::Legal;
            if (mode == RetrievalMode::FlareWeb) src = SourceMode::Web;
            if (mode == RetrievalMode::FlareLegalWeb) src = SourceMode::LegalWeb;
            FlareParams params = options.flare;
            if (mode == RetrievalMode::FlareTheta1) params.theta = 1.0;
            if ((src == SourceMode::Legal || src == SourceMode::LegalWeb) &&
                deps.index == nullptr) {
                throw ConfigError("flare legal retrieval requires an index");
            }
            if ((src == SourceMode::Web || src == SourceMode::LegalWeb) && deps.web == nullptr) {
                throw ConfigError("flare web retrieval requires a search client");
            }
            res = flare_generate(sample.text, src, params, *deps.llm, backends, builder, base);
            break;
        }
        default:
            throw ConfigError("not a controller mode: " + retrieval_mode_to_string(mode));
    }
    return GenerationOutcome{std::move(res.text), std::move(res.events), std::move(res.prompts)};
}

}  // namespace

Prediction classify_sample(const Sample& sample, const ClassifyOptions& options,
                           const ClassifyDeps& deps) {
    if (deps.llm == nullptr) throw ConfigError("classify_sample requires an llm client");

    GenerationOutcome outcome;
    switch (options.mode) {
        case RetrievalMode::None: {
            RetrievedContext ctx;
            outcome = single_shot(sample, ctx, options, *deps.llm);
            break;
        }
        case RetrievalMode::RalmLegal:
        case RetrievalMode::FlareLegal:
        case RetrievalMode::FlareWeb:
        case RetrievalMode::FlareLegalWeb:
        case RetrievalMode::FlareTheta1:
            outcome = run_controller(sample, options, deps, options.mode);
            break;
        case RetrievalMode::RandomLegal: {
            if (deps.index == nullptr) throw ConfigError("random_legal requires an index");
            // per-sample stream so parallel batches stay deterministic
            Rng rng(options.seed ^ fnv1a(sample.id));
            const auto chunk = random_legal_retrieve(*deps.index, rng);
            RetrievedContext ctx;
            ctx.source_mode = SourceMode::RandomLegal;
            ctx.legal_chunks.emplace_back(chunk.chunk_id, chunk.text);
            RetrievalEvent ev;
            ev.source = "legal";
            ev.chunk_ids.push_back(chunk.chunk_id);
            outcome = single_shot(sample, ctx, options, *deps.llm);
            outcome.events.push_back(std::move(ev));
            break;
        }
        case RetrievalMode::OracleLegal:
        case RetrievalMode::OracleWeb:
        case RetrievalMode::OracleLegalWeb: {
            const bool want_legal = options.mode != RetrievalMode::OracleWeb;
            const bool want_web = options.mode != RetrievalMode::OracleLegal;

            std::optional<std::string> defs;
            if (want_legal) {
                if (deps.catalog == nullptr) throw ConfigError("oracle_legal requires a catalog");
                defs = oracle_legal_context(sample, *deps.catalog);
                if (!defs.has_value()) {
                    // no gold issues: fall back to the normal retrieval pipeline
                    ClassifyOptions fallback = options;
                    fallback.mode = options.mode == RetrievalMode::OracleLegal
                                        ? RetrievalMode::FlareLegal
                                        : RetrievalMode::FlareLegalWeb;
                    outcome = run_controller(sample, fallback, deps, fallback.mode);
                    break;
                }
            }

            RetrievedContext ctx;
            ctx.source_mode = options.mode == RetrievalMode::OracleLegal ? SourceMode::OracleLegal
                              : options.mode == RetrievalMode::OracleWeb
                                  ? SourceMode::OracleWeb
                                  : SourceMode::OracleLegalWeb;
            std::vector<RetrievalEvent> events;
            if (defs.has_value()) {
                std::string id = "oracle";
                for (const auto& issue : sample.legal_issues) id += ":" + issue;
                ctx.legal_chunks.emplace_back(id, *defs);
                RetrievalEvent ev;
                ev.source = "legal";
                ev.chunk_ids = sample.legal_issues;
                events.push_back(std::move(ev));
            }
            if (want_web) {
                if (deps.pages == nullptr) throw ConfigError("oracle_web requires a page fetcher");
                const std::string extract =
                    fetch_oracle_evidence(sample.evidence_urls, *deps.pages);
                if (!extract.empty()) ctx.web_snippets.push_back(extract);
                RetrievalEvent ev;
                ev.source = "web";
                ev.web_result_count = sample.evidence_urls.size();
                events.push_back(std::move(ev));
            }
            outcome = single_shot(sample, ctx, options, *deps.llm);
            for (auto& ev : events) outcome.events.push_back(std::move(ev));
            break;
        }
    }

    const auto [verdict, is_error] = parse_verdict(outcome.text, options.prompt_mode);

    Prediction pred;
    pred.sample_id = sample.id;
    pred.verdict = is_error ? Label::NonMisLC : verdict;
    pred.is_error = is_error;
    pred.raw_text = std::move(outcome.text);
    pred.retrieval_trace = std::move(outcome.events);

    std::string prompt_blob;
    for (const auto& p : outcome.prompts) {
        prompt_blob += p;
        prompt_blob += '\x1e';
    }
    pred.prompt_sha256 = sha256_hex(prompt_blob);
    return pred;
}

}  // namespace mislc
