#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "mislc/errors.hpp"
#include "mislc/gateways.hpp"
#include "mislc/index.hpp"
#include "mislc/retrieval.hpp"
#include "mislc/rng.hpp"
#include "mislc/tokenizer.hpp"

using namespace mislc;
using nlohmann::json;

namespace {

// minimal prompt builder for controller tests; marks retrieval context so
// mock rules can key on it
PromptBuilder test_builder(const std::string& claim) {
    return [claim](const RetrievedContext& ctx, std::string_view accepted) {
        std::string p;
        if (!ctx.legal_chunks.empty() || !ctx.web_snippets.empty()) {
            p += "CTXBLOCK[";
            for (const auto& [id, text] : ctx.legal_chunks) p += id + ";";
            for (const auto& s : ctx.web_snippets) p += s + ";";
            p += "] ";
        }
        p += "CLAIM: " + claim;
        if (!accepted.empty()) {
            p += "\n";
            p += accepted;
        }
        return p;
    };
}

std::vector<TokenLogprob> probed(std::initializer_list<std::pair<const char*, double>> items) {
    std::vector<TokenLogprob> tokens;
    for (const auto& [text, prob] : items) {
        tokens.push_back(TokenLogprob{text, std::log(prob)});
    }
    return tokens;
}

PostingsIndex tiny_index(const std::vector<std::string>& texts) {
    WhitespacePunctTokenizer tok;
    std::vector<Chunk> chunks;
    for (size_t i = 0; i < texts.size(); ++i) {
        chunks.push_back(Chunk{"k" + std::to_string(i), "doc", 0, 1, texts[i], 0});
    }
    return PostingsIndex::build(chunks, tok);
}

// scripts an n-token generation delivered in delta-token strides
MockLlmClient stride_script(size_t n, size_t delta) {
    json responses = json::array();
    size_t emitted = 0;
    while (emitted < n) {
        std::string text;
        for (size_t i = 0; i < delta && emitted < n; ++i, ++emitted) {
            if (!text.empty()) text += ' ';
            text += "g" + std::to_string(emitted);
        }
        responses.push_back({{"text", text}});
    }
    json script;
    script["rules"] = json::array({{{"match", ""}, {"responses", responses}}});
    return MockLlmClient::from_json_text(script.dump());
}

struct NoLogprobsClient final : LlmClient {
    GenerationResponse generate(const GenerationRequest&) override {
        GenerationResponse r;
        r.text = "some text.";
        r.finish_reason = FinishReason::Stop;
        return r;  // tokens deliberately missing
    }
};

}  // namespace

TEST_SUITE("retrieval") {
    TEST_CASE("sentence spans cover and reconstruct") {
        const std::string text = "One. Two two! Three? ";
        const auto spans = split_sentence_spans(text);
        REQUIRE(spans.size() == 3);
        std::string rebuilt;
        for (const auto& [b, e] : spans) rebuilt += text.substr(b, e - b);
        CHECK(rebuilt == text);
        CHECK(text.substr(spans[0].first, spans[0].second - spans[0].first) == "One. ");
        CHECK(split_sentence_spans("no terminator").size() == 1);
        CHECK(split_sentence_spans("3.14 is pi").size() == 1);  // no whitespace after the dot
        CHECK(split_sentence_spans("").empty());
    }

    TEST_CASE("masked query drops low-confidence tokens") {
        CHECK(qry_masked(probed({{"the", 0.9}, {" flork", 0.1}}), 0.4) == "the");
        CHECK(qry_masked(probed({{"all", 0.9}, {" good", 0.8}}), 0.4) == "all good");
        CHECK(qry_masked(probed({{"all", 0.1}, {" bad", 0.2}}), 0.4) == "all bad");  // fallback
    }

    TEST_CASE("low-confidence spans are maximal runs") {
        const auto spans = low_confidence_spans(
            probed({{"a", 0.9}, {" b", 0.1}, {" c", 0.2}, {" d", 0.9}, {" e", 0.3}}), 0.4);
        REQUIRE(spans.size() == 2);
        CHECK(spans[0] == "b c");
        CHECK(spans[1] == "e");
    }

    TEST_CASE("llm query generation per span with fallback") {
        SUBCASE("no spans, no queries") {
            auto mock = MockLlmClient::from_json_text(R"({"default": {"text": "q?"}})");
            CHECK(qry_llm(probed({{"fine", 0.9}}), 0.4, mock).empty());
        }
        SUBCASE("scripted query") {
            auto mock = MockLlmClient::from_json_text(
                R"({"default": {"text": "Who supplied the troops?"}})");
            const auto queries = qry_llm(probed({{"the", 0.9}, {" troops", 0.1}}), 0.4, mock);
            REQUIRE(queries.size() == 1);
            CHECK(queries[0] == "Who supplied the troops?");
        }
        SUBCASE("empty reply falls back to the masked query") {
            auto mock = MockLlmClient::from_json_text(R"({"default": {"text": ""}})");
            const auto queries = qry_llm(probed({{"the", 0.9}, {" troops", 0.1}}), 0.4, mock);
            REQUIRE(queries.size() == 1);
            CHECK(queries[0] == "the");
        }
    }

    TEST_CASE("ralm emits ceil(n/delta) events at stride positions") {
        const auto index = tiny_index({"g0 g1 background", "other text"});
        RetrievalBackends backends;
        backends.index = &index;
        WhitespacePunctTokenizer tok;
        GenerationRequest base;
        base.max_tokens = 1024;

        SUBCASE("eight tokens, stride four") {
            auto mock = stride_script(8, 4);
            const auto result = ralm_generate("c0 c1 c2", SourceMode::Legal, RalmParams{4, 32},
                                              mock, backends, test_builder("c0 c1 c2"), base, tok);
            REQUIRE(result.events.size() == 2);
            CHECK(result.events[0].position == 0);
            CHECK(result.events[1].position == 4);
        }
        SUBCASE("one token still retrieves once") {
            auto mock = stride_script(1, 4);
            const auto result = ralm_generate("claim words", SourceMode::Legal, RalmParams{4, 32},
                                              mock, backends, test_builder("claim words"), base,
                                              tok);
            REQUIRE(result.events.size() == 1);
            CHECK(result.events[0].position == 0);
        }
        SUBCASE("window larger than history uses everything") {
            auto mock = stride_script(4, 4);
            const std::string claim = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9";
            const auto result = ralm_generate(claim, SourceMode::Legal, RalmParams{4, 32}, mock,
                                              backends, test_builder(claim), base, tok);
            REQUIRE(!result.events.empty());
            CHECK(result.events[0].query == claim);  // all ten tokens
        }
    }

    TEST_CASE("ralm query locality across n in 1..64") {
        const auto index = tiny_index({"whatever text"});
        RetrievalBackends backends;
        backends.index = &index;
        WhitespacePunctTokenizer tok;
        GenerationRequest base;
        base.max_tokens = 1024;
        const RalmParams params{4, 32};
        const std::string claim = "c0 c1 c2 c3 c4";

        for (size_t n = 1; n <= 64; ++n) {
            auto mock = stride_script(n, params.delta);
            const auto result = ralm_generate(claim, SourceMode::Legal, params, mock, backends,
                                              test_builder(claim), base, tok);
            const size_t expected_events = (n + params.delta - 1) / params.delta;
            REQUIRE(result.events.size() == expected_events);

            // replay the running token sequence to check each query
            std::vector<std::string> sequence;
            for (const auto& t : tok.tokenize(claim)) sequence.push_back(t.text);
            for (size_t j = 0; j < expected_events; ++j) {
                const size_t window = std::min<size_t>(params.ell, sequence.size());
                std::string expected_query;
                for (size_t i = sequence.size() - window; i < sequence.size(); ++i) {
                    if (!expected_query.empty()) expected_query += ' ';
                    expected_query += sequence[i];
                }
                CHECK(result.events[j].position == j * params.delta);
                CHECK(result.events[j].query == expected_query);
                for (size_t t = j * params.delta; t < std::min(n, (j + 1) * params.delta); ++t) {
                    sequence.push_back("g" + std::to_string(t));
                }
            }
        }
    }

    TEST_CASE("flare keeps confident sentences and regenerates the rest") {
        const auto index = tiny_index({"flork legal background", "sentence one background"});
        RetrievalBackends backends;
        backends.index = &index;
        GenerationRequest base;
        base.max_tokens = 1024;

        const std::string script = R"({
            "rules": [
                {"match": "CTXBLOCK", "response": {"text": "Regenerated sentence.", "probs": [0.95]}},
                {"match": "", "responses": [
                    {"text": "Sentence one is fine.", "probs": [0.9]},
                    {"text": "The flork bligs mimsy.", "probs": [0.2]}
                ]}
            ]
        })";

        SUBCASE("theta zero never regenerates") {
            auto mock = MockLlmClient::from_json_text(script);
            const auto result = flare_generate("claim", SourceMode::Legal, FlareParams{0.0, 0.4},
                                               mock, backends, test_builder("claim"), base);
            CHECK(result.regenerations == 0);
            CHECK(result.events.empty());
            CHECK(result.text == "Sentence one is fine. The flork bligs mimsy.");
        }
        SUBCASE("mid theta regenerates exactly the weak sentence") {
            auto mock = MockLlmClient::from_json_text(script);
            const auto result = flare_generate("claim", SourceMode::Legal, FlareParams{0.5, 0.4},
                                               mock, backends, test_builder("claim"), base);
            CHECK(result.regenerations == 1);
            REQUIRE(result.events.size() == 1);
            CHECK(result.events[0].position == 1);  // sentence index
            CHECK(result.events[0].source == "legal");
            REQUIRE(result.events[0].chunk_ids.size() == 1);
            CHECK(result.events[0].chunk_ids[0] == "k0");
            CHECK(result.text == "Sentence one is fine. Regenerated sentence.");
        }
        SUBCASE("theta one regenerates every sentence below certainty") {
            auto mock = MockLlmClient::from_json_text(script);
            const auto result = flare_generate("claim", SourceMode::Legal, FlareParams{1.0, 0.4},
                                               mock, backends, test_builder("claim"), base);
            CHECK(result.regenerations == 2);  // both sentences have min prob < 1
        }
    }

    TEST_CASE("flare regeneration count is non-decreasing over the theta grid") {
        const auto index = tiny_index({"scripted pad sentence words"});
        RetrievalBackends backends;
        backends.index = &index;
        GenerationRequest base;
        base.max_tokens = 1024;

        json responses = json::array();
        const double min_probs[] = {1.0, 0.65, 0.35, 0.05};
        for (double p : min_probs) {
            responses.push_back(
                {{"text", "Scripted pad sentence."}, {"probs", json::array({1.0, p, 1.0})}});
        }
        json script;
        script["rules"] = json::array(
            {{{"match", "CTXBLOCK"}, {"response", {{"text", "Scripted pad sentence."},
                                                   {"probs", json::array({0.95})}}}},
             {{"match", ""}, {"responses", responses}}});

        size_t previous = 0;
        for (int step = 0; step <= 10; ++step) {
            const double theta = step / 10.0;
            auto mock = MockLlmClient::from_json_text(script.dump());
            const auto result =
                flare_generate("claim", SourceMode::Legal, FlareParams{theta, 0.4}, mock,
                               backends, test_builder("claim"), base);
            CHECK(result.regenerations >= previous);
            previous = result.regenerations;
        }
        CHECK(previous == 3);  // the prob-1.0 sentence never regenerates
    }

    TEST_CASE("flare with web and both sources records the trace") {
        const auto index = tiny_index({"flork legal background"});
        auto search = MockSearchClient::from_json_text(R"({
            "entries": [{"match": "", "results": [{"title": "t", "link": "l",
                                                   "snippet": "snippet text"}]}]
        })");
        RetrievalBackends backends;
        backends.index = &index;
        backends.web = &search;
        GenerationRequest base;
        base.max_tokens = 1024;
        const std::string script = R"({
            "rules": [
                {"match": "CTXBLOCK", "response": {"text": "Sure.", "probs": [0.9]}},
                {"match": "", "responses": [{"text": "Weak flork claim.", "probs": [0.2]}]}
            ]
        })";

        auto mock = MockLlmClient::from_json_text(script);
        const auto result = flare_generate("claim", SourceMode::LegalWeb, FlareParams{0.5, 0.4},
                                           mock, backends, test_builder("claim"), base);
        REQUIRE(result.events.size() == 1);
        CHECK(result.events[0].source == "both");
        CHECK(result.events[0].web_result_count == 1);
        CHECK(!result.events[0].chunk_ids.empty());
    }

    TEST_CASE("flare requires logprobs") {
        NoLogprobsClient llm;
        RetrievalBackends backends;
        GenerationRequest base;
        CHECK_THROWS_AS(flare_generate("c", SourceMode::Web, FlareParams{0.5, 0.4}, llm, backends,
                                       test_builder("c"), base),
                        LogprobsUnavailableError);
    }

    TEST_CASE("random retriever is uniform and seed-stable") {
        SUBCASE("single chunk index") {
            const auto index = tiny_index({"only"});
            Rng rng(7);
            CHECK(random_legal_retrieve(index, rng).chunk_id == "k0");
        }
        SUBCASE("same seed, same draw") {
            const auto index = tiny_index({"a", "b", "c", "d", "e"});
            Rng r1(7), r2(7);
            for (int i = 0; i < 20; ++i) {
                CHECK(random_legal_retrieve(index, r1).chunk_id ==
                      random_legal_retrieve(index, r2).chunk_id);
            }
        }
        SUBCASE("frequencies stay within three sigma") {
            std::vector<std::string> texts;
            for (int i = 0; i < 10; ++i) texts.push_back("chunk " + std::to_string(i));
            const auto index = tiny_index(texts);
            Rng rng(99);
            std::map<std::string, int> freq;
            const int draws = 10000;
            for (int i = 0; i < draws; ++i) freq[random_legal_retrieve(index, rng).chunk_id]++;
            // sigma = sqrt(n p (1-p)) = 30 at p = 0.1
            for (const auto& [id, count] : freq) {
                CHECK(count > 1000 - 90);
                CHECK(count < 1000 + 90);
            }
        }
    }

    TEST_CASE("oracle context concatenates definitions in catalog order") {
        IssueCatalog catalog;
        catalog.add(LegalIssue{"A", "Issue A", "", "", "definition of A"});
        catalog.add(LegalIssue{"B", "Issue B", "", "", "definition of B"});

        Sample s;
        s.id = "s";
        s.text = "t";
        SUBCASE("single issue") {
            s.legal_issues = {"A"};
            CHECK(oracle_legal_context(s, catalog) == "definition of A");
        }
        SUBCASE("catalog order wins over sample order") {
            s.legal_issues = {"B", "A"};
            CHECK(oracle_legal_context(s, catalog) == "definition of A\n\ndefinition of B");
        }
        SUBCASE("no issues means normal retrieval") {
            CHECK_FALSE(oracle_legal_context(s, catalog).has_value());
        }
        SUBCASE("unknown issue id") {
            s.legal_issues = {"Z"};
            CHECK_THROWS_AS(oracle_legal_context(s, catalog), UnknownIssueIdError);
        }
    }

    TEST_CASE("empty retrieval leaves the slot blank without failing") {
        const auto index = tiny_index({"totally unrelated vocabulary"});
        RetrievalBackends backends;
        backends.index = &index;
        WhitespacePunctTokenizer tok;
        GenerationRequest base;
        base.max_tokens = 8;
        auto mock = stride_script(2, 4);
        const auto result = ralm_generate("zzz qqq", SourceMode::Legal, RalmParams{4, 32}, mock,
                                          backends, test_builder("zzz qqq"), base, tok);
        REQUIRE(result.events.size() == 1);
        CHECK(result.events[0].chunk_ids.empty());
    }
}
