#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mislc {

struct GenerationRequest {
    std::string prompt;
    double temperature = 0.3;
    int max_tokens = 1024;
    bool want_logprobs = false;
    std::optional<std::vector<std::string>> stop;
    std::optional<uint64_t> seed;
};

enum class FinishReason { Stop, Length, Error };

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;  // always <= 0
};

struct GenerationResponse {
    std::string text;
    // filled only when want_logprobs; token texts concatenate back to `text`
    std::vector<TokenLogprob> tokens;
    FinishReason finish_reason = FinishReason::Stop;
};

struct WebResult {
    int rank = 1;
    std::string title;
    std::string link;
    std::string snippet;  // may be empty
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual GenerationResponse generate(const GenerationRequest& req) = 0;
};

class SearchClient {
public:
    virtual ~SearchClient() = default;
    // <= num results, rank-ordered; an empty list is the no-results case
    virtual std::vector<WebResult> web_search(const std::string& query, int num = 10) = 0;
};

class PageFetcher {
public:
    virtual ~PageFetcher() = default;
    virtual std::optional<std::string> fetch(const std::string& url) = 0;
};

// Token bucket; rps <= 0 disables limiting. acquire() blocks callers until
// a slot is available and is safe across threads.
class RateLimiter {
public:
    explicit RateLimiter(double rps = 0.0) : rps_(rps), tokens_(rps) {}
    void acquire();

private:
    double rps_;
    double tokens_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    std::mutex mu_;
};

struct NetOptions {
    int max_retries = 3;
    double backoff_seconds = 0.5;  // doubled per attempt
    double rps = 0.0;
};

// Scripted LLM. Rules are scanned in order; a rule applies when its `match`
// string occurs in the prompt (empty matches everything). A rule with one
// `response` is stateless and repeats forever; a rule with a `responses`
// list is consumed entry by entry, keyed by the rule itself rather than by
// global arrival order, so concurrent runs stay deterministic.
class MockLlmClient final : public LlmClient {
public:
    static MockLlmClient from_json_file(const std::filesystem::path& path);
    static MockLlmClient from_json_text(const std::string& text);

    GenerationResponse generate(const GenerationRequest& req) override;

private:
    struct ScriptedResponse {
        std::string text;
        std::vector<double> probs;  // padded with its last value; default 1.0
        std::optional<FinishReason> finish;
    };
    struct Rule {
        std::string match;
        std::vector<ScriptedResponse> responses;
        bool stateless = false;
        size_t cursor = 0;
    };

    std::vector<Rule> rules_;
    std::optional<ScriptedResponse> default_response_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

// Scripted search; entries are stateless, first match on the query wins,
// unmatched queries return no results.
class MockSearchClient final : public SearchClient {
public:
    static MockSearchClient from_json_file(const std::filesystem::path& path);
    static MockSearchClient from_json_text(const std::string& text);

    std::vector<WebResult> web_search(const std::string& query, int num = 10) override;

private:
    struct Entry {
        std::string match;
        std::vector<WebResult> results;
    };
    std::vector<Entry> entries_;
};

class MockPageFetcher final : public PageFetcher {
public:
    MockPageFetcher() = default;
    explicit MockPageFetcher(std::map<std::string, std::string> pages)
        : pages_(std::move(pages)) {}
    static MockPageFetcher from_json_file(const std::filesystem::path& path);

    std::optional<std::string> fetch(const std::string& url) override;

private:
    std::map<std::string, std::string> pages_;
};

struct LlmEndpointConfig {
    std::string endpoint;  // full URL of the chat-completions route
    std::string model;
    std::string api_key_env;
    NetOptions net;
};

// Chat-completions-style HTTP JSON client with optional per-token logprobs.
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(LlmEndpointConfig config);
    GenerationResponse generate(const GenerationRequest& req) override;

private:
    LlmEndpointConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
};

struct SearchEndpointConfig {
    std::string endpoint;
    std::string api_key_env;
    std::string cx;
    NetOptions net;
};

class HttpSearchClient final : public SearchClient {
public:
    explicit HttpSearchClient(SearchEndpointConfig config);
    std::vector<WebResult> web_search(const std::string& query, int num = 10) override;

private:
    SearchEndpointConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
};

class HttpPageFetcher final : public PageFetcher {
public:
    explicit HttpPageFetcher(NetOptions net = {});
    std::optional<std::string> fetch(const std::string& url) override;

private:
    NetOptions net_;
    std::shared_ptr<RateLimiter> limiter_;
};

// Tag-stripped page text: script/style/comment content removed, entities
// decoded, whitespace collapsed.
std::string strip_html(std::string_view html);

// Per URL: fetch, strip tags, keep the first char_limit characters; segments
// are joined with a blank line. Failed fetches contribute an empty segment
// plus a warning; nothing here is fatal.
std::string fetch_oracle_evidence(const std::vector<std::string>& urls, PageFetcher& fetcher,
                                  size_t char_limit = 500,
                                  std::vector<std::string>* warnings = nullptr);

// Splits text into pieces whose concatenation reproduces it exactly; each
// piece is a whitespace run glued to the following word.
std::vector<std::string> segment_generation_tokens(std::string_view text);

}  // namespace mislc
