#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "mislc/gateways.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mislc/errors.hpp"

namespace mislc {

using nlohmann::json;

void RateLimiter::acquire() {
    if (rps_ <= 0.0) return;
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(rps_, tokens_ + elapsed * rps_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rps_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

std::vector<std::string> segment_generation_tokens(std::string_view text) {
    std::vector<std::string> pieces;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        const size_t start = i;
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::string piece(text.substr(start, i - start));
        const bool pure_ws = piece.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
        if (pure_ws && !pieces.empty()) {
            pieces.back() += piece;  // trailing whitespace glues to the last word
        } else {
            pieces.push_back(std::move(piece));
        }
    }
    return pieces;
}

namespace {

FinishReason finish_from_string(const std::string& s) {
    if (s == "stop") return FinishReason::Stop;
    if (s == "length") return FinishReason::Length;
    return FinishReason::Error;
}

GenerationResponse materialize(const std::string& text, const std::vector<double>& probs,
                               FinishReason finish, const GenerationRequest& req) {
    std::string body = text;

    if (req.stop.has_value()) {
        size_t cut = std::string::npos;
        for (const auto& stop : *req.stop) {
            if (stop.empty()) continue;
            const size_t pos = body.find(stop);
            if (pos != std::string::npos) cut = std::min(cut, pos);
        }
        if (cut != std::string::npos) {
            body.resize(cut);
            finish = FinishReason::Stop;
        }
    }

    auto pieces = segment_generation_tokens(body);
    if (req.max_tokens >= 0 && pieces.size() > static_cast<size_t>(req.max_tokens)) {
        pieces.resize(static_cast<size_t>(req.max_tokens));
        body.clear();
        for (const auto& p : pieces) body += p;
        finish = FinishReason::Length;
    }

    GenerationResponse resp;
    resp.text = body;
    resp.finish_reason = finish;
    if (req.want_logprobs) {
        resp.tokens.reserve(pieces.size());
        for (size_t i = 0; i < pieces.size(); ++i) {
            double p = 1.0;
            if (!probs.empty()) p = i < probs.size() ? probs[i] : probs.back();
            p = std::clamp(p, 1e-12, 1.0);
            resp.tokens.push_back(TokenLogprob{pieces[i], std::log(p)});
        }
    }
    return resp;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    return json::parse(in);
}

// splits "http://host:port/some/path" into client base and route
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint must be a full URL: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

std::string api_key_from_env(const std::string& env_name) {
    if (env_name.empty()) return "";
    const char* v = std::getenv(env_name.c_str());
    return v == nullptr ? "" : v;
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

void validate_request(const GenerationRequest& req) {
    if (req.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (req.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
}

}  // namespace

MockLlmClient MockLlmClient::from_json_file(const std::filesystem::path& path) {
    return from_json_text(load_json_file(path).dump());
}

MockLlmClient MockLlmClient::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    MockLlmClient mock;

    auto parse_response = [](const json& r) {
        ScriptedResponse resp;
        resp.text = r.value("text", "");
        if (r.contains("probs")) resp.probs = r.at("probs").get<std::vector<double>>();
        if (r.contains("finish")) resp.finish = finish_from_string(r.at("finish").get<std::string>());
        return resp;
    };

    for (const auto& rj : j.value("rules", json::array())) {
        Rule rule;
        rule.match = rj.value("match", "");
        if (rj.contains("response")) {
            rule.responses.push_back(parse_response(rj.at("response")));
            rule.stateless = true;
        } else {
            for (const auto& r : rj.value("responses", json::array())) {
                rule.responses.push_back(parse_response(r));
            }
        }
        mock.rules_.push_back(std::move(rule));
    }
    if (j.contains("default")) mock.default_response_ = parse_response(j.at("default"));
    return mock;
}

GenerationResponse MockLlmClient::generate(const GenerationRequest& req) {
    validate_request(req);
    std::lock_guard<std::mutex> lock(*mu_);
    for (auto& rule : rules_) {
        if (!rule.match.empty() && req.prompt.find(rule.match) == std::string::npos) continue;
        if (rule.stateless) {
            const auto& r = rule.responses.front();
            return materialize(r.text, r.probs, r.finish.value_or(FinishReason::Stop), req);
        }
        if (rule.cursor < rule.responses.size()) {
            const auto& r = rule.responses[rule.cursor];
            const bool last = rule.cursor + 1 == rule.responses.size();
            ++rule.cursor;
            // continuing scripts default to "length" so callers keep going
            const FinishReason finish =
                r.finish.value_or(last ? FinishReason::Stop : FinishReason::Length);
            return materialize(r.text, r.probs, finish, req);
        }
    }
    if (default_response_.has_value()) {
        return materialize(default_response_->text, default_response_->probs,
                           default_response_->finish.value_or(FinishReason::Stop), req);
    }
    return materialize("", {}, FinishReason::Stop, req);
}

MockSearchClient MockSearchClient::from_json_file(const std::filesystem::path& path) {
    return from_json_text(load_json_file(path).dump());
}

MockSearchClient MockSearchClient::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    MockSearchClient mock;
    for (const auto& ej : j.value("entries", json::array())) {
        Entry entry;
        entry.match = ej.value("match", "");
        for (const auto& r : ej.value("results", json::array())) {
            WebResult w;
            w.title = r.value("title", "");
            w.link = r.value("link", "");
            w.snippet = r.value("snippet", "");
            entry.results.push_back(std::move(w));
        }
        mock.entries_.push_back(std::move(entry));
    }
    return mock;
}

std::vector<WebResult> MockSearchClient::web_search(const std::string& query, int num) {
    if (query.empty()) throw ConfigError("web_search requires a non-empty query");
    for (const auto& entry : entries_) {
        if (!entry.match.empty() && query.find(entry.match) == std::string::npos) continue;
        std::vector<WebResult> out;
        for (size_t i = 0; i < entry.results.size() && i < static_cast<size_t>(num); ++i) {
            WebResult w = entry.results[i];
            w.rank = static_cast<int>(i) + 1;
            out.push_back(std::move(w));
        }
        return out;
    }
    return {};
}

MockPageFetcher MockPageFetcher::from_json_file(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    std::map<std::string, std::string> pages;
    for (const auto& [url, html] : j.items()) pages[url] = html.get<std::string>();
    return MockPageFetcher(std::move(pages));
}

std::optional<std::string> MockPageFetcher::fetch(const std::string& url) {
    auto it = pages_.find(url);
    if (it == pages_.end()) return std::nullopt;
    return it->second;
}

HttpLlmClient::HttpLlmClient(LlmEndpointConfig config)
    : config_(std::move(config)), limiter_(std::make_shared<RateLimiter>(config_.net.rps)) {}

GenerationResponse HttpLlmClient::generate(const GenerationRequest& req) {
    validate_request(req);
    const auto [base, path] = split_url(config_.endpoint);

    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.want_logprobs) body["logprobs"] = true;
    if (req.stop.has_value()) body["stop"] = *req.stop;
    if (req.seed.has_value()) body["seed"] = *req.seed;

    httplib::Headers headers;
    const std::string key = api_key_from_env(config_.api_key_env);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    std::string last_error;
    for (int attempt = 0; attempt <= config_.net.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(
                config_.net.backoff_seconds * std::pow(2.0, attempt - 1)));
        }
        limiter_->acquire();
        httplib::Client cli(base);
        cli.set_read_timeout(120, 0);
        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable_status(res->status)) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("llm endpoint returned status " + std::to_string(res->status));
        }

        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed llm reply: ") + e.what());
        }
        try {
            const auto& choice = reply.at("choices").at(0);
            GenerationResponse out;
            out.text = choice.at("message").at("content").get<std::string>();
            out.finish_reason = finish_from_string(choice.value("finish_reason", "stop"));
            if (req.want_logprobs) {
                if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) {
                    throw LogprobsUnavailableError();
                }
                std::string rebuilt;
                for (const auto& t : choice.at("logprobs").at("content")) {
                    TokenLogprob tl;
                    tl.token = t.at("token").get<std::string>();
                    tl.logprob = t.at("logprob").get<double>();
                    if (tl.logprob > 1e-6) throw ProtocolError("positive token logprob");
                    tl.logprob = std::min(tl.logprob, 0.0);
                    rebuilt += tl.token;
                    out.tokens.push_back(std::move(tl));
                }
                if (rebuilt != out.text) {
                    throw ProtocolError("token stream does not reconstruct the generation");
                }
            }
            return out;
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("unexpected llm reply shape: ") + e.what());
        }
    }
    throw TransportError("llm request failed after retries: " + last_error);
}

HttpSearchClient::HttpSearchClient(SearchEndpointConfig config)
    : config_(std::move(config)), limiter_(std::make_shared<RateLimiter>(config_.net.rps)) {}

std::vector<WebResult> HttpSearchClient::web_search(const std::string& query, int num) {
    if (query.empty()) throw ConfigError("web_search requires a non-empty query");
    const auto [base, path] = split_url(config_.endpoint);

    httplib::Params params;
    const std::string key = api_key_from_env(config_.api_key_env);
    if (!key.empty()) params.emplace("key", key);
    if (!config_.cx.empty()) params.emplace("cx", config_.cx);
    params.emplace("q", query);
    params.emplace("num", std::to_string(num));

    std::string last_error;
    for (int attempt = 0; attempt <= config_.net.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(
                config_.net.backoff_seconds * std::pow(2.0, attempt - 1)));
        }
        limiter_->acquire();
        httplib::Client cli(base);
        auto res = cli.Get(path + "?" + httplib::detail::params_to_query_str(params));
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status == 403) {
            throw QuotaExceededError("search quota exhausted (status " +
                                     std::to_string(res->status) + ")");
        }
        if (res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProtocolError("search endpoint returned status " + std::to_string(res->status));
        }
        try {
            const json reply = json::parse(res->body);
            std::vector<WebResult> out;
            int rank = 1;
            for (const auto& item : reply.value("items", json::array())) {
                if (rank > num) break;
                WebResult w;
                w.rank = rank++;
                w.title = item.value("title", "");
                w.link = item.value("link", "");
                w.snippet = item.value("snippet", "");
                out.push_back(std::move(w));
            }
            return out;
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("malformed search reply: ") + e.what());
        }
    }
    throw TransportError("search request failed after retries: " + last_error);
}

HttpPageFetcher::HttpPageFetcher(NetOptions net)
    : net_(net), limiter_(std::make_shared<RateLimiter>(net.rps)) {}

std::optional<std::string> HttpPageFetcher::fetch(const std::string& url) {
    try {
        const auto [base, path] = split_url(url);
        limiter_->acquire();
        httplib::Client cli(base);
        cli.set_follow_location(true);
        auto res = cli.Get(path);
        if (!res || res->status != 200) return std::nullopt;
        return res->body;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string strip_html(std::string_view html) {
    std::string text;
    text.reserve(html.size());

    auto skip_block = [&](size_t i, std::string_view open, std::string_view close) -> size_t {
        // i points at '<'; returns the index just past the closing tag
        size_t end = html.find(close, i);
        return end == std::string_view::npos ? html.size() : end + close.size();
        (void)open;
    };

    auto lower_prefix_is = [&](size_t i, std::string_view what) {
        if (i + what.size() > html.size()) return false;
        for (size_t k = 0; k < what.size(); ++k) {
            if (std::tolower(static_cast<unsigned char>(html[i + k])) != what[k]) return false;
        }
        return true;
    };

    for (size_t i = 0; i < html.size();) {
        if (html[i] == '<') {
            if (lower_prefix_is(i, "<script")) {
                i = skip_block(i, "<script", "</script>");
            } else if (lower_prefix_is(i, "<style")) {
                i = skip_block(i, "<style", "</style>");
            } else if (lower_prefix_is(i, "<!--")) {
                const size_t end = html.find("-->", i);
                i = end == std::string_view::npos ? html.size() : end + 3;
            } else {
                const size_t end = html.find('>', i);
                i = end == std::string_view::npos ? html.size() : end + 1;
                text.push_back(' ');  // tags act as separators
            }
        } else {
            text.push_back(html[i]);
            ++i;
        }
    }

    // decode the common entities
    static const std::pair<std::string_view, std::string_view> entities[] = {
        {"&amp;", "&"}, {"&lt;", "<"},   {"&gt;", ">"},  {"&quot;", "\""},
        {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "},
    };
    std::string decoded;
    decoded.reserve(text.size());
    for (size_t i = 0; i < text.size();) {
        bool matched = false;
        if (text[i] == '&') {
            for (const auto& [from, to] : entities) {
                if (text.compare(i, from.size(), from) == 0) {
                    decoded += to;
                    i += from.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) {
            decoded.push_back(text[i]);
            ++i;
        }
    }

    // collapse whitespace runs
    std::string out;
    out.reserve(decoded.size());
    bool in_ws = true;  // also trims leading whitespace
    for (char c : decoded) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws) out.push_back(' ');
            in_ws = true;
        } else {
            out.push_back(c);
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

namespace {

// cut at a byte limit without splitting a multi-byte UTF-8 sequence
std::string utf8_prefix(const std::string& s, size_t limit) {
    if (s.size() <= limit) return s;
    size_t end = limit;
    while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
    return s.substr(0, end);
}

}  // namespace

std::string fetch_oracle_evidence(const std::vector<std::string>& urls, PageFetcher& fetcher,
                                  size_t char_limit, std::vector<std::string>* warnings) {
    std::string out;
    bool first = true;
    for (const auto& url : urls) {
        if (!first) out += "\n\n";
        first = false;
        const auto html = fetcher.fetch(url);
        if (!html.has_value()) {
            if (warnings != nullptr) warnings->push_back("fetch failed: " + url);
            continue;
        }
        out += utf8_prefix(strip_html(*html), char_limit);
    }
    return out;
}

}  // namespace mislc
