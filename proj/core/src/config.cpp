#include "mislc/config.hpp"

#include <fstream>

#include <json.hpp>

#include "mislc/errors.hpp"

namespace mislc {

using nlohmann::json;

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    cfg.dataset = j.value("dataset", cfg.dataset);
    cfg.corpus = j.value("corpus", cfg.corpus);
    cfg.index = j.value("index", cfg.index);
    cfg.issues = j.value("issues", cfg.issues);
    cfg.out = j.value("out", cfg.out);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.tokenizer = j.value("tokenizer", cfg.tokenizer);

    if (j.contains("chunk")) {
        const auto& c = j.at("chunk");
        cfg.chunk.budget = c.value("budget", cfg.chunk.budget);
        cfg.chunk.hard_split = c.value("hard_split", cfg.chunk.hard_split);
    }
    if (j.contains("prompt")) {
        cfg.prompt.mode = j.at("prompt").value("mode", cfg.prompt.mode);
    }
    if (j.contains("run")) {
        const auto& r = j.at("run");
        cfg.run.parallelism = r.value("parallelism", cfg.run.parallelism);
        cfg.run.name = r.value("name", cfg.run.name);
    }
    if (j.contains("retrieval")) {
        const auto& r = j.at("retrieval");
        cfg.retrieval.mode = r.value("mode", cfg.retrieval.mode);
        cfg.retrieval.delta = r.value("delta", cfg.retrieval.delta);
        cfg.retrieval.ell = r.value("ell", cfg.retrieval.ell);
        cfg.retrieval.theta = r.value("theta", cfg.retrieval.theta);
        cfg.retrieval.beta = r.value("beta", cfg.retrieval.beta);
        cfg.retrieval.query_strategy = r.value("query_strategy", cfg.retrieval.query_strategy);
        cfg.retrieval.seed = r.value("seed", cfg.retrieval.seed);
        cfg.retrieval.top_k = r.value("top_k", cfg.retrieval.top_k);
    }
    if (j.contains("llm")) {
        const auto& l = j.at("llm");
        cfg.llm.endpoint = l.value("endpoint", cfg.llm.endpoint);
        cfg.llm.model = l.value("model", cfg.llm.model);
        cfg.llm.temperature = l.value("temperature", cfg.llm.temperature);
        cfg.llm.max_tokens = l.value("max_tokens", cfg.llm.max_tokens);
        cfg.llm.api_key_env = l.value("api_key_env", cfg.llm.api_key_env);
    }
    if (j.contains("search")) {
        const auto& s = j.at("search");
        cfg.search.endpoint = s.value("endpoint", cfg.search.endpoint);
        cfg.search.api_key_env = s.value("api_key_env", cfg.search.api_key_env);
        cfg.search.cx = s.value("cx", cfg.search.cx);
        cfg.search.num = s.value("num", cfg.search.num);
        cfg.search.aggregation = s.value("aggregation", cfg.search.aggregation);
    }
    if (j.contains("net")) {
        const auto& n = j.at("net");
        cfg.net.rps = n.value("rps", cfg.net.rps);
        cfg.net.max_retries = n.value("max_retries", cfg.net.max_retries);
    }
    if (j.contains("mock")) {
        const auto& m = j.at("mock");
        cfg.mock.llm_script = m.value("llm_script", cfg.mock.llm_script);
        cfg.mock.search_script = m.value("search_script", cfg.mock.search_script);
        cfg.mock.pages = m.value("pages", cfg.mock.pages);
    }
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = cfg.dataset;
    j["corpus"] = cfg.corpus;
    j["index"] = cfg.index;
    j["issues"] = cfg.issues;
    j["out"] = cfg.out;
    j["seed"] = cfg.seed;
    j["tokenizer"] = cfg.tokenizer;
    j["chunk"] = {{"budget", cfg.chunk.budget}, {"hard_split", cfg.chunk.hard_split}};
    j["prompt"] = {{"mode", cfg.prompt.mode}};
    j["run"] = {{"parallelism", cfg.run.parallelism}, {"name", cfg.run.name}};
    j["retrieval"] = {{"mode", cfg.retrieval.mode},
                      {"delta", cfg.retrieval.delta},
                      {"ell", cfg.retrieval.ell},
                      {"theta", cfg.retrieval.theta},
                      {"beta", cfg.retrieval.beta},
                      {"query_strategy", cfg.retrieval.query_strategy},
                      {"seed", cfg.retrieval.seed},
                      {"top_k", cfg.retrieval.top_k}};
    j["llm"] = {{"endpoint", cfg.llm.endpoint},
                {"model", cfg.llm.model},
                {"temperature", cfg.llm.temperature},
                {"max_tokens", cfg.llm.max_tokens},
                {"api_key_env", cfg.llm.api_key_env}};
    j["search"] = {{"endpoint", cfg.search.endpoint},
                   {"api_key_env", cfg.search.api_key_env},
                   {"cx", cfg.search.cx},
                   {"num", cfg.search.num},
                   {"aggregation", cfg.search.aggregation}};
    j["net"] = {{"rps", cfg.net.rps}, {"max_retries", cfg.net.max_retries}};
    j["mock"] = {{"llm_script", cfg.mock.llm_script},
                 {"search_script", cfg.mock.search_script},
                 {"pages", cfg.mock.pages}};
    return j.dump(2);
}

GatewaySet make_gateways(const RunConfig& cfg) {
    GatewaySet set;

    // alternative snippet-aggregation policies are a config stub only
    if (cfg.search.aggregation != "first_result") {
        throw ConfigError("unsupported search.aggregation: " + cfg.search.aggregation);
    }

    NetOptions net;
    net.rps = cfg.net.rps;
    net.max_retries = cfg.net.max_retries;

    if (!cfg.mock.llm_script.empty()) {
        set.llm = std::make_unique<MockLlmClient>(
            MockLlmClient::from_json_file(cfg.mock.llm_script));
    } else if (!cfg.llm.endpoint.empty()) {
        LlmEndpointConfig lc;
        lc.endpoint = cfg.llm.endpoint;
        lc.model = cfg.llm.model;
        lc.api_key_env = cfg.llm.api_key_env;
        lc.net = net;
        set.llm = std::make_unique<HttpLlmClient>(lc);
    }

    if (!cfg.mock.search_script.empty()) {
        set.web = std::make_unique<MockSearchClient>(
            MockSearchClient::from_json_file(cfg.mock.search_script));
    } else if (!cfg.search.endpoint.empty()) {
        SearchEndpointConfig sc;
        sc.endpoint = cfg.search.endpoint;
        sc.api_key_env = cfg.search.api_key_env;
        sc.cx = cfg.search.cx;
        sc.net = net;
        set.web = std::make_unique<HttpSearchClient>(sc);
    }

    if (!cfg.mock.pages.empty()) {
        set.pages = std::make_unique<MockPageFetcher>(
            MockPageFetcher::from_json_file(cfg.mock.pages));
    } else {
        set.pages = std::make_unique<HttpPageFetcher>(net);
    }
    return set;
}

}  // namespace mislc
