#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "mislc/gateways.hpp"

namespace mislc {

// Resolved experiment manifest. One JSON file with nested sections; CLI
// flags override individual fields. Secrets stay in environment variables
// named by *_api_key_env and are never logged or copied into run outputs.
struct RunConfig {
    std::string dataset;
    std::string corpus;
    std::string index;
    std::string issues;
    std::string out = "runs";
    uint64_t seed = 0;
    std::string tokenizer = "ws_punct";

    struct {
        size_t budget = 2048;
        bool hard_split = true;
    } chunk;

    struct {
        std::string mode = "constrained";
    } prompt;

    struct {
        size_t parallelism = 1;
        std::string name = "run";
    } run;

    struct {
        std::string mode = "none";
        size_t delta = 4;
        size_t ell = 32;
        double theta = 0.5;
        double beta = 0.4;
        std::string query_strategy = "masked";
        uint64_t seed = 0;
        size_t top_k = 1;
    } retrieval;

    struct {
        std::string endpoint;
        std::string model;
        double temperature = 0.3;
        int max_tokens = 1024;
        std::string api_key_env = "MISLC_LLM_KEY";
    } llm;

    struct {
        std::string endpoint;
        std::string api_key_env = "MISLC_SEARCH_KEY";
        std::string cx;
        int num = 10;
        std::string aggregation = "first_result";
    } search;

    struct {
        double rps = 0.0;
        int max_retries = 3;
    } net;

    struct {
        std::string llm_script;
        std::string search_script;
        std::string pages;
    } mock;
};

RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

struct GatewaySet {
    std::unique_ptr<LlmClient> llm;
    std::unique_ptr<SearchClient> web;
    std::unique_ptr<PageFetcher> pages;
};

// Mock scripts win over live endpoints so suites stay hermetic.
GatewaySet make_gateways(const RunConfig& cfg);

}  // namespace mislc
