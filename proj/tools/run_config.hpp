#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <curator/decimal.hpp>
#include <curator/gateway.hpp>
#include <curator/selector.hpp>

namespace curator::cli {

/// Every setting of a run. Loaded from a flat JSON file, then overridden
/// by command-line flags.
struct RunConfig {
    // data
    std::string dataset;
    std::string format = "alpaca-json";
    std::string ratings;
    std::string output_dir = "out";

    // selection
    std::string threshold = "4.5";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::vector<std::size_t> sizes;
    std::map<std::string, std::vector<std::string>> keyword_groups;

    // grader
    std::string dimension = "accuracy";
    std::string granularity = "0.5";
    std::string prompt_template;  // empty: built-in
    std::string endpoint = "mock://grader";
    std::string model = "mock";
    std::string api_key_env = kDefaultApiKeyEnv;
    double temperature = 0.0;
    int max_tokens = 1024;
    int max_concurrency = 8;
    int requests_per_minute = 3500;
    std::string cache;  // empty: <output_dir>/cache.jsonl
    std::optional<std::size_t> max_requests;

    // arena
    std::string judge_mode = "score-pair";
    std::string testset;
    std::string subject;
    std::string baseline;
    std::string subject_label;
    std::string baseline_label;
    std::string judge_endpoint = "mock://judge";
    std::string judge_model = "mock-judge";
    std::string judge_template;

    // cost
    int gpus = 8;
    std::string minutes;
    std::string node_price = "40.96";
    int gpus_per_node = 8;

    Decimal threshold_value() const;
    Decimal granularity_value() const;
    JudgeEndpoint grader_endpoint() const;
    JudgeEndpoint arena_endpoint() const;
    std::filesystem::path cache_path() const;

    /// Throws ConfigError on a malformed file or an unknown key.
    static RunConfig from_json_file(const std::filesystem::path& path);
    static RunConfig from_json_text(const std::string& text, const std::string& name);
};

}  // namespace curator::cli
