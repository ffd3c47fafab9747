#include "run_config.hpp"

#include <functional>

#include <json.hpp>

#include <curator/corpus.hpp>
#include <curator/errors.hpp>

namespace curator::cli {

using json = nlohmann::json;

namespace {

Decimal parse_decimal(const std::string& text, const char* what) {
    auto v = Decimal::parse(text);
    if (!v) throw ConfigError(std::string(what) + " is not a decimal number: " + text);
    return *v;
}

std::string number_or_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return Decimal::from_double(v.get<double>()).to_string();
    throw ConfigError("expected a number or string, got " + v.dump());
}

}  // namespace

Decimal RunConfig::threshold_value() const {
    auto tau = parse_decimal(threshold, "threshold");
    if (tau < Decimal::from_int(0) || tau > Decimal::from_int(5)) {
        throw ConfigError("threshold " + threshold + " outside [0, 5]");
    }
    return tau;
}

Decimal RunConfig::granularity_value() const {
    auto g = parse_decimal(granularity, "granularity");
    if (g != Decimal::from_tenths(5) && g != Decimal::from_int(1)) {
        throw ConfigError("granularity must be 0.5 or 1.0, got " + granularity);
    }
    return g;
}

JudgeEndpoint RunConfig::grader_endpoint() const {
    JudgeEndpoint e;
    e.base_url = endpoint;
    if (e.is_mock() && e.base_url.find("granularity=") == std::string::npos) {
        e.base_url += "?granularity=" + granularity_value().to_string();
    }
    e.model_name = model;
    e.api_key_env = api_key_env;
    e.temperature = temperature;
    e.max_tokens = max_tokens;
    e.max_concurrency = max_concurrency;
    e.requests_per_minute = requests_per_minute;
    e.validate();
    return e;
}

JudgeEndpoint RunConfig::arena_endpoint() const {
    JudgeEndpoint e = grader_endpoint();
    e.base_url = judge_endpoint;
    e.model_name = judge_model;
    e.validate();
    return e;
}

std::filesystem::path RunConfig::cache_path() const {
    if (!cache.empty()) return cache;
    return std::filesystem::path(output_dir) / "cache.jsonl";
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return from_json_text(text, path.string());
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& name) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError(name + ": config must be a JSON object");

    RunConfig c;
    auto str = [](std::string& dst) { return [&dst](const json& v) { dst = number_or_string(v); }; };
    auto integer = [](int& dst) { return [&dst](const json& v) { dst = v.get<int>(); }; };
    const std::map<std::string, std::function<void(const json&)>> setters{
        {"dataset", str(c.dataset)},
        {"format", str(c.format)},
        {"ratings", str(c.ratings)},
        {"output_dir", str(c.output_dir)},
        {"threshold", str(c.threshold)},
        {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
        {"n", [&](const json& v) { c.n = v.get<std::size_t>(); }},
        {"sizes", [&](const json& v) { c.sizes = v.get<std::vector<std::size_t>>(); }},
        {"keyword_groups",
         [&](const json& v) { c.keyword_groups = v.get<std::map<std::string, std::vector<std::string>>>(); }},
        {"dimension", str(c.dimension)},
        {"granularity", str(c.granularity)},
        {"prompt_template", str(c.prompt_template)},
        {"endpoint", str(c.endpoint)},
        {"model", str(c.model)},
        {"api_key_env", str(c.api_key_env)},
        {"temperature", [&](const json& v) { c.temperature = v.get<double>(); }},
        {"max_tokens", integer(c.max_tokens)},
        {"max_concurrency", integer(c.max_concurrency)},
        {"requests_per_minute", integer(c.requests_per_minute)},
        {"cache", str(c.cache)},
        {"max_requests", [&](const json& v) { c.max_requests = v.get<std::size_t>(); }},
        {"judge_mode", str(c.judge_mode)},
        {"testset", str(c.testset)},
        {"subject", str(c.subject)},
        {"baseline", str(c.baseline)},
        {"subject_label", str(c.subject_label)},
        {"baseline_label", str(c.baseline_label)},
        {"judge_endpoint", str(c.judge_endpoint)},
        {"judge_model", str(c.judge_model)},
        {"judge_template", str(c.judge_template)},
        {"gpus", integer(c.gpus)},
        {"minutes", str(c.minutes)},
        {"node_price", str(c.node_price)},
        {"gpus_per_node", integer(c.gpus_per_node)},
    };
    for (const auto& [key, value] : doc.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(name + ": unknown config key \"" + key + "\"");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ConfigError(name + ": bad value for \"" + key + "\": " + e.what());
        }
    }
    return c;
}

}  // namespace curator::cli
