#include "commands.hpp"

#include <filesystem>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <curator/arena.hpp>
#include <curator/corpus.hpp>
#include <curator/costing.hpp>
#include <curator/errors.hpp>
#include <curator/grader.hpp>
#include <curator/selector.hpp>

namespace curator::cli {

namespace fs = std::filesystem;

namespace {

fs::path prepare_output_dir(const RunConfig& c) {
    fs::path dir = c.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw ConfigError(std::string("missing required setting ") + flag);
}

Dataset load_input_dataset(const RunConfig& c) {
    require(c.dataset, "--dataset");
    return load_dataset(c.dataset, parse_dataset_format(c.format));
}

void emit(std::ostream& out, const fs::path& path) { out << "wrote " << path.string() << "\n"; }

std::vector<KeywordGroup> keyword_groups(const RunConfig& c) {
    std::vector<KeywordGroup> groups;
    for (const auto& [name, words] : c.keyword_groups) groups.push_back({name, words});
    return groups;
}

}  // namespace

void cmd_rate(const RunConfig& c, std::ostream& out) {
    auto dataset = load_input_dataset(c);
    GraderProfile profile;
    profile.dimension = c.dimension;
    profile.granularity = c.granularity_value();
    if (!c.prompt_template.empty()) profile.prompt_template = PromptTemplate::load(c.prompt_template);
    profile.judge = c.grader_endpoint();
    profile.validate();

    auto dir = prepare_output_dir(c);
    GatewayOptions opts;
    opts.cache_path = c.cache_path();
    opts.request_budget = c.max_requests;
    Gateway gateway(profile.judge, opts);

    auto run = rate_dataset(dataset, profile, gateway);
    auto ratings_path = dir / "ratings.jsonl";
    auto skips_path = dir / "skipped.jsonl";
    write_ratings(run.ratings, ratings_path);
    write_skip_report(run.skips, skips_path);
    out << fmt::format("rated {} of {} samples ({} skipped); {} requests, {} cache hits\n", run.ratings.size(),
                       dataset.size(), run.skips.size(), run.gateway.dispatched, run.gateway.cache_hits);
    emit(out, ratings_path);
    emit(out, skips_path);
    emit(out, *opts.cache_path);
}

void cmd_filter(const RunConfig& c, std::ostream& out) {
    auto dataset = load_input_dataset(c);
    require(c.ratings, "--ratings");
    auto ratings = load_ratings(c.ratings);
    auto tau = c.threshold_value();

    auto selection = filter_by_threshold(dataset, ratings, tau);
    auto groups = keyword_groups(c);
    if (!groups.empty()) selection.report.groups = keyword_group_analysis(dataset, ratings, tau, groups).groups;
    auto hist = histogram(ratings, c.granularity_value());

    auto dir = prepare_output_dir(c);
    const fs::path kept = dir / "filtered.jsonl", rep_json = dir / "selection_report.json",
                   rep_txt = dir / "selection_report.txt", csv = dir / "histogram.csv", chart = dir / "histogram.txt";
    write_dataset(selection.kept, kept);
    write_file(rep_json, report_json(selection.report));
    write_file(rep_txt, report_table(selection.report));
    write_file(csv, histogram_csv(hist));
    write_file(chart, histogram_chart(hist));
    out << report_table(selection.report);
    for (const auto& p : {kept, rep_json, rep_txt, csv, chart}) emit(out, p);
}

void cmd_stats(const RunConfig& c, std::ostream& out) {
    require(c.ratings, "--ratings");
    auto g = c.granularity_value();
    auto ratings = load_ratings(c.ratings, g);
    auto hist = histogram(ratings, g);

    nlohmann::ordered_json stats;
    stats["count"] = ratings.size();
    stats["granularity"] = g.to_double();
    stats["off_grid"] = hist.off_grid;
    if (!ratings.empty()) {
        Decimal sum, lo = ratings.front().score, hi = ratings.front().score;
        for (const auto& r : ratings) {
            sum = sum + r.score;
            lo = std::min(lo, r.score);
            hi = std::max(hi, r.score);
        }
        stats["mean"] = sum.to_double() / static_cast<double>(ratings.size());
        stats["min"] = lo.to_double();
        stats["max"] = hi.to_double();
    }
    auto tau = c.threshold_value();
    stats["threshold"] = tau.to_double();
    stats["at_or_above_threshold"] = hist.count_at_least(tau);
    nlohmann::ordered_json bins = nlohmann::ordered_json::object();
    for (const auto& [score, count] : hist.bins) bins[score.to_string()] = count;
    stats["bins"] = std::move(bins);

    auto dir = prepare_output_dir(c);
    const fs::path csv = dir / "histogram.csv", chart = dir / "histogram.txt", js = dir / "stats.json";
    write_file(csv, histogram_csv(hist));
    write_file(chart, histogram_chart(hist));
    write_file(js, stats.dump(2) + "\n");
    out << histogram_chart(hist);
    for (const auto& p : {csv, chart, js}) emit(out, p);
}

void cmd_sample(const RunConfig& c, std::ostream& out) {
    if (!c.seed) throw ConfigError("sample requires --seed");
    if (!c.n && c.sizes.empty()) throw ConfigError("sample requires --n or --sizes");
    auto dataset = load_input_dataset(c);
    auto dir = prepare_output_dir(c);
    if (c.n) {
        auto subset = random_subset(dataset, *c.n, *c.seed);
        auto path = dir / fmt::format("random_{}.jsonl", *c.n);
        write_dataset(subset, path);
        emit(out, path);
    }
    if (!c.sizes.empty()) {
        auto subsets = subsample_kept(dataset, c.sizes, *c.seed);
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            auto path = dir / fmt::format("subset_{}.jsonl", c.sizes[i]);
            write_dataset(subsets[i], path);
            emit(out, path);
        }
    }
}

void cmd_arena(const RunConfig& c, std::ostream& out) {
    require(c.testset, "--testset");
    require(c.subject, "--subject");
    require(c.baseline, "--baseline");
    auto mode = parse_judge_mode(c.judge_mode);
    auto prompts = load_testset(c.testset);
    auto subject = load_responses(c.subject, c.subject_label.empty() ? std::nullopt
                                                                     : std::optional<std::string>(c.subject_label));
    auto baseline = load_responses(c.baseline, c.baseline_label.empty()
                                                   ? std::nullopt
                                                   : std::optional<std::string>(c.baseline_label));
    ArenaOptions options;
    if (!c.judge_template.empty()) options.judge_template = PromptTemplate::load(c.judge_template);

    auto dir = prepare_output_dir(c);
    GatewayOptions gopts;
    gopts.cache_path = c.cache_path();
    gopts.request_budget = c.max_requests;
    Gateway judge(c.arena_endpoint(), gopts);

    auto run = run_arena(prompts, subject, baseline, judge, mode, options);
    const fs::path duels = dir / "duels.jsonl", rep_json = dir / "arena_report.json", rep_txt = dir / "arena_report.txt";
    write_file(duels, duels_jsonl(run.duels));
    write_file(rep_json, arena_report_json(run.report, run.exclusions));
    write_file(rep_txt, arena_report_table(run.report));
    out << arena_report_table(run.report);
    for (const auto& p : {duels, rep_json, rep_txt}) emit(out, p);
}

void cmd_cost(const RunConfig& c, std::ostream& out) {
    require(c.minutes, "--minutes");
    CostSpec spec;
    spec.gpus_used = c.gpus;
    spec.gpus_per_node = c.gpus_per_node;
    auto minutes = Decimal::parse(c.minutes);
    auto price = Decimal::parse(c.node_price);
    if (!minutes) throw ConfigError("--minutes is not a number: " + c.minutes);
    if (!price) throw ConfigError("--node-price is not a number: " + c.node_price);
    spec.wall_time_minutes = *minutes;
    spec.node_price_per_hour = *price;
    out << estimate_cost(spec).to_string() << "\n";
    out << describe_cost(spec) << "\n";
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> find_config_flag(const std::vector<std::string>& args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].starts_with("--config=")) return args[i].substr(9);
    }
    return std::nullopt;
}

void add_common(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--config", "JSON config file; flags override its keys");
    cmd->add_option("--out,--output-dir", c.output_dir, "output directory");
}

void add_dataset(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--dataset", c.dataset, "input dataset path");
    cmd->add_option("--format", c.format, "alpaca-json | dolly-jsonl | canonical-jsonl");
}

void add_endpoint(CLI::App* cmd, RunConfig& c) {
    cmd->add_option("--model", c.model, "grader model name");
    cmd->add_option("--api-key-env", c.api_key_env, "environment variable holding the API key");
    cmd->add_option("--temperature", c.temperature)->check(CLI::Range(0.0, 2.0));
    cmd->add_option("--max-tokens", c.max_tokens)->check(CLI::PositiveNumber);
    cmd->add_option("--max-concurrency", c.max_concurrency)->check(CLI::PositiveNumber);
    cmd->add_option("--rpm", c.requests_per_minute, "requests per minute")->check(CLI::PositiveNumber);
    cmd->add_option("--cache", c.cache, "cache journal (default <out>/cache.jsonl)");
    cmd->add_option("--max-requests", c.max_requests, "abort after this many uncached requests");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    try {
        if (auto path = find_config_flag(args)) c = RunConfig::from_json_file(*path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    }

    CLI::App app{"Instruction-data curation toolkit: grade, filter, sample, and judge.", "curator"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    auto* rate = app.add_subcommand("rate", "grade every sample with the auto-grader");
    add_common(rate, c);
    add_dataset(rate, c);
    add_endpoint(rate, c);
    rate->add_option("--endpoint", c.endpoint, "grader base URL or mock://grader");
    rate->add_option("--dimension", c.dimension, "rating dimension");
    rate->add_option("--granularity", c.granularity, "0.5 or 1.0");
    rate->add_option("--template", c.prompt_template, "rating prompt template file");

    auto* filter = app.add_subcommand("filter", "keep samples scoring at or above the threshold");
    add_common(filter, c);
    add_dataset(filter, c);
    filter->add_option("--ratings", c.ratings, "ratings JSONL");
    filter->add_option("--threshold,--tau", c.threshold, "keep score >= threshold (default 4.5)");
    filter->add_option("--granularity", c.granularity, "histogram granularity");
    std::vector<std::string> group_flags;
    filter->add_option("--keyword-group", group_flags, "name=kw1,kw2,... (repeatable)");
    bool coding_group = false;
    filter->add_flag("--coding-group", coding_group, "add the built-in coding keyword group");

    auto* stats = app.add_subcommand("stats", "score histogram and summary");
    add_common(stats, c);
    stats->add_option("--ratings", c.ratings, "ratings JSONL");
    stats->add_option("--granularity", c.granularity, "0.5 or 1.0");
    stats->add_option("--threshold,--tau", c.threshold, "threshold for the at-or-above count");

    auto* sample = app.add_subcommand("sample", "seeded random subsets");
    add_common(sample, c);
    add_dataset(sample, c);
    sample->add_option("--n", c.n, "size of a uniform random subset");
    sample->add_option("--sizes", c.sizes, "nested subset sizes, e.g. 3000 6000")->delimiter(',');
    sample->add_option("--seed", c.seed, "64-bit seed (required)");

    auto* arena = app.add_subcommand("arena", "dual-order pairwise judging");
    add_common(arena, c);
    add_endpoint(arena, c);
    arena->add_option("--testset", c.testset, "test prompts JSONL");
    arena->add_option("--subject", c.subject, "subject model responses JSONL");
    arena->add_option("--baseline", c.baseline, "baseline model responses JSONL");
    arena->add_option("--subject-label", c.subject_label);
    arena->add_option("--baseline-label", c.baseline_label);
    arena->add_option("--mode", c.judge_mode, "score-pair | verdict-letter");
    arena->add_option("--judge-endpoint", c.judge_endpoint, "judge base URL or mock://judge");
    arena->add_option("--judge-model", c.judge_model);
    arena->add_option("--judge-template", c.judge_template, "judge prompt template file");

    auto* cost = app.add_subcommand("cost", "training cost estimate");
    cost->add_option("--config", "JSON config file; flags override its keys");
    cost->add_option("--gpus", c.gpus)->check(CLI::PositiveNumber);
    cost->add_option("--minutes", c.minutes, "wall time in minutes");
    cost->add_option("--node-price", c.node_price, "USD per node-hour (default 40.96)");
    cost->add_option("--gpus-per-node", c.gpus_per_node)->check(CLI::PositiveNumber);

    std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_tail.begin(), argv_tail.end());  // CLI11 consumes a reversed vector
    try {
        app.parse(argv_tail);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        }
        return kUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    for (const auto& flag : group_flags) {
        auto eq = flag.find('=');
        if (eq == std::string::npos) {
            err << "usage error: --keyword-group expects name=kw1,kw2\n";
            return kUsage;
        }
        std::vector<std::string> words;
        std::string rest = flag.substr(eq + 1);
        for (std::size_t pos = 0; pos <= rest.size();) {
            auto comma = rest.find(',', pos);
            if (comma == std::string::npos) comma = rest.size();
            if (comma > pos) words.push_back(rest.substr(pos, comma - pos));
            pos = comma + 1;
        }
        c.keyword_groups[flag.substr(0, eq)] = words;
    }
    if (coding_group) c.keyword_groups[coding_keyword_group().name] = coding_keyword_group().keywords;

    try {
        if (rate->parsed()) cmd_rate(c, out);
        else if (filter->parsed()) cmd_filter(c, out);
        else if (stats->parsed()) cmd_stats(c, out);
        else if (sample->parsed()) cmd_sample(c, out);
        else if (arena->parsed()) cmd_arena(c, out);
        else if (cost->parsed()) cmd_cost(c, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << "\n";
        return kRuntime;
    }
    return kOk;
}

}  // namespace curator::cli
