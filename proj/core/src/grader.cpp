#include "curator/grader.hpp"

#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "curator/default_templates.hpp"
#include "curator/errors.hpp"
#include "curator/hash.hpp"
#include "number_scan.hpp"

namespace curator {

using json = nlohmann::ordered_json;

const std::vector<std::string>& rating_slots() {
    static const std::vector<std::string> slots{"dimension", "instruction", "input", "response"};
    return slots;
}

PromptTemplate default_rating_template() { return PromptTemplate::parse(builtin::kRatingPrompt); }

void GraderProfile::validate() const {
    if (granularity != Decimal::from_tenths(5) && granularity != Decimal::from_int(1)) {
        throw ValidationError("grader granularity must be 0.5 or 1.0, got " + granularity.to_string());
    }
    if (dimension.empty()) throw ValidationError("grader dimension is empty");
    prompt_template.require_slots(rating_slots());
}

PromptTemplate::Rendered render_prompt(const GraderProfile& profile, const InstructionSample& sample) {
    profile.prompt_template.require_slots(rating_slots());
    std::string input = sample.input && !sample.input->empty() ? *sample.input : "None";
    return profile.prompt_template.render({
        {"dimension", profile.dimension},
        {"instruction", sample.instruction},
        {"input", std::move(input)},
        {"response", sample.response},
    });
}

ParsedScore parse_score(std::string_view reply, Decimal granularity) {
    std::optional<ParsedScore> found;
    detail::scan_numbers(reply, [&](Decimal value, std::size_t end) {
        if (value < kScaleMin || value > kScaleMax) return false;
        std::size_t rest = end;
        while (rest < reply.size() &&
               (std::isspace(static_cast<unsigned char>(reply[rest])) ||
                std::string_view(".,:;)]!").find(reply[rest]) != std::string_view::npos)) {
            ++rest;
        }
        std::string explanation(reply.substr(rest));
        while (!explanation.empty() && std::isspace(static_cast<unsigned char>(explanation.back()))) {
            explanation.pop_back();
        }
        found = ParsedScore{value, std::move(explanation), !value.is_multiple_of(granularity)};
        return true;
    });
    if (!found) throw UnparseableReply("no score in [0, 5] found in reply", std::string(reply));
    return *found;
}

namespace {

enum class Outcome { Rated, Unparseable, Failed };

struct SampleResult {
    Outcome outcome = Outcome::Failed;
    Rating rating;
    SkippedSample skip;
};

SampleResult grade_one(const InstructionSample& sample, const GraderProfile& profile, Gateway& gateway) {
    auto prompt = render_prompt(profile, sample);
    ChatRequest request{std::move(prompt.system), std::move(prompt.user), {}};
    request.tag.sample_id = sample.id;

    SampleResult result;
    result.skip.sample_id = sample.id;
    try {
        std::string reply;
        std::optional<ParsedScore> parsed;
        for (int ask = 0; ask < 2 && !parsed; ++ask) {
            if (ask == 1) request.user += kClarifySuffix;
            reply = gateway.complete(request).reply;
            try {
                parsed = parse_score(reply, profile.granularity);
            } catch (const UnparseableReply&) {
                spdlog::debug("sample {}: unparseable reply (ask {})", to_hex(sample.id), ask + 1);
            }
        }
        if (!parsed) {
            result.outcome = Outcome::Unparseable;
            result.skip.reason = "unparseable reply";
            result.skip.raw_reply = std::move(reply);
            return result;
        }
        result.outcome = Outcome::Rated;
        result.rating = Rating{sample.id,       parsed->score,         std::move(parsed->explanation),
                               profile.dimension, gateway.endpoint().model_name, std::move(reply),
                               parsed->off_grid};
    } catch (const TransportError& e) {
        result.skip.reason = std::string("transport: ") + e.what();
    } catch (const ProtocolError& e) {
        result.skip.reason = std::string("protocol: ") + e.what();
    }
    return result;
}

}  // namespace

RatingRun rate_dataset(const Dataset& dataset, const GraderProfile& profile, Gateway& gateway,
                       const RateOptions& options) {
    profile.validate();
    RatingRun run;
    const std::size_t n = dataset.size();
    if (n == 0) return run;

    std::vector<SampleResult> results(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            std::size_t idx = next.fetch_add(1);
            if (idx >= n) return;
            try {
                results[idx] = grade_one(dataset.samples[idx], profile, gateway);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                stop.store(true);
                return;
            }
            std::size_t finished = done.fetch_add(1) + 1;
            if (options.on_progress) {
                std::lock_guard lock(failure_mu);
                options.on_progress(finished, n);
            }
        }
    };

    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(gateway.endpoint().max_concurrency));
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    for (auto& r : results) {
        if (r.outcome == Outcome::Rated) {
            run.ratings.push_back(std::move(r.rating));
        } else {
            if (r.outcome == Outcome::Unparseable) ++run.unparseable;
            run.skips.push_back(std::move(r.skip));
        }
    }
    run.gateway = gateway.stats();
    for (const auto& s : run.skips) spdlog::warn("skipped sample {}: {}", to_hex(s.sample_id), s.reason);

    double fraction = static_cast<double>(run.unparseable) / static_cast<double>(n);
    if (fraction > options.max_unparseable_fraction) {
        throw QualityError(fmt::format("{} of {} replies unparseable ({:.1f}%), above the {:.0f}% limit",
                                       run.unparseable, n, fraction * 100.0,
                                       options.max_unparseable_fraction * 100.0));
    }
    return run;
}

std::string to_ratings_jsonl(const std::vector<Rating>& ratings) {
    std::string out;
    for (const auto& r : ratings) {
        json rec;
        rec["sample_id"] = to_hex(r.sample_id);
        rec["score"] = r.score.to_double();
        rec["dimension"] = r.dimension;
        rec["judge_model"] = r.judge_model;
        rec["explanation"] = r.explanation;
        out += rec.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

void write_ratings(const std::vector<Rating>& ratings, const std::filesystem::path& path) {
    write_file(path, to_ratings_jsonl(ratings));
}

std::vector<Rating> parse_ratings(std::string_view content, const std::string& name,
                                  std::optional<Decimal> granularity) {
    std::vector<Rating> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        auto line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(name + ":" + std::to_string(line_no) + ": malformed JSON", line_no);
        }
        for (const char* key : {"sample_id", "score"}) {
            if (!rec.contains(key)) {
                throw SchemaError(name + ":" + std::to_string(line_no) + ": missing mandatory key \"" + key + "\"",
                                  key);
            }
        }
        Rating r;
        auto id = rec["sample_id"].is_string() ? from_hex(rec["sample_id"].get<std::string>()) : std::nullopt;
        if (!id) throw SchemaError(name + ":" + std::to_string(line_no) + ": bad sample_id", "sample_id");
        if (!rec["score"].is_number()) throw SchemaError(name + ":" + std::to_string(line_no) + ": bad score", "score");
        r.sample_id = *id;
        r.score = Decimal::from_double(rec["score"].get<double>());
        if (r.score < kScaleMin || r.score > kScaleMax) {
            throw ValidationError(name + ":" + std::to_string(line_no) + ": score outside [0, 5]");
        }
        r.dimension = rec.value("dimension", "");
        r.judge_model = rec.value("judge_model", "");
        r.explanation = rec.value("explanation", "");
        if (granularity) r.off_grid = !r.score.is_multiple_of(*granularity);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Rating> load_ratings(const std::filesystem::path& path, std::optional<Decimal> granularity) {
    return parse_ratings(read_file(path), path.filename().string(), granularity);
}

void write_skip_report(const std::vector<SkippedSample>& skips, const std::filesystem::path& path) {
    std::string out;
    for (const auto& s : skips) {
        json rec;
        rec["sample_id"] = to_hex(s.sample_id);
        rec["reason"] = s.reason;
        rec["raw_reply"] = s.raw_reply;
        out += rec.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    write_file(path, out);
}

}  // namespace curator
