#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curator/corpus.hpp"
#include "curator/decimal.hpp"
#include "curator/gateway.hpp"
#include "curator/prompt_template.hpp"

namespace curator {

inline constexpr Decimal kScaleMin = Decimal::from_int(0);
inline constexpr Decimal kScaleMax = Decimal::from_int(5);

/// Slots every rating template must carry.
const std::vector<std::string>& rating_slots();
/// The shipped rating prompt (system: grader role; user: triple + request).
PromptTemplate default_rating_template();

struct GraderProfile {
    std::string dimension = "accuracy";
    /// 0.5 models a ChatGPT-style grader, 1.0 a Claude-2-style grader.
    Decimal granularity = Decimal::from_tenths(5);
    PromptTemplate prompt_template = default_rating_template();
    JudgeEndpoint judge;

    /// Throws ValidationError (granularity) or TemplateError (missing slot).
    void validate() const;
};

struct Rating {
    SampleId sample_id = 0;
    Decimal score;
    std::string explanation;
    std::string dimension;
    std::string judge_model;
    std::string raw_reply;
    bool off_grid = false;

    friend bool operator==(const Rating&, const Rating&) = default;
};

PromptTemplate::Rendered render_prompt(const GraderProfile& profile, const InstructionSample& sample);

struct ParsedScore {
    Decimal score;
    std::string explanation;
    bool off_grid = false;
};

/// First number in the reply that lies in [0, 5]; the explanation is what
/// follows it. Throws UnparseableReply when no in-range number exists.
ParsedScore parse_score(std::string_view reply, Decimal granularity);

/// Appended to the user prompt for the single re-ask after an unparseable reply.
inline constexpr std::string_view kClarifySuffix =
    "\n\nYour previous answer could not be read. Reply with the numeric score alone on the first line.";

struct SkippedSample {
    SampleId sample_id = 0;
    std::string reason;
    std::string raw_reply;
};

struct RatingRun {
    std::vector<Rating> ratings;   // dataset order
    std::vector<SkippedSample> skips;  // dataset order
    std::size_t unparseable = 0;
    GatewayStats gateway;
};

struct RateOptions {
    /// Abort when more than this fraction of replies stay unparseable.
    double max_unparseable_fraction = 0.10;
    std::function<void(std::size_t done, std::size_t total)> on_progress;
};

/// Grades every sample through `gateway`, fanning out up to the endpoint's
/// max_concurrency. Transport and parse failures become skips; auth,
/// budget, and IO failures abort the run. Throws QualityError when the
/// unparseable fraction exceeds the limit.
RatingRun rate_dataset(const Dataset& dataset, const GraderProfile& profile, Gateway& gateway,
                       const RateOptions& options = {});

// Ratings JSONL: sample_id, score, dimension, judge_model, explanation.
std::string to_ratings_jsonl(const std::vector<Rating>& ratings);
void write_ratings(const std::vector<Rating>& ratings, const std::filesystem::path& path);
/// Ratings file back into memory. `granularity`, when given, sets off_grid.
std::vector<Rating> load_ratings(const std::filesystem::path& path,
                                 std::optional<Decimal> granularity = std::nullopt);
std::vector<Rating> parse_ratings(std::string_view content, const std::string& name,
                                  std::optional<Decimal> granularity = std::nullopt);

void write_skip_report(const std::vector<SkippedSample>& skips, const std::filesystem::path& path);

}  // namespace curator
