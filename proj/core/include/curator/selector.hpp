#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curator/corpus.hpp"
#include "curator/decimal.hpp"
#include "curator/grader.hpp"

namespace curator {

inline constexpr Decimal kDefaultThreshold = Decimal::from_tenths(45);

struct ScoreHistogram {
    Decimal granularity;
    /// Every grid point 0, g, 2g, ..., 5 is present, including empty ones.
    std::map<Decimal, std::size_t> bins;
    std::size_t off_grid = 0;
    std::size_t total = 0;

    /// Ratings with score >= tau, counted from the bins.
    std::size_t count_at_least(Decimal tau) const;
};

ScoreHistogram histogram(const std::vector<Rating>& ratings, Decimal granularity);
/// "score,count" rows for each grid bin followed by an "off-grid" row.
std::string histogram_csv(const ScoreHistogram& h);
std::string histogram_chart(const ScoreHistogram& h, std::size_t width = 50);

struct KeywordGroup {
    std::string name;
    std::vector<std::string> keywords;
};

/// The coding keyword set used for the filtering-ratio analysis.
KeywordGroup coding_keyword_group();

struct GroupReport {
    std::string name;
    std::size_t total = 0;
    std::size_t kept = 0;
    std::optional<double> filtering_ratio;  // nullopt when total == 0
};

struct SelectionReport {
    Decimal threshold;
    std::size_t total = 0;
    std::size_t kept = 0;
    std::size_t dropped = 0;   // includes unrated
    std::size_t unrated = 0;
    double filtering_ratio = 0.0;
    std::vector<GroupReport> groups;
};

struct Selection {
    Dataset kept;
    SelectionReport report;
};

/// Keeps samples whose score is >= tau, in dataset order. Unrated samples
/// are dropped and counted. Throws ValidationError when tau is outside [0, 5].
Selection filter_by_threshold(const Dataset& dataset, const std::vector<Rating>& ratings, Decimal tau);

struct KeywordAnalysis {
    std::vector<GroupReport> groups;
    GroupReport overall;
};

/// Case-sensitive raw substring match over instruction, input, and response.
/// Throws ValidationError when a group has no keywords.
KeywordAnalysis keyword_group_analysis(const Dataset& dataset, const std::vector<Rating>& ratings, Decimal tau,
                                       const std::vector<KeywordGroup>& groups);

bool matches_any(const InstructionSample& sample, const std::vector<std::string>& keywords);

std::string report_json(const SelectionReport& report);
std::string report_table(const SelectionReport& report);

/// Uniform sample of n without replacement, in original order. Throws SizeError when n > size.
Dataset random_subset(const Dataset& dataset, std::size_t n, std::uint64_t seed);

/// Nested subsets: the result for a smaller size is contained in every
/// larger one. Results follow the order of `sizes`.
std::vector<Dataset> subsample_kept(const Dataset& kept, const std::vector<std::size_t>& sizes,
                                    std::uint64_t seed);

/// Index permutation prefix used by the samplers: the first `count` entries of
/// a seeded Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> seeded_prefix(std::size_t n, std::size_t count, std::uint64_t seed);

}  // namespace curator
