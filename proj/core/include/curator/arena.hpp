#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "curator/decimal.hpp"
#include "curator/gateway.hpp"
#include "curator/prompt_template.hpp"

namespace curator {

enum class JudgeMode { ScorePair, VerdictLetter };
std::string_view to_string(JudgeMode m);
/// "score-pair" or "verdict-letter". Throws ConfigError.
JudgeMode parse_judge_mode(std::string_view name);

/// Per-order result from the subject model's point of view.
enum class Outcome { Win, Draw, Lose };
/// Dual-order result.
enum class Final { Win, Tie, Lose };

std::string_view to_string(Outcome o);
std::string_view to_string(Final f);
Outcome swap_sides(Outcome o);
Final swap_sides(Final f);

struct TestPrompt {
    std::string id;
    std::string text;
    std::optional<std::string> category;
    std::string testset;
};

/// Responses of one model keyed by prompt id.
struct ResponseSet {
    std::string model_label;
    std::map<std::string, std::string> by_prompt;
};

struct OrderVerdict {
    std::string prompt_id;
    std::string first_label;
    std::string second_label;
    JudgeMode mode = JudgeMode::ScorePair;
    std::optional<std::pair<Decimal, Decimal>> scores;  // (first, second)
    std::optional<char> letter;                          // 'A', 'B', or 'C'
    Outcome outcome_for_subject = Outcome::Draw;
    std::string raw_reply;
};

struct DuelRecord {
    std::string prompt_id;
    std::optional<std::string> category;
    OrderVerdict forward;   // subject answer in position A / 1
    OrderVerdict reversed;  // subject answer in position B / 2
    Final final = Final::Tie;
};

struct CategoryRow {
    std::string category;
    std::size_t wins = 0, ties = 0, losses = 0;
    std::optional<double> winning_score;
    std::optional<double> capacity_ratio;
};

struct ArenaReport {
    JudgeMode mode = JudgeMode::ScorePair;
    std::string subject;
    std::string baseline;
    std::size_t wins = 0, ties = 0, losses = 0;
    std::size_t excluded = 0;
    std::optional<double> winning_score;   // nullopt when no duel was adjudicated
    std::optional<double> capacity_ratio;  // score-pair mode only
    std::vector<CategoryRow> per_category;  // sorted by category

    std::size_t n() const { return wins + ties + losses; }
};

struct Exclusion {
    std::string prompt_id;
    std::string reason;
};

struct ArenaRun {
    std::vector<DuelRecord> duels;  // prompt order
    std::vector<Exclusion> exclusions;
    ArenaReport report;
};

const std::vector<std::string>& judge_slots();
PromptTemplate default_judge_template(JudgeMode mode);

/// Renders one ordering. Forward and reversed renderings differ only in
/// which answer fills which slot. Throws TemplateError on a missing slot.
PromptTemplate::Rendered render_judge_prompt(const PromptTemplate& tmpl, std::string_view question,
                                             std::string_view answer_a, std::string_view answer_b);

struct ParsedVerdict {
    std::optional<std::pair<Decimal, Decimal>> scores;
    std::optional<char> letter;
};

/// Score-pair: first two numbers in [1, 10] in reading order.
/// Verdict-letter: last of [[A]] / [[B]] / [[C]]. Throws UnparseableReply.
ParsedVerdict parse_verdict(std::string_view reply, JudgeMode mode);

/// Strict comparison; equal scores are a draw.
Outcome outcome_from_scores(Decimal subject, Decimal other);
/// `subject_first` says whether the subject's answer sat in position A.
Outcome outcome_from_letter(char letter, bool subject_first);

/// Win: two wins, or a win and a draw. Tie: two draws, or a win and a loss.
/// Lose: two losses, or a loss and a draw. Symmetric in its arguments.
Final aggregate_duel(Outcome forward, Outcome reversed);

/// (wins - losses) / (wins + ties + losses) + 1. Throws ValidationError when the total is zero.
double winning_score(std::size_t wins, std::size_t ties, std::size_t losses);

/// sum(subject) / sum(reference). Throws SizeError on length mismatch and
/// ValidationError when the reference sum is zero.
double capacity_ratio(const std::vector<Decimal>& subject_scores, const std::vector<Decimal>& reference_scores);

/// Deterministic fold of duel records (in order) into a report.
ArenaReport aggregate_report(const std::vector<DuelRecord>& duels, JudgeMode mode, std::string subject,
                             std::string baseline, std::size_t excluded);

struct ArenaOptions {
    std::optional<PromptTemplate> judge_template;  // default for the mode when unset
    double max_excluded_fraction = 0.10;
};

/// Two judge calls per prompt (subject first, then subject second).
/// Prompts missing a response are excluded and logged. A duel whose judge
/// call fails after retries, or stays unparseable after one re-ask, is
/// excluded; if those exceed the allowed fraction the run throws QualityError.
ArenaRun run_arena(const std::vector<TestPrompt>& prompts, const ResponseSet& subject, const ResponseSet& baseline,
                   Gateway& judge, JudgeMode mode, const ArenaOptions& options = {});

// Files ---------------------------------------------------------------------

/// JSONL with id (optional; content hash when absent), text, category, testset.
std::vector<TestPrompt> load_testset(const std::filesystem::path& path);
/// JSONL with prompt_id, model_label, text. When the file holds several
/// labels, `label` picks one.
ResponseSet load_responses(const std::filesystem::path& path, std::optional<std::string> label = std::nullopt);

std::string duels_jsonl(const std::vector<DuelRecord>& duels);
std::string arena_report_json(const ArenaReport& report, const std::vector<Exclusion>& exclusions);
std::string arena_report_table(const ArenaReport& report);

}  // namespace curator
