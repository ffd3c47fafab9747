#include "curator/arena.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "curator/corpus.hpp"
#include "curator/default_templates.hpp"
#include "curator/errors.hpp"
#include "curator/hash.hpp"
#include "number_scan.hpp"

namespace curator {

using json = nlohmann::ordered_json;

std::string_view to_string(JudgeMode m) {
    return m == JudgeMode::ScorePair ? "score-pair" : "verdict-letter";
}

JudgeMode parse_judge_mode(std::string_view name) {
    if (name == "score-pair") return JudgeMode::ScorePair;
    if (name == "verdict-letter") return JudgeMode::VerdictLetter;
    throw ConfigError("unknown judge mode: " + std::string(name));
}

std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::Win: return "win";
    case Outcome::Draw: return "draw";
    case Outcome::Lose: return "lose";
    }
    return "?";
}

std::string_view to_string(Final f) {
    switch (f) {
    case Final::Win: return "Win";
    case Final::Tie: return "Tie";
    case Final::Lose: return "Lose";
    }
    return "?";
}

Outcome swap_sides(Outcome o) {
    return o == Outcome::Win ? Outcome::Lose : o == Outcome::Lose ? Outcome::Win : Outcome::Draw;
}

Final swap_sides(Final f) {
    return f == Final::Win ? Final::Lose : f == Final::Lose ? Final::Win : Final::Tie;
}

const std::vector<std::string>& judge_slots() {
    static const std::vector<std::string> slots{"question", "answer_a", "answer_b"};
    return slots;
}

PromptTemplate default_judge_template(JudgeMode mode) {
    return PromptTemplate::parse(mode == JudgeMode::ScorePair ? builtin::kJudgeScorePair
                                                              : builtin::kJudgeVerdictLetter);
}

PromptTemplate::Rendered render_judge_prompt(const PromptTemplate& tmpl, std::string_view question,
                                             std::string_view answer_a, std::string_view answer_b) {
    tmpl.require_slots(judge_slots());
    return tmpl.render({
        {"question", std::string(question)},
        {"answer_a", std::string(answer_a)},
        {"answer_b", std::string(answer_b)},
    });
}

ParsedVerdict parse_verdict(std::string_view reply, JudgeMode mode) {
    ParsedVerdict out;
    if (mode == JudgeMode::ScorePair) {
        const Decimal lo = Decimal::from_int(1), hi = Decimal::from_int(10);
        std::vector<Decimal> found;
        detail::scan_numbers(reply, [&](Decimal v, std::size_t) {
            if (v >= lo && v <= hi) found.push_back(v);
            return found.size() == 2;
        });
        if (found.size() < 2) throw UnparseableReply("fewer than two scores in [1, 10] in reply", std::string(reply));
        out.scores = std::make_pair(found[0], found[1]);
        return out;
    }
    std::size_t best = std::string_view::npos;
    for (char c : {'A', 'B', 'C'}) {
        std::string marker = std::string("[[") + c + "]]";
        auto pos = reply.rfind(marker);
        if (pos != std::string_view::npos && (best == std::string_view::npos || pos > best)) {
            best = pos;
            out.letter = c;
        }
    }
    if (!out.letter) throw UnparseableReply("no [[A]]/[[B]]/[[C]] verdict in reply", std::string(reply));
    return out;
}

Outcome outcome_from_scores(Decimal subject, Decimal other) {
    if (subject > other) return Outcome::Win;
    if (subject == other) return Outcome::Draw;
    return Outcome::Lose;
}

Outcome outcome_from_letter(char letter, bool subject_first) {
    if (letter == 'C') return Outcome::Draw;
    bool first_won = letter == 'A';
    return first_won == subject_first ? Outcome::Win : Outcome::Lose;
}

Final aggregate_duel(Outcome forward, Outcome reversed) {
    auto count = [&](Outcome o) { return (forward == o ? 1 : 0) + (reversed == o ? 1 : 0); };
    int wins = count(Outcome::Win);
    int losses = count(Outcome::Lose);
    if (wins > losses) return Final::Win;
    if (losses > wins) return Final::Lose;
    return Final::Tie;
}

double winning_score(std::size_t wins, std::size_t ties, std::size_t losses) {
    std::size_t n = wins + ties + losses;
    if (n == 0) throw ValidationError("winning score is undefined for an empty test set");
    return (static_cast<double>(wins) - static_cast<double>(losses)) / static_cast<double>(n) + 1.0;
}

double capacity_ratio(const std::vector<Decimal>& subject_scores, const std::vector<Decimal>& reference_scores) {
    if (subject_scores.size() != reference_scores.size()) {
        throw SizeError(fmt::format("capacity ratio needs equal-length score lists ({} vs {})",
                                    subject_scores.size(), reference_scores.size()));
    }
    Decimal subject_sum, reference_sum;
    for (auto s : subject_scores) subject_sum = subject_sum + s;
    for (auto s : reference_scores) reference_sum = reference_sum + s;
    if (reference_sum.units() <= 0) throw ValidationError("capacity ratio is undefined: reference score sum is zero");
    return static_cast<double>(subject_sum.units()) / static_cast<double>(reference_sum.units());
}

namespace {

struct Tally {
    std::size_t wins = 0, ties = 0, losses = 0;
    std::vector<Decimal> subject_scores, reference_scores;

    void add(const DuelRecord& d) {
        switch (d.final) {
        case Final::Win: ++wins; break;
        case Final::Tie: ++ties; break;
        case Final::Lose: ++losses; break;
        }
        if (d.forward.scores && d.reversed.scores) {
            subject_scores.push_back(d.forward.scores->first + d.reversed.scores->second);
            reference_scores.push_back(d.forward.scores->second + d.reversed.scores->first);
        }
    }
    std::optional<double> score() const {
        if (wins + ties + losses == 0) return std::nullopt;
        return winning_score(wins, ties, losses);
    }
    std::optional<double> capacity(JudgeMode mode) const {
        if (mode != JudgeMode::ScorePair || subject_scores.empty()) return std::nullopt;
        try {
            return capacity_ratio(subject_scores, reference_scores);
        } catch (const ValidationError&) {
            return std::nullopt;
        }
    }
};

constexpr const char* kUncategorized = "uncategorized";

}  // namespace

ArenaReport aggregate_report(const std::vector<DuelRecord>& duels, JudgeMode mode, std::string subject,
                             std::string baseline, std::size_t excluded) {
    Tally overall;
    std::map<std::string, Tally> by_category;
    for (const auto& d : duels) {
        overall.add(d);
        by_category[d.category.value_or(kUncategorized)].add(d);
    }
    ArenaReport r;
    r.mode = mode;
    r.subject = std::move(subject);
    r.baseline = std::move(baseline);
    r.wins = overall.wins;
    r.ties = overall.ties;
    r.losses = overall.losses;
    r.excluded = excluded;
    r.winning_score = overall.score();
    r.capacity_ratio = overall.capacity(mode);
    for (const auto& [name, t] : by_category) {
        r.per_category.push_back({name, t.wins, t.ties, t.losses, t.score(), t.capacity(mode)});
    }
    return r;
}

namespace {

OrderVerdict judge_order(Gateway& judge, const PromptTemplate& tmpl, JudgeMode mode, const TestPrompt& prompt,
                         const std::string& first_label, const std::string& first_text,
                         const std::string& second_label, const std::string& second_text, bool subject_first) {
    auto rendered = render_judge_prompt(tmpl, prompt.text, first_text, second_text);
    ChatRequest request{std::move(rendered.system), std::move(rendered.user), {}};
    request.tag.answers = std::make_pair(first_text, second_text);

    OrderVerdict v;
    v.prompt_id = prompt.id;
    v.first_label = first_label;
    v.second_label = second_label;
    v.mode = mode;
    for (int ask = 0; ask < 2; ++ask) {
        if (ask == 1) request.user += "\n\nYour previous reply could not be read. Follow the required output format exactly.";
        v.raw_reply = judge.complete(request).reply;
        try {
            auto parsed = parse_verdict(v.raw_reply, mode);
            if (mode == JudgeMode::ScorePair) {
                v.scores = parsed.scores;
                auto [first, second] = *parsed.scores;
                v.outcome_for_subject = subject_first ? outcome_from_scores(first, second)
                                                      : outcome_from_scores(second, first);
            } else {
                v.letter = parsed.letter;
                v.outcome_for_subject = outcome_from_letter(*parsed.letter, subject_first);
            }
            return v;
        } catch (const UnparseableReply&) {
            if (ask == 1) throw;
        }
    }
    throw UnparseableReply("unreachable", v.raw_reply);
}

}  // namespace

ArenaRun run_arena(const std::vector<TestPrompt>& prompts, const ResponseSet& subject, const ResponseSet& baseline,
                   Gateway& judge, JudgeMode mode, const ArenaOptions& options) {
    const PromptTemplate tmpl = options.judge_template.value_or(default_judge_template(mode));
    tmpl.require_slots(judge_slots());

    const std::size_t n = prompts.size();
    std::vector<std::optional<DuelRecord>> records(n);
    std::vector<std::string> reasons(n);
    std::vector<bool> judge_failure(n, false);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            const auto& p = prompts[i];
            auto s = subject.by_prompt.find(p.id);
            auto b = baseline.by_prompt.find(p.id);
            if (s == subject.by_prompt.end() || b == baseline.by_prompt.end()) {
                reasons[i] = fmt::format("missing response from {}",
                                         s == subject.by_prompt.end() ? subject.model_label : baseline.model_label);
                continue;
            }
            try {
                DuelRecord d;
                d.prompt_id = p.id;
                d.category = p.category;
                d.forward = judge_order(judge, tmpl, mode, p, subject.model_label, s->second, baseline.model_label,
                                        b->second, true);
                d.reversed = judge_order(judge, tmpl, mode, p, baseline.model_label, b->second, subject.model_label,
                                         s->second, false);
                d.final = aggregate_duel(d.forward.outcome_for_subject, d.reversed.outcome_for_subject);
                records[i] = std::move(d);
            } catch (const UnparseableReply& e) {
                reasons[i] = std::string("unparseable judge reply: ") + e.what();
                judge_failure[i] = true;
            } catch (const TransportError& e) {
                reasons[i] = std::string("judge transport: ") + e.what();
                judge_failure[i] = true;
            } catch (const ProtocolError& e) {
                reasons[i] = std::string("judge protocol: ") + e.what();
                judge_failure[i] = true;
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                stop.store(true);
                return;
            }
        }
    };
    {
        std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(n, 1),
                                                    static_cast<std::size_t>(judge.endpoint().max_concurrency));
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    ArenaRun run;
    std::size_t judge_failures = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (records[i]) {
            run.duels.push_back(std::move(*records[i]));
        } else {
            run.exclusions.push_back({prompts[i].id, reasons[i]});
            spdlog::warn("excluded prompt {}: {}", prompts[i].id, reasons[i]);
            judge_failures += judge_failure[i] ? 1 : 0;
        }
    }
    if (n > 0 && static_cast<double>(judge_failures) / static_cast<double>(n) > options.max_excluded_fraction) {
        throw QualityError(fmt::format("{} of {} duels failed at the judge, above the {:.0f}% limit", judge_failures,
                                       n, options.max_excluded_fraction * 100.0));
    }
    run.report = aggregate_report(run.duels, mode, subject.model_label, baseline.model_label, run.exclusions.size());
    return run;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    const std::string content = read_file(path);
    const std::string name = path.filename().string();
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        std::string_view line(content.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw ParseError(fmt::format("{}:{}: malformed JSON", name, line_no), line_no);
        }
        fn(rec, name, line_no);
    }
}

std::string require_string(const json& rec, const char* key, const std::string& name, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) {
        throw SchemaError(fmt::format("{}:{}: missing mandatory key \"{}\"", name, line, key), key);
    }
    return it->get<std::string>();
}

json verdict_json(const OrderVerdict& v) {
    json obj;
    obj["first_label"] = v.first_label;
    obj["second_label"] = v.second_label;
    obj["judge_mode"] = to_string(v.mode);
    obj["scores"] = v.scores ? json::array({v.scores->first.to_double(), v.scores->second.to_double()}) : json(nullptr);
    obj["letter"] = v.letter ? json(std::string(1, *v.letter)) : json(nullptr);
    obj["outcome_for_subject"] = to_string(v.outcome_for_subject);
    obj["raw_reply"] = v.raw_reply;
    return obj;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<TestPrompt> load_testset(const std::filesystem::path& path) {
    std::vector<TestPrompt> out;
    std::map<std::string, std::size_t> seen;
    for_each_jsonl(path, [&](const json& rec, const std::string& name, std::size_t line) {
        TestPrompt p;
        p.text = require_string(rec, "text", name, line);
        if (p.text.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw ValidationError(fmt::format("{}:{}: prompt text is empty", name, line));
        }
        p.id = rec.contains("id") && rec["id"].is_string() ? rec["id"].get<std::string>()
               : rec.contains("id") && rec["id"].is_number_integer() ? std::to_string(rec["id"].get<long long>())
                                                                     : to_hex(fnv1a(p.text));
        if (rec.contains("category") && rec["category"].is_string()) p.category = rec["category"].get<std::string>();
        p.testset = rec.value("testset", "custom");
        if (!seen.emplace(p.id, line).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate prompt id {}", name, line, p.id));
        }
        out.push_back(std::move(p));
    });
    return out;
}

ResponseSet load_responses(const std::filesystem::path& path, std::optional<std::string> label) {
    std::map<std::string, ResponseSet> sets;
    for_each_jsonl(path, [&](const json& rec, const std::string& name, std::size_t line) {
        auto pid = rec.contains("prompt_id") && rec["prompt_id"].is_number_integer()
                       ? std::to_string(rec["prompt_id"].get<long long>())
                       : require_string(rec, "prompt_id", name, line);
        auto model = require_string(rec, "model_label", name, line);
        auto text = require_string(rec, "text", name, line);
        auto& set = sets[model];
        set.model_label = model;
        if (!set.by_prompt.emplace(pid, std::move(text)).second) {
            throw ValidationError(fmt::format("{}:{}: second response for ({}, {})", name, line, pid, model));
        }
    });
    if (label) {
        auto it = sets.find(*label);
        if (it == sets.end()) throw ConfigError(fmt::format("{} has no responses labelled {}", path.string(), *label));
        return it->second;
    }
    if (sets.size() > 1) {
        throw ConfigError(path.string() + " holds responses from several models; choose one label");
    }
    if (sets.empty()) return ResponseSet{path.stem().string(), {}};
    return sets.begin()->second;
}

std::string duels_jsonl(const std::vector<DuelRecord>& duels) {
    std::string out;
    for (const auto& d : duels) {
        json obj;
        obj["prompt_id"] = d.prompt_id;
        obj["category"] = d.category ? json(*d.category) : json(nullptr);
        obj["forward"] = verdict_json(d.forward);
        obj["reversed"] = verdict_json(d.reversed);
        obj["final"] = to_string(d.final);
        out += obj.dump(-1, ' ', false, json::error_handler_t::replace);
        out += '\n';
    }
    return out;
}

std::string arena_report_json(const ArenaReport& r, const std::vector<Exclusion>& exclusions) {
    json obj;
    obj["judge_mode"] = to_string(r.mode);
    obj["subject"] = r.subject;
    obj["baseline"] = r.baseline;
    obj["wins"] = r.wins;
    obj["ties"] = r.ties;
    obj["losses"] = r.losses;
    obj["n"] = r.n();
    obj["excluded"] = r.excluded;
    obj["winning_score"] = optional_number(r.winning_score);
    obj["capacity_ratio"] = optional_number(r.capacity_ratio);
    json cats = json::array();
    for (const auto& c : r.per_category) {
        json row;
        row["category"] = c.category;
        row["wins"] = c.wins;
        row["ties"] = c.ties;
        row["losses"] = c.losses;
        row["winning_score"] = optional_number(c.winning_score);
        row["capacity_ratio"] = optional_number(c.capacity_ratio);
        cats.push_back(std::move(row));
    }
    obj["per_category"] = std::move(cats);
    json excl = json::array();
    for (const auto& e : exclusions) excl.push_back({{"prompt_id", e.prompt_id}, {"reason", e.reason}});
    obj["exclusions"] = std::move(excl);
    return obj.dump(2) + "\n";
}

std::string arena_report_table(const ArenaReport& r) {
    auto fmt_opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("n/a"); };
    std::string out = fmt::format("{} vs {} ({} judge)\n", r.subject, r.baseline, to_string(r.mode));
    out += fmt::format("{:<20} {:>6} {:>6} {:>6} {:>9} {:>9}\n", "category", "win", "tie", "lose", "score", "capacity");
    out += fmt::format("{:<20} {:>6} {:>6} {:>6} {:>9} {:>9}\n", "all", r.wins, r.ties, r.losses,
                       fmt_opt(r.winning_score), fmt_opt(r.capacity_ratio));
    for (const auto& c : r.per_category) {
        out += fmt::format("{:<20} {:>6} {:>6} {:>6} {:>9} {:>9}\n", c.category, c.wins, c.ties, c.losses,
                           fmt_opt(c.winning_score), fmt_opt(c.capacity_ratio));
    }
    if (r.excluded) out += fmt::format("excluded duels: {}\n", r.excluded);
    return out;
}

}  // namespace curator
