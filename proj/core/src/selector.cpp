#include "curator/selector.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "curator/errors.hpp"

namespace curator {

using json = nlohmann::ordered_json;

namespace {

void check_threshold(Decimal tau) {
    if (tau < kScaleMin || tau > kScaleMax) {
        throw ValidationError("threshold " + tau.to_string() + " outside [0, 5]");
    }
}

std::unordered_map<SampleId, Decimal> score_index(const Dataset& dataset, const std::vector<Rating>& ratings) {
    std::unordered_map<SampleId, Decimal> scores;
    scores.reserve(ratings.size());
    std::size_t duplicates = 0;
    for (const auto& r : ratings) {
        if (!scores.insert_or_assign(r.sample_id, r.score).second) ++duplicates;
    }
    if (duplicates) spdlog::warn("{} duplicate rating(s); the last one per sample is used", duplicates);
    std::size_t present = 0;
    for (const auto& s : dataset.samples) present += scores.contains(s.id) ? 1 : 0;
    if (present < scores.size()) {
        spdlog::warn("{} rating(s) reference samples not in {}", scores.size() - present, dataset.name);
    }
    return scores;
}

std::optional<double> ratio(std::size_t total, std::size_t kept) {
    if (total == 0) return std::nullopt;
    return static_cast<double>(total - kept) / static_cast<double>(total);
}

json group_json(const GroupReport& g) {
    json obj;
    obj["name"] = g.name;
    obj["total"] = g.total;
    obj["kept"] = g.kept;
    obj["filtering_ratio"] = g.filtering_ratio ? json(*g.filtering_ratio) : json(nullptr);
    return obj;
}

std::string percent(std::optional<double> r) {
    return r ? fmt::format("{:.2f}%", *r * 100.0) : std::string("n/a");
}

// Unbiased draw in [0, bound) from the raw 64-bit engine output, so results
// do not depend on the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

Dataset pick(const Dataset& source, std::vector<std::size_t> indices, std::string name) {
    std::sort(indices.begin(), indices.end());
    Dataset out;
    out.name = std::move(name);
    out.format = source.format;
    out.samples.reserve(indices.size());
    for (auto i : indices) out.samples.push_back(source.samples[i]);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t ScoreHistogram::count_at_least(Decimal tau) const {
    std::size_t n = 0;
    for (auto it = bins.lower_bound(tau); it != bins.end(); ++it) n += it->second;
    return n;
}

ScoreHistogram histogram(const std::vector<Rating>& ratings, Decimal granularity) {
    if (granularity != Decimal::from_tenths(5) && granularity != Decimal::from_int(1)) {
        throw ValidationError("histogram granularity must be 0.5 or 1.0");
    }
    ScoreHistogram h;
    h.granularity = granularity;
    for (Decimal s = kScaleMin; s <= kScaleMax; s = s + granularity) h.bins[s] = 0;
    for (const auto& r : ratings) {
        ++h.total;
        auto it = h.bins.find(r.score);
        if (it == h.bins.end()) {
            ++h.off_grid;
        } else {
            ++it->second;
        }
    }
    return h;
}

std::string histogram_csv(const ScoreHistogram& h) {
    std::string out = "score,count\n";
    for (const auto& [score, count] : h.bins) out += fmt::format("{},{}\n", score.to_string(), count);
    out += fmt::format("off-grid,{}\n", h.off_grid);
    return out;
}

std::string histogram_chart(const ScoreHistogram& h, std::size_t width) {
    std::size_t peak = h.off_grid;
    for (const auto& [_, count] : h.bins) peak = std::max(peak, count);
    auto bar = [&](std::size_t count) {
        std::size_t len = peak == 0 ? 0 : (count * width + peak - 1) / peak;
        return std::string(len, '#');
    };
    std::string out = fmt::format("Score histogram (granularity {}, total {})\n", h.granularity.to_string(), h.total);
    for (auto it = h.bins.rbegin(); it != h.bins.rend(); ++it) {
        out += fmt::format("{:>8} | {:>7} {}\n", it->first.to_string(), it->second, bar(it->second));
    }
    out += fmt::format("{:>8} | {:>7} {}\n", "off-grid", h.off_grid, bar(h.off_grid));
    return out;
}

KeywordGroup coding_keyword_group() {
    return {"coding", {"Java", "java", "C++", "c++", "C#", "c#", "Python", "python"}};
}

bool matches_any(const InstructionSample& sample, const std::vector<std::string>& keywords) {
    // Joined with a newline so a keyword cannot straddle two fields.
    std::string text = sample.instruction;
    text += '\n';
    text += sample.input.value_or("");
    text += '\n';
    text += sample.response;
    return std::any_of(keywords.begin(), keywords.end(),
                       [&](const std::string& k) { return text.find(k) != std::string::npos; });
}

Selection filter_by_threshold(const Dataset& dataset, const std::vector<Rating>& ratings, Decimal tau) {
    check_threshold(tau);
    auto scores = score_index(dataset, ratings);
    Selection sel;
    sel.kept.name = dataset.name;
    sel.kept.format = dataset.format;
    auto& rep = sel.report;
    rep.threshold = tau;
    rep.total = dataset.size();
    for (const auto& s : dataset.samples) {
        auto it = scores.find(s.id);
        if (it == scores.end()) {
            ++rep.unrated;
        } else if (it->second >= tau) {
            sel.kept.samples.push_back(s);
        }
    }
    if (rep.unrated) spdlog::warn("{} sample(s) have no rating and were dropped", rep.unrated);
    rep.kept = sel.kept.size();
    rep.dropped = rep.total - rep.kept;
    rep.filtering_ratio = ratio(rep.total, rep.kept).value_or(0.0);
    return sel;
}

KeywordAnalysis keyword_group_analysis(const Dataset& dataset, const std::vector<Rating>& ratings, Decimal tau,
                                       const std::vector<KeywordGroup>& groups) {
    check_threshold(tau);
    for (const auto& g : groups) {
        if (g.keywords.empty()) throw ValidationError("keyword group \"" + g.name + "\" has no keywords");
    }
    auto scores = score_index(dataset, ratings);
    KeywordAnalysis out;
    out.overall.name = "overall";
    out.groups.resize(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) out.groups[i].name = groups[i].name;

    for (const auto& s : dataset.samples) {
        auto it = scores.find(s.id);
        bool kept = it != scores.end() && it->second >= tau;
        ++out.overall.total;
        out.overall.kept += kept ? 1 : 0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (!matches_any(s, groups[i].keywords)) continue;
            ++out.groups[i].total;
            out.groups[i].kept += kept ? 1 : 0;
        }
    }
    out.overall.filtering_ratio = ratio(out.overall.total, out.overall.kept);
    for (auto& g : out.groups) g.filtering_ratio = ratio(g.total, g.kept);
    return out;
}

std::string report_json(const SelectionReport& r) {
    json obj;
    obj["threshold"] = r.threshold.to_double();
    obj["total"] = r.total;
    obj["kept"] = r.kept;
    obj["dropped"] = r.dropped;
    obj["unrated"] = r.unrated;
    obj["filtering_ratio"] = r.filtering_ratio;
    json groups = json::array();
    for (const auto& g : r.groups) groups.push_back(group_json(g));
    obj["keyword_groups"] = std::move(groups);
    return obj.dump(2) + "\n";
}

std::string report_table(const SelectionReport& r) {
    std::string out = fmt::format("Selection at threshold {} (score >= threshold is kept)\n", r.threshold.to_string());
    out += fmt::format("{:<16} {:>9} {:>9} {:>10}\n", "group", "total", "kept", "filtered");
    out += fmt::format("{:<16} {:>9} {:>9} {:>10}\n", "all", r.total, r.kept,
                       percent(ratio(r.total, r.kept)));
    for (const auto& g : r.groups) {
        out += fmt::format("{:<16} {:>9} {:>9} {:>10}\n", g.name, g.total, g.kept, percent(g.filtering_ratio));
    }
    if (r.unrated) out += fmt::format("unrated samples dropped: {}\n", r.unrated);
    return out;
}

std::vector<std::size_t> seeded_prefix(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count > n) throw SizeError(fmt::format("cannot draw {} samples from {}", count, n));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        auto j = i + static_cast<std::size_t>(bounded(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

Dataset random_subset(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
    return pick(dataset, seeded_prefix(dataset.size(), n, seed),
                fmt::format("{}-random{}", dataset.name, n));
}

std::vector<Dataset> subsample_kept(const Dataset& kept, const std::vector<std::size_t>& sizes,
                                    std::uint64_t seed) {
    std::size_t largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
    auto prefix = seeded_prefix(kept.size(), largest, seed);
    std::vector<Dataset> out;
    out.reserve(sizes.size());
    for (auto k : sizes) {
        out.push_back(pick(kept, std::vector<std::size_t>(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(k)),
                           fmt::format("{}-sub{}", kept.name, k)));
    }
    return out;
}

}  // namespace curator
