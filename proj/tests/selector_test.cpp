#include <gtest/gtest.h>

#include <set>

#include <curator/errors.hpp>
#include <curator/selector.hpp>

#include "support/test_support.hpp"

namespace curator {
namespace {

using testing::fixture;

Dataset numbered(std::size_t n) {
    Dataset ds;
    ds.name = "numbered";
    for (std::size_t i = 0; i < n; ++i) ds.add(InstructionSample::make("task " + std::to_string(i), {}, "r"));
    return ds;
}

Rating rating(SampleId id, Decimal score) { return {id, score, "", "accuracy", "mock", "", false}; }

TEST(Filter, ThresholdIsInclusive) {
    auto ds = numbered(4);
    std::vector<Rating> r{rating(ds.samples[0].id, Decimal::from_tenths(45)),
                          rating(ds.samples[1].id, Decimal::from_tenths(40)),
                          rating(ds.samples[2].id, Decimal::from_int(5))};
    auto sel = filter_by_threshold(ds, r, kDefaultThreshold);
    ASSERT_EQ(sel.kept.size(), 2u);
    EXPECT_EQ(sel.kept.samples[0].id, ds.samples[0].id);
    EXPECT_EQ(sel.kept.samples[1].id, ds.samples[2].id);
    EXPECT_EQ(sel.report.total, 4u);
    EXPECT_EQ(sel.report.unrated, 1u);
    EXPECT_EQ(sel.report.dropped, 2u);
    EXPECT_DOUBLE_EQ(sel.report.filtering_ratio, 0.5);
}

TEST(Filter, ExtremeThresholds) {
    auto ds = numbered(10);
    std::vector<Rating> r;
    for (std::size_t i = 0; i < ds.size(); ++i) r.push_back(rating(ds.samples[i].id, Decimal::from_tenths(5 * static_cast<int>(i % 11))));
    EXPECT_EQ(filter_by_threshold(ds, r, Decimal::from_int(0)).kept.size(), 10u);
    EXPECT_EQ(filter_by_threshold(ds, r, Decimal::from_int(5)).kept.size(), 0u);
    EXPECT_THROW(filter_by_threshold(ds, r, *Decimal::parse("5.5")), ValidationError);
    EXPECT_THROW(filter_by_threshold(ds, r, *Decimal::parse("-0.5")), ValidationError);
}

TEST(Filter, EmptyDatasetHasZeroRatio) {
    auto sel = filter_by_threshold(Dataset{}, {}, kDefaultThreshold);
    EXPECT_TRUE(sel.kept.empty());
    EXPECT_EQ(sel.report.filtering_ratio, 0.0);
}

struct Scenario {
    Dataset ds;
    std::vector<Rating> ratings;
};

Scenario random_scenario(std::mt19937_64& rng) {
    Scenario sc;
    sc.ds = numbered(rng() % 200);
    for (const auto& s : sc.ds.samples) {
        if (rng() % 10 == 0) continue;  // unrated
        sc.ratings.push_back(rating(s.id, Decimal::from_tenths(5 * static_cast<int>(rng() % 11))));
    }
    std::shuffle(sc.ratings.begin(), sc.ratings.end(), rng);
    return sc;
}

TEST(FilterProperty, KeptSetShrinksAsThresholdRises) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        auto sc = random_scenario(rng);
        std::set<SampleId> previous;
        bool first = true;
        for (int tenths = 0; tenths <= 50; tenths += 5) {
            auto kept = filter_by_threshold(sc.ds, sc.ratings, Decimal::from_tenths(tenths)).kept;
            std::set<SampleId> ids;
            for (const auto& s : kept.samples) ids.insert(s.id);
            if (!first) {
                ASSERT_TRUE(std::includes(previous.begin(), previous.end(), ids.begin(), ids.end()));
            }
            previous = std::move(ids);
            first = false;
        }
    }
}

TEST(FilterProperty, MatchesBruteForce) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        auto sc = random_scenario(rng);
        auto tau = Decimal::from_tenths(5 * static_cast<int>(rng() % 11));
        std::vector<SampleId> expected;
        for (const auto& s : sc.ds.samples) {
            for (const auto& r : sc.ratings) {
                if (r.sample_id == s.id && r.score >= tau) expected.push_back(s.id);
            }
        }
        auto sel = filter_by_threshold(sc.ds, sc.ratings, tau);
        std::vector<SampleId> got;
        for (const auto& s : sel.kept.samples) got.push_back(s.id);
        ASSERT_EQ(got, expected);
        auto h = histogram(sc.ratings, Decimal::from_tenths(5));
        ASSERT_EQ(h.count_at_least(tau), expected.size());
        ASSERT_EQ(sel.report.kept + sel.report.dropped, sel.report.total);
    }
}

TEST(Histogram, AllBinsPresentAndOffGridCounted) {
    std::vector<Rating> r{rating(1, Decimal::from_int(5)), rating(2, Decimal::from_int(5)),
                          rating(3, Decimal::from_tenths(45)), rating(4, *Decimal::parse("4.25"))};
    auto h = histogram(r, Decimal::from_tenths(5));
    EXPECT_EQ(h.bins.size(), 11u);
    EXPECT_EQ(h.bins.at(Decimal::from_int(5)), 2u);
    EXPECT_EQ(h.bins.at(Decimal::from_int(0)), 0u);
    EXPECT_EQ(h.off_grid, 1u);
    EXPECT_EQ(h.total, 4u);
    auto csv = histogram_csv(h);
    EXPECT_TRUE(csv.starts_with("score,count\n0.0,0\n")) << csv;
    EXPECT_NE(csv.find("4.5,1\n5.0,2\noff-grid,1"), std::string::npos) << csv;
    EXPECT_EQ(histogram(r, Decimal::from_int(1)).bins.size(), 6u);
}

TEST(Keywords, OracleOnFiftySamples) {
    auto ds = load_dataset(fixture("alpaca_50.json"), DatasetFormat::AlpacaJson);
    ASSERT_EQ(ds.size(), 50u);
    std::vector<Rating> ratings;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ratings.push_back(rating(ds.samples[i].id, i % 3 == 0 ? Decimal::from_int(5) : Decimal::from_int(4)));
    }
    auto oracle = nlohmann::json::parse(read_file(fixture("keyword_oracle.json")));
    std::vector<KeywordGroup> groups;
    for (auto& [name, g] : oracle["groups"].items()) {
        groups.push_back({name, g["keywords"].get<std::vector<std::string>>()});
    }
    auto analysis = keyword_group_analysis(ds, ratings, kDefaultThreshold, groups);
    ASSERT_EQ(analysis.groups.size(), groups.size());
    for (const auto& g : analysis.groups) {
        const auto& want = oracle["groups"][g.name];
        EXPECT_EQ(g.total, want["total"].get<std::size_t>()) << g.name;
        EXPECT_EQ(g.kept, want["kept"].get<std::size_t>()) << g.name;
        if (g.total == 0) EXPECT_FALSE(g.filtering_ratio.has_value());
    }
    EXPECT_EQ(analysis.overall.total, oracle["overall"]["total"].get<std::size_t>());
    EXPECT_EQ(analysis.overall.kept, oracle["overall"]["kept"].get<std::size_t>());
}

TEST(Keywords, CodingGroupIsCaseSensitiveSubstring) {
    auto g = coding_keyword_group();
    EXPECT_EQ(g.keywords.size(), 8u);
    EXPECT_TRUE(matches_any(InstructionSample::make("Use JavaScript", {}, "x"), g.keywords));
    EXPECT_FALSE(matches_any(InstructionSample::make("Use JAVA", {}, "x"), g.keywords));
    EXPECT_TRUE(matches_any(InstructionSample::make("q", std::string("in c#"), "x"), g.keywords));
    EXPECT_THROW(keyword_group_analysis(Dataset{}, {}, kDefaultThreshold, {{"empty", {}}}), ValidationError);
}

TEST(Keywords, RatioIsShareDropped) {
    // 718 coding samples with 85 kept gives 633/718 dropped
    auto ds = numbered(1000);
    std::vector<Rating> ratings;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (i < 718) ds.samples[i].response = "python";
        ratings.push_back(rating(ds.samples[i].id, (i < 85 || i >= 718) ? Decimal::from_int(5) : Decimal::from_int(3)));
    }
    auto a = keyword_group_analysis(ds, ratings, kDefaultThreshold, {coding_keyword_group()});
    EXPECT_EQ(a.groups[0].total, 718u);
    EXPECT_EQ(a.groups[0].kept, 85u);
    EXPECT_NEAR(*a.groups[0].filtering_ratio * 100.0, 88.16, 0.005);
}

TEST(Sampling, SameSeedSameSubset) {
    auto ds = numbered(500);
    auto a = random_subset(ds, 50, 42);
    auto b = random_subset(ds, 50, 42);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, random_subset(ds, 50, 43));
    EXPECT_EQ(a.size(), 50u);
    EXPECT_THROW(random_subset(ds, 501, 1), SizeError);
    EXPECT_EQ(random_subset(ds, 500, 1), ds);
}

TEST(Sampling, SubsetPreservesOriginalOrder) {
    auto ds = numbered(300);
    auto sub = random_subset(ds, 100, 9);
    std::size_t pos = 0;
    for (const auto& s : sub.samples) {
        while (pos < ds.size() && ds.samples[pos].id != s.id) ++pos;
        ASSERT_LT(pos, ds.size());
    }
}

TEST(SamplingProperty, NestedSubsets) {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 30; ++trial) {
        auto ds = numbered(50 + rng() % 200);
        std::vector<std::size_t> sizes;
        for (int k = 0; k < 4; ++k) sizes.push_back(rng() % (ds.size() + 1));
        auto seed = rng();
        auto subsets = subsample_kept(ds, sizes, seed);
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            ASSERT_EQ(subsets[i].size(), sizes[i]);
            ASSERT_EQ(subsets[i], random_subset(ds, sizes[i], seed));
            std::set<SampleId> outer;
            for (const auto& s : subsets[i].samples) outer.insert(s.id);
            for (std::size_t j = 0; j < sizes.size(); ++j) {
                if (sizes[j] > sizes[i]) continue;
                for (const auto& s : subsets[j].samples) ASSERT_TRUE(outer.count(s.id));
            }
        }
    }
}

TEST(SamplingProperty, RoughlyUniform) {
    // each of 20 items is drawn with probability 5/20 per seed
    std::vector<int> hits(20, 0);
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        for (auto i : seeded_prefix(20, 5, seed)) ++hits[i];
    }
    for (int h : hits) EXPECT_NEAR(h, 1000, 120);
}

TEST(Report, JsonAndTable) {
    auto ds = numbered(3);
    std::vector<Rating> r{rating(ds.samples[0].id, Decimal::from_int(5))};
    auto sel = filter_by_threshold(ds, r, kDefaultThreshold);
    auto j = nlohmann::json::parse(report_json(sel.report));
    EXPECT_EQ(j["kept"], 1);
    EXPECT_EQ(j["total"], 3);
    EXPECT_EQ(j["unrated"], 2);
    EXPECT_FALSE(report_table(sel.report).empty());
}

}  // namespace
}  // namespace curator
