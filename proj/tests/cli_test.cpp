#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <curator/corpus.hpp>

#include "commands.hpp"
#include "support/test_support.hpp"

namespace curator {
namespace {

using testing::TempDir;
using testing::fixture;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "curator");
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

TEST(Cli, CostPrintsPublishedFigure) {
    auto r = run_cli({"cost", "--gpus", "4", "--minutes", "14"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("$4.78\n")) << r.out;
}

TEST(Cli, NoSubcommandIsUsageError) {
    EXPECT_EQ(run_cli({}).code, 1);
    EXPECT_EQ(run_cli({"bogus"}).code, 1);
    EXPECT_EQ(run_cli({"cost", "--gpus", "x"}).code, 1);
}

TEST(Cli, SampleWithoutSeedIsUsageError) {
    TempDir dir;
    auto r = run_cli({"sample", "--dataset", fixture("alpaca_50.json").string(), "--format", "alpaca-json", "--n",
                      "5", "--out", dir.path().string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("seed"), std::string::npos);
}

TEST(Cli, ConfigFileUnknownKeyRejected) {
    TempDir dir;
    write_file(dir / "c.json", R"({"gpus": 4, "minutes": 14, "colour": "red"})");
    auto r = run_cli({"cost", "--config", (dir / "c.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfigFile) {
    TempDir dir;
    write_file(dir / "c.json", R"({"gpus": 8, "minutes": 60})");
    auto r = run_cli({"cost", "--config", (dir / "c.json").string(), "--minutes", "330"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.starts_with("$225.28")) << r.out;
}

TEST(Cli, RateFilterUsesDefaultThreshold) {
    TempDir dir;
    auto ds = fixture("alpaca_50.json").string();
    auto out = dir.path().string();
    auto rate = run_cli({"rate", "--dataset", ds, "--format", "alpaca-json", "--out", out});
    ASSERT_EQ(rate.code, 0) << rate.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "ratings.jsonl"));
    auto filter = run_cli({"filter", "--dataset", ds, "--format", "alpaca-json", "--ratings",
                           (dir / "ratings.jsonl").string(), "--out", out, "--coding-group"});
    ASSERT_EQ(filter.code, 0) << filter.err;
    auto report = nlohmann::json::parse(read_file(dir / "selection_report.json"));
    EXPECT_EQ(report["threshold"], 4.5);
    auto kept = load_dataset(dir / "filtered.jsonl", DatasetFormat::CanonicalJsonl);
    EXPECT_EQ(kept.size(), report["kept"].get<std::size_t>());
    EXPECT_NE(filter.out.find("wrote "), std::string::npos);
}

TEST(Cli, RateWithMissingApiKeyFails) {
    unsetenv("CURATOR_CLI_TEST_KEY");
    TempDir dir;
    auto r = run_cli({"rate", "--dataset", fixture("alpaca_50.json").string(), "--format", "alpaca-json",
                      "--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--api-key-env",
                      "CURATOR_CLI_TEST_KEY", "--out", dir.path().string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("CURATOR_CLI_TEST_KEY"), std::string::npos);
}

TEST(Cli, RerunIsByteIdentical) {
    TempDir a, b;
    auto ds = fixture("alpaca_50.json").string();
    for (auto* dir : {&a, &b}) {
        auto out = dir->path().string();
        ASSERT_EQ(run_cli({"rate", "--dataset", ds, "--format", "alpaca-json", "--out", out}).code, 0);
        ASSERT_EQ(run_cli({"sample", "--dataset", ds, "--format", "alpaca-json", "--out", out, "--seed", "7",
                           "--sizes", "10,20"}).code,
                  0);
    }
    for (const char* f : {"ratings.jsonl", "subset_10.jsonl", "subset_20.jsonl"}) {
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
    }
}

TEST(Cli, ArenaReportMatchesGolden) {
    TempDir dir;
    auto r = run_cli({"arena", "--testset", fixture("arena/testset.jsonl").string(), "--subject",
                      fixture("arena/subject.jsonl").string(), "--baseline", fixture("arena/baseline.jsonl").string(),
                      "--out", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto got = nlohmann::json::parse(read_file(dir / "arena_report.json"));
    auto want = nlohmann::json::parse(read_file(fixture("arena/golden_report.json")));
    for (const char* key : {"judge_mode", "subject", "baseline", "wins", "ties", "losses", "n", "excluded"}) {
        EXPECT_EQ(got[key], want[key]) << key;
    }
    EXPECT_NEAR(got["winning_score"].get<double>(), want["winning_score"].get<double>(), 1e-9);
    EXPECT_NEAR(got["capacity_ratio"].get<double>(), want["capacity_ratio"].get<double>(), 1e-9);
    EXPECT_EQ(got["per_category"].size(), want["per_category"].size());
}

}  // namespace
}  // namespace curator
