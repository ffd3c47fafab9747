#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <curator/corpus.hpp>
#include <curator/errors.hpp>

#include "support/test_support.hpp"

namespace curator {
namespace {

using testing::TempDir;

TEST(Corpus, AlpacaRecordWithEmptyInput) {
    auto ds = parse_dataset(
        R"([{"instruction":"Translate the phrase \"Bonne chance\" into English","input":"","output":"Good luck."}])",
        DatasetFormat::AlpacaJson, "alpaca.json");
    ASSERT_EQ(ds.size(), 1u);
    const auto& s = ds.samples[0];
    EXPECT_EQ(s.instruction, "Translate the phrase \"Bonne chance\" into English");
    EXPECT_FALSE(s.input.has_value());
    EXPECT_EQ(s.response, "Good luck.");
    EXPECT_EQ(s.source, "alpaca.json");
    EXPECT_EQ(s.id, InstructionSample::content_id(s.instruction, "", "Good luck."));
}

TEST(Corpus, EmptyCanonicalFile) {
    TempDir dir;
    write_file(dir / "empty.jsonl", "");
    auto ds = load_dataset(dir / "empty.jsonl", DatasetFormat::CanonicalJsonl);
    EXPECT_TRUE(ds.empty());
}

TEST(Corpus, DollyDuplicateIsDropped) {
    const std::string rec1 =
        R"({"instruction":"What is Jenkins?","context":"","response":"An automation server.","category":"open_qa"})";
    const std::string rec2 =
        R"({"instruction":"Is Seattle nice?","context":"Seattle is a seaport city.","response":"Yes.","category":"closed_qa"})";
    auto ds = parse_dataset(rec1 + "\n" + rec2 + "\n" + rec1 + "\n", DatasetFormat::DollyJsonl, "dolly.jsonl");
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.duplicates_dropped, 1u);
    EXPECT_EQ(ds.samples[1].input, "Seattle is a seaport city.");
    EXPECT_EQ(ds.samples[1].category, "closed_qa");
    EXPECT_FALSE(ds.samples[0].input.has_value());
}

TEST(Corpus, MalformedJsonlReportsLine) {
    const std::string text = "{\"instruction\":\"a\",\"response\":\"b\"}\n{not json}\n";
    try {
        parse_dataset(text, DatasetFormat::CanonicalJsonl, "bad.jsonl");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos);
    }
}

TEST(Corpus, MalformedAlpacaReportsLine) {
    try {
        parse_dataset("[\n{\"instruction\": \"a\",\n\"output\": }\n]", DatasetFormat::AlpacaJson, "a.json");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Corpus, MissingKeyNamesTheKey) {
    try {
        parse_dataset(R"([{"instruction":"Say hi","input":""}])", DatasetFormat::AlpacaJson, "a.json");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.key(), "output");
    }
    try {
        parse_dataset(R"({"instruction":"Say hi","context":""})", DatasetFormat::DollyJsonl, "d.jsonl");
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.key(), "response");
    }
}

TEST(Corpus, BlankInstructionRejectedEmptyResponseAllowed) {
    EXPECT_THROW(parse_dataset(R"([{"instruction":"  \n","input":"","output":"x"}])", DatasetFormat::AlpacaJson, "a"),
                 ValidationError);
    auto ds = parse_dataset(R"([{"instruction":"Design a company logo.","input":"","output":"<nooutput>"},
                                {"instruction":"Design a poster.","input":"","output":""}])",
                            DatasetFormat::AlpacaJson, "a");
    ASSERT_EQ(ds.size(), 2u);
    EXPECT_EQ(ds.samples[0].response, "<nooutput>");
    EXPECT_EQ(ds.samples[1].response, "");
}

TEST(Corpus, CanonicalLineKeyOrder) {
    auto s = InstructionSample::make("Q", std::nullopt, "A", "cat", "src");
    auto line = to_canonical_line(s);
    auto pos = [&](const char* k) { return line.find(std::string("\"") + k + "\""); };
    EXPECT_LT(pos("id"), pos("instruction"));
    EXPECT_LT(pos("instruction"), pos("input"));
    EXPECT_LT(pos("input"), pos("response"));
    EXPECT_LT(pos("response"), pos("category"));
    EXPECT_LT(pos("category"), pos("source"));
    EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(Corpus, EmptyDatasetWritesEmptyFile) {
    TempDir dir;
    write_dataset(Dataset{}, dir / "out.jsonl");
    EXPECT_EQ(read_file(dir / "out.jsonl"), "");
}

TEST(Corpus, LineCountMatchesSampleCount) {
    Dataset ds;
    for (int i = 0; i < 9229; ++i) ds.samples.push_back(InstructionSample::make("q" + std::to_string(i), {}, "a"));
    TempDir dir;
    write_dataset(ds, dir / "kept.jsonl");
    auto text = read_file(dir / "kept.jsonl");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9229);
}

TEST(Corpus, WriteFailsWithPathContext) {
    try {
        write_dataset(Dataset{}, "/nonexistent-dir/x/out.jsonl");
        FAIL();
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x/out.jsonl"), std::string::npos);
    }
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t n) {
    Dataset ds;
    ds.name = "generated";
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n; ++i) {
        auto instr = "task " + std::to_string(i) + " " + testing::random_text(rng, 12);
        std::optional<std::string> input;
        if (coin(rng)) input = testing::random_text(rng, 10);
        std::optional<std::string> category;
        if (coin(rng)) category = testing::random_text(rng, 3);
        ds.add(InstructionSample::make(instr, input, testing::random_text(rng, 30), category, "gen"));
    }
    return ds;
}

TEST(CorpusProperty, CanonicalRoundTrip) {
    std::mt19937_64 rng(7);
    TempDir dir;
    for (int trial = 0; trial < 50; ++trial) {
        auto ds = random_dataset(rng, trial % 7 * 5);
        auto path = dir / "rt.jsonl";
        write_dataset(ds, path);
        auto first = read_file(path);
        auto back = load_dataset(path, DatasetFormat::CanonicalJsonl);
        ASSERT_EQ(back, ds) << "trial " << trial;
        write_dataset(back, path);
        ASSERT_EQ(read_file(path), first) << "repeated write not byte-identical";
    }
}

TEST(CorpusProperty, IdsSurvivePermutation) {
    std::mt19937_64 rng(11);
    auto ds = random_dataset(rng, 40);
    std::string forward, shuffled;
    std::vector<std::string> lines;
    for (const auto& s : ds.samples) lines.push_back(to_canonical_line(s));
    std::shuffle(lines.begin(), lines.end(), rng);
    for (const auto& l : lines) shuffled += l + "\n";
    auto back = parse_dataset(shuffled, DatasetFormat::CanonicalJsonl, "shuffled");
    ASSERT_EQ(back.size(), ds.size());
    for (const auto& s : back.samples) {
        auto it = std::find_if(ds.samples.begin(), ds.samples.end(),
                               [&](const auto& o) { return o.instruction == s.instruction; });
        ASSERT_NE(it, ds.samples.end());
        EXPECT_EQ(it->id, s.id);
    }
}

TEST(CorpusProperty, DuplicationIsIdempotent) {
    std::mt19937_64 rng(13);
    auto ds = random_dataset(rng, 30);
    std::string once, twice;
    for (const auto& s : ds.samples) once += to_canonical_line(s) + "\n";
    for (const auto& s : ds.samples) twice += to_canonical_line(s) + "\n" + to_canonical_line(s) + "\n";
    auto a = parse_dataset(once, DatasetFormat::CanonicalJsonl, "a");
    auto b = parse_dataset(twice, DatasetFormat::CanonicalJsonl, "b");
    EXPECT_EQ(a, b);
    EXPECT_EQ(b.duplicates_dropped, ds.size());
}

TEST(Corpus, FormatNames) {
    EXPECT_EQ(parse_dataset_format("dolly-jsonl"), DatasetFormat::DollyJsonl);
    EXPECT_EQ(to_string(DatasetFormat::AlpacaJson), "alpaca-json");
    EXPECT_THROW(parse_dataset_format("csv"), ConfigError);
}

}  // namespace
}  // namespace curator
