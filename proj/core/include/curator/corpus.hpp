#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curator {

using SampleId = std::uint64_t;

/// One (instruction, input, response) training triple.
struct InstructionSample {
    SampleId id = 0;
    std::string instruction;
    std::optional<std::string> input;
    std::string response;
    std::optional<std::string> category;
    std::string source;

    /// Content hash of (instruction, input-or-empty, response).
    static SampleId content_id(std::string_view instruction,
                               std::string_view input,
                               std::string_view response);

    /// Builds a sample and assigns its content id. Throws ValidationError
    /// when the instruction is blank.
    static InstructionSample make(std::string instruction,
                                  std::optional<std::string> input,
                                  std::string response,
                                  std::optional<std::string> category = std::nullopt,
                                  std::string source = {});

    friend bool operator==(const InstructionSample&, const InstructionSample&) = default;
};

enum class DatasetFormat { AlpacaJson, DollyJsonl, CanonicalJsonl };

std::string_view to_string(DatasetFormat f);
/// Accepts "alpaca-json", "dolly-jsonl", "canonical-jsonl". Throws ConfigError.
DatasetFormat parse_dataset_format(std::string_view name);

struct Dataset {
    std::string name;
    DatasetFormat format = DatasetFormat::CanonicalJsonl;
    std::vector<InstructionSample> samples;
    /// Records dropped at load time because their id was already present.
    std::size_t duplicates_dropped = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    /// Appends unless a sample with the same id exists; returns false on a duplicate.
    bool add(InstructionSample sample);

    /// Equality on the sample sequence; name and format are labels.
    friend bool operator==(const Dataset& a, const Dataset& b) { return a.samples == b.samples; }
};

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);

/// Parses an in-memory document; `name` labels the result and error messages.
Dataset parse_dataset(std::string_view content, DatasetFormat format, std::string name);

/// Canonical JSONL line for one sample, no trailing newline.
std::string to_canonical_line(const InstructionSample& sample);

/// Writes canonical JSONL. Output is a pure function of the dataset.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Whole file as a string; throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename; throws IoError naming the path.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace curator
