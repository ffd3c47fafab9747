#include "curator/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "curator/errors.hpp"
#include "curator/hash.hpp"

namespace curator {

using json = nlohmann::ordered_json;

namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string where(const std::string& name, std::size_t line) {
    return line ? name + ":" + std::to_string(line) : name;
}

const json& require_key(const json& obj, const char* key, const std::string& name, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(where(name, line) + ": missing mandatory key \"" + key + "\"", key);
    }
    if (!it->is_string()) {
        throw SchemaError(where(name, line) + ": key \"" + key + "\" must be a string", key);
    }
    return *it;
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

std::optional<std::string> non_empty(std::optional<std::string> s) {
    if (s && s->empty()) return std::nullopt;
    return s;
}

InstructionSample sample_from(const json& obj, DatasetFormat format, const std::string& name,
                              std::size_t line) {
    if (!obj.is_object()) {
        throw ParseError(where(name, line) + ": record is not a JSON object", line);
    }
    InstructionSample s;
    s.source = name;
    switch (format) {
    case DatasetFormat::AlpacaJson:
        s.instruction = require_key(obj, "instruction", name, line).get<std::string>();
        s.input = non_empty(optional_string(obj, "input"));
        s.response = require_key(obj, "output", name, line).get<std::string>();
        break;
    case DatasetFormat::DollyJsonl:
        s.instruction = require_key(obj, "instruction", name, line).get<std::string>();
        s.input = non_empty(optional_string(obj, "context"));
        s.response = require_key(obj, "response", name, line).get<std::string>();
        s.category = optional_string(obj, "category");
        break;
    case DatasetFormat::CanonicalJsonl: {
        s.instruction = require_key(obj, "instruction", name, line).get<std::string>();
        s.input = optional_string(obj, "input");
        s.response = require_key(obj, "response", name, line).get<std::string>();
        s.category = optional_string(obj, "category");
        if (auto src = optional_string(obj, "source")) s.source = *src;
        break;
    }
    }
    if (is_blank(s.instruction)) {
        throw ValidationError(where(name, line) + ": instruction is empty");
    }
    s.id = InstructionSample::content_id(s.instruction, s.input.value_or(""), s.response);
    if (format == DatasetFormat::CanonicalJsonl) {
        auto it = obj.find("id");
        if (it != obj.end() && it->is_string()) {
            auto stored = from_hex(it->get<std::string>());
            if (!stored || *stored != s.id) {
                spdlog::warn("{}: stored id {} does not match content; using content id {}",
                             where(name, line), it->get<std::string>(), to_hex(s.id));
            }
        }
    }
    return s;
}

}  // namespace

SampleId InstructionSample::content_id(std::string_view instruction, std::string_view input,
                                       std::string_view response) {
    return fnv1a_fields(instruction, input, response);
}

InstructionSample InstructionSample::make(std::string instruction, std::optional<std::string> input,
                                          std::string response, std::optional<std::string> category,
                                          std::string source) {
    if (is_blank(instruction)) throw ValidationError("instruction is empty");
    InstructionSample s;
    s.id = content_id(instruction, input.value_or(""), response);
    s.instruction = std::move(instruction);
    s.input = std::move(input);
    s.response = std::move(response);
    s.category = std::move(category);
    s.source = std::move(source);
    return s;
}

std::string_view to_string(DatasetFormat f) {
    switch (f) {
    case DatasetFormat::AlpacaJson: return "alpaca-json";
    case DatasetFormat::DollyJsonl: return "dolly-jsonl";
    case DatasetFormat::CanonicalJsonl: return "canonical-jsonl";
    }
    return "?";
}

DatasetFormat parse_dataset_format(std::string_view name) {
    if (name == "alpaca-json" || name == "alpaca") return DatasetFormat::AlpacaJson;
    if (name == "dolly-jsonl" || name == "dolly") return DatasetFormat::DollyJsonl;
    if (name == "canonical-jsonl" || name == "canonical") return DatasetFormat::CanonicalJsonl;
    throw ConfigError("unknown dataset format: " + std::string(name));
}

bool Dataset::add(InstructionSample sample) {
    for (const auto& s : samples) {
        if (s.id == sample.id) return false;
    }
    samples.push_back(std::move(sample));
    return true;
}

Dataset parse_dataset(std::string_view content, DatasetFormat format, std::string name) {
    Dataset ds;
    ds.name = name;
    ds.format = format;
    std::unordered_set<SampleId> seen;
    auto push = [&](InstructionSample s) {
        if (seen.insert(s.id).second) {
            ds.samples.push_back(std::move(s));
        } else {
            ++ds.duplicates_dropped;
        }
    };

    if (format == DatasetFormat::AlpacaJson) {
        if (is_blank(content)) return ds;
        json doc;
        try {
            doc = json::parse(content);
        } catch (const json::parse_error& e) {
            // Byte offset to line number.
            std::size_t line = 1;
            for (std::size_t i = 0; i < e.byte && i < content.size(); ++i) {
                if (content[i] == '\n') ++line;
            }
            throw ParseError(where(name, line) + ": malformed JSON: " + e.what(), line);
        }
        if (!doc.is_array()) throw ParseError(name + ": expected a JSON array of records", 1);
        std::size_t index = 0;
        for (const auto& rec : doc) {
            ++index;
            try {
                push(sample_from(rec, format, name, 0));
            } catch (const SchemaError& e) {
                throw SchemaError(name + ": record " + std::to_string(index) + ": " + e.what(), e.key());
            }
        }
    } else {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos < content.size()) {
            std::size_t end = content.find('\n', pos);
            if (end == std::string_view::npos) end = content.size();
            std::string_view line = content.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (is_blank(line)) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError(where(name, line_no) + ": malformed JSON: " + e.what(), line_no);
            }
            push(sample_from(rec, format, name, line_no));
        }
    }
    if (ds.duplicates_dropped > 0) {
        spdlog::warn("{}: dropped {} duplicate record(s)", name, ds.duplicates_dropped);
    }
    spdlog::debug("{}: loaded {} samples ({})", name, ds.samples.size(), to_string(format));
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    return parse_dataset(read_file(path), format, path.filename().string());
}

std::string to_canonical_line(const InstructionSample& s) {
    json obj;
    obj["id"] = to_hex(s.id);
    obj["instruction"] = s.instruction;
    obj["input"] = s.input ? json(*s.input) : json(nullptr);
    obj["response"] = s.response;
    obj["category"] = s.category ? json(*s.category) : json(nullptr);
    obj["source"] = s.source;
    return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::string out;
    for (const auto& s : dataset.samples) {
        out += to_canonical_line(s);
        out += '\n';
    }
    write_file(path, out);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace curator
