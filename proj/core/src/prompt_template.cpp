#include "curator/prompt_template.hpp"

#include "curator/corpus.hpp"
#include "curator/errors.hpp"

namespace curator {

namespace {

constexpr std::string_view kSystemMarker = "--- system ---";
constexpr std::string_view kUserMarker = "--- user ---";

std::string trim_newlines(std::string s) {
    while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string system, std::string user)
    : system_(std::move(system)), user_(std::move(user)) {}

PromptTemplate PromptTemplate::parse(std::string_view text) {
    enum class Section { None, System, User };
    Section current = Section::None;
    std::string system, user, loose;
    bool saw_marker = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        std::string_view bare = line;
        if (!bare.empty() && bare.back() == '\r') bare.remove_suffix(1);
        if (bare == kSystemMarker) {
            current = Section::System;
            saw_marker = true;
        } else if (bare == kUserMarker) {
            current = Section::User;
            saw_marker = true;
        } else {
            std::string& dst = current == Section::System ? system
                             : current == Section::User   ? user
                                                          : loose;
            dst.append(line);
            if (end < text.size()) dst += '\n';
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    if (!saw_marker) return PromptTemplate({}, trim_newlines(std::string(text)));
    return PromptTemplate(trim_newlines(system), trim_newlines(user));
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

std::set<std::string> PromptTemplate::slots_present(const std::vector<std::string>& vocabulary) const {
    std::set<std::string> found;
    for (const auto& slot : vocabulary) {
        std::string marker = "{" + slot + "}";
        if (system_.find(marker) != std::string::npos || user_.find(marker) != std::string::npos) {
            found.insert(slot);
        }
    }
    return found;
}

void PromptTemplate::require_slots(const std::vector<std::string>& slots) const {
    auto present = slots_present(slots);
    for (const auto& slot : slots) {
        if (!present.contains(slot)) {
            throw TemplateError("prompt template is missing slot {" + slot + "}", slot);
        }
    }
}

PromptTemplate::Rendered PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    return {substitute_slots(system_, values), substitute_slots(user_, values)};
}

std::string substitute_slots(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            std::size_t close = text.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(text.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

}  // namespace curator
