#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace curator {

/// A system/user prompt pair with `{slot}` markers.
///
/// Template files may split the two messages with lines reading exactly
/// `--- system ---` and `--- user ---`. Without those lines the whole file
/// is the user message and the system message is empty.
class PromptTemplate {
public:
    PromptTemplate() = default;
    PromptTemplate(std::string system, std::string user);

    static PromptTemplate parse(std::string_view text);
    static PromptTemplate load(const std::filesystem::path& path);

    const std::string& system() const { return system_; }
    const std::string& user() const { return user_; }

    /// Throws TemplateError naming the first required slot that appears in
    /// neither message.
    void require_slots(const std::vector<std::string>& slots) const;

    /// Slot names (from the given vocabulary) present in either message.
    std::set<std::string> slots_present(const std::vector<std::string>& vocabulary) const;

    struct Rendered {
        std::string system;
        std::string user;
    };

    /// Single left-to-right pass. `{name}` is replaced when `name` is a key
    /// of `values`; other braces are copied through. Substituted text is
    /// never re-scanned.
    Rendered render(const std::map<std::string, std::string>& values) const;

private:
    std::string system_;
    std::string user_;
};

/// Substitutes `{slot}` markers in one string. Same rules as PromptTemplate::render.
std::string substitute_slots(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace curator
