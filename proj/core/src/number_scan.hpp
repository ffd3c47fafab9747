#pragma once

#include <cctype>
#include <cstddef>
#include <string_view>

#include "curator/decimal.hpp"

namespace curator::detail {

/// Calls `visit(value, end_offset)` for each free-standing decimal number in
/// reading order until it returns true. Digits glued to letters ("GPT-4",
/// "5th") and signed numbers are not numbers here.
template <typename Visitor>
void scan_numbers(std::string_view text, Visitor&& visit) {
    auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    auto word = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_'; };
    std::size_t i = 0;
    while (i < text.size()) {
        if (!digit(text[i])) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && digit(text[i])) ++i;
        if (i + 1 < text.size() && text[i] == '.' && digit(text[i + 1])) {
            ++i;
            while (i < text.size() && digit(text[i])) ++i;
        }
        bool glued = (begin > 0 && (word(text[begin - 1]) || text[begin - 1] == '-')) ||
                     (i < text.size() && word(text[i]));
        if (glued) continue;
        auto value = Decimal::parse(text.substr(begin, i - begin));
        if (value && visit(*value, i)) return;
    }
}

}  // namespace curator::detail
