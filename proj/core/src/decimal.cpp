#include "curator/decimal.hpp"

#include <cctype>
#include <cmath>

namespace curator {

std::optional<Decimal> Decimal::parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        ++i;
    }
    std::int64_t whole = 0;
    std::size_t int_digits = 0;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        if (whole > 9'000'000'000'000) return std::nullopt;
        whole = whole * 10 + (text[i] - '0');
        ++int_digits;
    }
    std::int64_t frac = 0;
    std::size_t frac_digits = 0;
    bool round_up = false;
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            if (frac_digits < 6) {
                frac = frac * 10 + (text[i] - '0');
            } else if (frac_digits == 6) {
                round_up = text[i] >= '5';
            }
            ++frac_digits;
        }
        if (frac_digits == 0) return std::nullopt;
    }
    if (i != text.size() || int_digits == 0) return std::nullopt;
    if (whole > (INT64_MAX / kScale) - 1) return std::nullopt;
    for (std::size_t k = frac_digits; k < 6; ++k) frac *= 10;
    std::int64_t units = whole * kScale + frac + (round_up ? 1 : 0);
    return from_units(negative ? -units : units);
}

Decimal Decimal::from_double(double v) {
    return from_units(std::llround(v * static_cast<double>(kScale)));
}

std::string Decimal::to_string() const {
    std::int64_t u = units_;
    std::string out;
    if (u < 0) {
        out += '-';
        u = -u;
    }
    out += std::to_string(u / kScale);
    std::string frac = std::to_string(u % kScale);
    frac.insert(0, 6 - frac.size(), '0');
    while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
    out += '.';
    out += frac;
    return out;
}

}  // namespace curator
