#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace curator {

/// Exact fixed-point decimal with six fractional digits.
///
/// Scores, thresholds, and prices are compared as integers so that a
/// reply of "4.5" is kept by a threshold of 4.5 without float fuzz.
class Decimal {
public:
    static constexpr std::int64_t kScale = 1'000'000;

    constexpr Decimal() = default;

    static constexpr Decimal from_units(std::int64_t units) {
        Decimal d;
        d.units_ = units;
        return d;
    }
    static constexpr Decimal from_int(std::int64_t v) { return from_units(v * kScale); }
    /// Tenths, e.g. from_tenths(45) == 4.5.
    static constexpr Decimal from_tenths(std::int64_t t) { return from_units(t * (kScale / 10)); }

    /// Parses "[-]digits[.digits]". Digits past the sixth fractional place
    /// are rounded half-up. Returns nullopt on anything else.
    static std::optional<Decimal> parse(std::string_view text);
    /// Nearest representable value.
    static Decimal from_double(double v);

    constexpr std::int64_t units() const { return units_; }
    double to_double() const { return static_cast<double>(units_) / kScale; }

    /// Shortest form with at least one fractional digit: "4.5", "5.0", "0.8225".
    std::string to_string() const;

    constexpr bool is_multiple_of(Decimal step) const {
        return step.units_ != 0 && units_ % step.units_ == 0;
    }

    friend constexpr auto operator<=>(Decimal, Decimal) = default;
    friend constexpr Decimal operator+(Decimal a, Decimal b) { return from_units(a.units_ + b.units_); }
    friend constexpr Decimal operator-(Decimal a, Decimal b) { return from_units(a.units_ - b.units_); }
    friend constexpr Decimal operator*(Decimal a, std::int64_t k) { return from_units(a.units_ * k); }

private:
    std::int64_t units_ = 0;
};

}  // namespace curator
