#pragma once

#include <cstdint>
#include <string>

#include "curator/decimal.hpp"

namespace curator {

/// Single-node training cost model: a node's hourly price is split evenly
/// across its GPUs.
struct CostSpec {
    int gpus_used = 8;
    Decimal wall_time_minutes;
    int gpus_per_node = 8;
    Decimal node_price_per_hour = Decimal::from_units(40'960'000);  // $40.96

    /// Throws ValidationError.
    void validate() const;
};

/// Whole cents, half-up rounded after exact arithmetic.
struct Cents {
    std::int64_t value = 0;
    std::string to_string() const;  // "$4.78"
    friend auto operator<=>(const Cents&, const Cents&) = default;
};

/// (minutes / 60) * (gpus_used / gpus_per_node) * node_price_per_hour.
Cents estimate_cost(const CostSpec& spec);

/// Unrounded estimate, for linearity checks.
double estimate_cost_exact(const CostSpec& spec);

/// Human-readable formula line for the CLI.
std::string describe_cost(const CostSpec& spec);

}  // namespace curator
