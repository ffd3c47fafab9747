#include "curator/costing.hpp"

#include <fmt/format.h>

#include "curator/errors.hpp"

__extension__ typedef __int128 i128;

namespace curator {

void CostSpec::validate() const {
    if (gpus_used < 1) throw ValidationError("gpus_used must be >= 1");
    if (gpus_per_node < 1) throw ValidationError("gpus_per_node must be >= 1");
    if (gpus_used > gpus_per_node) {
        throw ValidationError(fmt::format("gpus_used ({}) exceeds gpus_per_node ({}); only single-node runs are modelled",
                                          gpus_used, gpus_per_node));
    }
    if (wall_time_minutes.units() <= 0) throw ValidationError("wall time must be positive");
    if (node_price_per_hour.units() < 0) throw ValidationError("node price must be non-negative");
}

Cents estimate_cost(const CostSpec& spec) {
    spec.validate();
    // cents = minutes_u * gpus * price_u * 100 / (scale^2 * 60 * gpus_per_node)
    const i128 scale = Decimal::kScale;
    const i128 num = static_cast<i128>(spec.wall_time_minutes.units()) * spec.gpus_used *
                     spec.node_price_per_hour.units() * 100;
    const i128 den = scale * scale * 60 * spec.gpus_per_node;
    const i128 q = num / den;
    const i128 r = num % den;
    return Cents{static_cast<std::int64_t>(2 * r >= den ? q + 1 : q)};
}

double estimate_cost_exact(const CostSpec& spec) {
    spec.validate();
    return spec.wall_time_minutes.to_double() / 60.0 * static_cast<double>(spec.gpus_used) /
           static_cast<double>(spec.gpus_per_node) * spec.node_price_per_hour.to_double();
}

std::string Cents::to_string() const {
    return fmt::format("${}.{:02d}", value / 100, value % 100);
}

std::string describe_cost(const CostSpec& spec) {
    return fmt::format("({} min / 60) x ({} / {} GPUs) x ${}/h = {}", spec.wall_time_minutes.to_string(),
                       spec.gpus_used, spec.gpus_per_node, spec.node_price_per_hour.to_string(),
                       estimate_cost(spec).to_string());
}

}  // namespace curator
