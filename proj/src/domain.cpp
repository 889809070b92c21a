#include "domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace storarb {

namespace {
constexpr double kFeasTol = 1e-9;

bool finite(double x) { return std::isfinite(x); }
}  // namespace

void StorageSpec::validate() const {
    if (!finite(power_limit_per_step) || power_limit_per_step <= 0.0)
        throw_config("storage: power_limit_per_step must be positive and finite");
    if (!finite(capacity) || capacity <= 0.0)
        throw_config("storage: capacity must be positive and finite");
    if (!finite(efficiency) || efficiency <= 0.0 || efficiency > 1.0)
        throw_config("storage: efficiency must lie in (0, 1]");
    if (!finite(marginal_cost) || marginal_cost < 0.0)
        throw_config("storage: marginal_cost must be non-negative and finite");
}

double power_limit_from_rating(double megawatts, double interval_hours) {
    if (!finite(megawatts) || megawatts <= 0.0)
        throw_config("power rating must be positive");
    if (!finite(interval_hours) || interval_hours <= 0.0)
        throw_config("interval_hours must be positive");
    return megawatts * interval_hours;
}

void PriceSeries::validate() const {
    if (timestamps.size() != prices.size())
        throw_data("price series: timestamp/price column lengths differ");
    if (prices.empty()) throw_data("price series: empty");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!finite(prices[i]))
            throw_data("price series: non-finite price at row " + std::to_string(i));
        if (i > 0 && timestamps[i] <= timestamps[i - 1])
            throw_data("price series: timestamps not strictly increasing at row " +
                       std::to_string(i));
    }
}

std::int64_t PriceSeries::modal_interval_seconds() const {
    if (timestamps.size() < 2) throw_data("price series: need at least two rows for an interval");
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        ++counts[timestamps[i] - timestamps[i - 1]];
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

Soc apply_decision(Soc soc, const DispatchDecision& d, const StorageSpec& spec) {
    spec.validate();
    if (!finite(d.discharge) || !finite(d.charge) || !finite(soc.value))
        throw_numeric("apply_decision: non-finite inputs");
    if (d.discharge < -kFeasTol || d.charge < -kFeasTol)
        throw_numeric("apply_decision: negative action");
    if (d.discharge > kFeasTol && d.charge > kFeasTol)
        throw_numeric("apply_decision: simultaneous charge and discharge");
    if (d.discharge > spec.power_limit_per_step + kFeasTol ||
        d.charge > spec.power_limit_per_step + kFeasTol)
        throw_numeric("apply_decision: action exceeds power limit");
    if (soc.value < -kFeasTol || soc.value > spec.capacity + kFeasTol)
        throw_numeric("apply_decision: state of charge outside [0, capacity]");

    const double next = soc.value - d.discharge / spec.efficiency + d.charge * spec.efficiency;
    if (next < -kFeasTol || next > spec.capacity + kFeasTol)
        throw_numeric("apply_decision: transition leaves [0, capacity]");
    return Soc{std::clamp(next, 0.0, spec.capacity)};
}

double step_profit(double price, const DispatchDecision& d, const StorageSpec& spec) {
    return price * (d.discharge - d.charge) - spec.marginal_cost * d.discharge;
}

ActionBounds feasible_bounds(Soc soc, double price, const StorageSpec& spec) {
    spec.validate();
    if (!finite(soc.value) || soc.value < -kFeasTol || soc.value > spec.capacity + kFeasTol)
        throw_numeric("feasible_bounds: state of charge outside [0, capacity]");
    const double e = std::clamp(soc.value, 0.0, spec.capacity);
    ActionBounds out;
    // Discharging drains p/eta of stored energy; negative prices forbid export.
    out.max_discharge = price < 0.0
                            ? 0.0
                            : std::min(spec.power_limit_per_step, e * spec.efficiency);
    out.max_charge =
        std::min(spec.power_limit_per_step, (spec.capacity - e) / spec.efficiency);
    return out;
}

}  // namespace storarb
