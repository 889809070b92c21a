#include "valuation.hpp"

#include <algorithm>
#include <cmath>

namespace storarb {

MarginalValueCurve bellman_backup_levels(const MarginalValueCurve& next, double buy_level,
                                         double sell_level, bool allow_discharge,
                                         const StorageSpec& spec) {
    spec.validate();
    if (!std::isfinite(buy_level) || !std::isfinite(sell_level))
        throw_numeric("bellman_backup: non-finite price levels");
    if (std::abs(next.capacity() - spec.capacity) > 1e-9 * std::max(1.0, spec.capacity))
        throw_numeric("bellman_backup: curve capacity does not match storage spec");

    const double eta = spec.efficiency;
    const double E = spec.capacity;
    const double P = spec.power_limit_per_step;

    // Stored-energy breakeven levels. Charging is worthwhile below SoC
    // ec = inverse(buy_level); discharging above ed = inverse(sell_level).
    // Market prices always satisfy sell_level <= buy_level (eta <= 1, C >= 0),
    // so ec <= ed and the bands below are ordered. Adjusted prices from the
    // window solver can invert the levels; such steps are treated as
    // charge-only, which keeps the construction well-ordered (see baselines).
    const double charge_level = buy_level;
    const double ec = next.inverse(charge_level);
    const bool can_discharge = allow_discharge && sell_level <= buy_level;
    const double discharge_level = sell_level;
    const double ed = can_discharge ? next.inverse(discharge_level) : E;

    CurveBuilder out(E);
    // Full-charge band: the extra stored unit displaces nothing, value is the
    // post-charge marginal shifted down by one full charge.
    if (ec - P * eta > 0.0) out.append_window(next, P * eta, ec, -P * eta);
    // Partial-charge band: marginal stored unit is bought at the buy-in level.
    if (ec > out.cursor()) out.append(ec, charge_level);
    // Idle band: the curve passes through unchanged.
    if (ed > out.cursor()) out.append_window(next, out.cursor(), ed, 0.0);
    if (can_discharge) {
        // Partial-discharge band: marginal stored unit is sold at the netback level.
        const double d1 = std::min(E, ed + P / eta);
        if (d1 > out.cursor()) out.append(d1, discharge_level);
        // Full-discharge band: shifted up by one full discharge.
        if (E > out.cursor()) out.append_window(next, ed, E - P / eta, P / eta);
    }
    // When discharging is shut off nothing above ec changes hands.
    if (out.cursor() < E) out.append_window(next, out.cursor(), E, 0.0);
    return out.finish();
}

MarginalValueCurve bellman_backup(const MarginalValueCurve& next, double price,
                                  const StorageSpec& spec) {
    if (!std::isfinite(price)) throw_numeric("bellman_backup: non-finite price");
    return bellman_backup_levels(next, price / spec.efficiency,
                                 (price - spec.marginal_cost) * spec.efficiency,
                                 /*allow_discharge=*/price >= 0.0, spec);
}

StepOutcome one_step(double price, Soc soc_prev, const MarginalValueCurve& policy_curve,
                     double width, const MarginalValueCurve& value_curve,
                     double value_offset, const StorageSpec& spec) {
    StepOutcome s;
    s.decision = threshold_dispatch(price, soc_prev, policy_curve, width, spec);
    s.soc_next = apply_decision(soc_prev, s.decision, spec);
    s.objective = step_profit(price, s.decision, spec) +
                  integrate(value_curve, value_offset).evaluate(s.soc_next.value);
    return s;
}

double bellman_backup_offset(const MarginalValueCurve& next, double next_offset,
                             double price, const StorageSpec& spec) {
    return one_step(price, Soc{0.0}, next, 0.0, next, next_offset, spec).objective;
}

double ValuationResult::value_at(std::size_t t, double e) const {
    if (t >= marginals.size()) throw_numeric("value_at: step index out of range");
    return integrate(marginals[t], offsets[t]).evaluate(e);
}

ValuationResult backward_induct(const PriceSeries& prices, const StorageSpec& spec,
                                const MarginalValueCurve& terminal,
                                std::size_t max_segments) {
    spec.validate();
    prices.validate();
    const std::size_t T = prices.size();
    ValuationResult r;
    r.marginals.resize(T + 1);
    r.offsets.assign(T + 1, 0.0);
    r.marginals[T] = terminal;
    for (std::size_t t = T; t-- > 0;) {
        const MarginalValueCurve backed =
            bellman_backup(r.marginals[t + 1], prices.prices[t], spec);
        r.offsets[t] =
            bellman_backup_offset(r.marginals[t + 1], r.offsets[t + 1], prices.prices[t], spec);
        r.marginals[t] = resample(backed, max_segments);
    }
    return r;
}

MarginalValueCurve flat_terminal(double capacity, double value) {
    return MarginalValueCurve::constant(value, capacity);
}

MarginalValueCurve target_soc_terminal(double capacity, double target, double salvage) {
    if (!(target > 0.0) || target > capacity)
        throw_config("target_soc_terminal: target must lie in (0, capacity]");
    if (!(salvage >= 0.0)) throw_config("target_soc_terminal: salvage must be non-negative");
    if (target >= capacity || salvage == 0.0)
        return MarginalValueCurve::constant(salvage, capacity);
    return MarginalValueCurve({target, capacity}, {salvage, 0.0});
}

}  // namespace storarb
