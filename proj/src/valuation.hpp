#pragma once

#include <cstddef>
#include <vector>

#include "curve.hpp"
#include "domain.hpp"
#include "policy.hpp"

namespace storarb {

// One-step Bellman backup of a marginal value curve: given the marginal value
// of energy after the interval clears at `price`, returns the marginal value
// before the interval,
//   Qbar_prev(e) = max_{p,b feasible} price*(p - b) - C*p + Q_next(e - p/eta + b*eta).
// The output is again a non-increasing step function, built in closed form
// from five bands (full charge / partial charge / idle / partial discharge /
// full discharge); discharging bands are dropped entirely at negative prices.
MarginalValueCurve bellman_backup(const MarginalValueCurve& next, double price,
                                  const StorageSpec& spec);

// Level-form primitive behind bellman_backup (see threshold_dispatch_levels):
// band construction against explicit buy-in/netback levels with an explicit
// export-ban flag. Exposed for the rolling-horizon window programs.
MarginalValueCurve bellman_backup_levels(const MarginalValueCurve& next, double buy_level,
                                         double sell_level, bool allow_discharge,
                                         const StorageSpec& spec);

// The additive DP constant the marginal curve cannot carry:
// Qbar_prev(0) = one-step optimum from an empty battery, which charges when
// profitable. `next_offset` is Q_next(0).
double bellman_backup_offset(const MarginalValueCurve& next, double next_offset,
                             double price, const StorageSpec& spec);

// Value of the single-interval problem from state `soc_prev` when dispatching
// with `threshold_dispatch(policy_curve, width)` and valuing the terminal SoC
// with integrate(value_curve) + value_offset. Shared by the offset recursion,
// the value-error loss, and the offline oracle's bookkeeping.
struct StepOutcome {
    DispatchDecision decision;
    Soc soc_next;
    double objective = 0.0;  // step profit + continuation value at soc_next
};

StepOutcome one_step(double price, Soc soc_prev, const MarginalValueCurve& policy_curve,
                     double width, const MarginalValueCurve& value_curve,
                     double value_offset, const StorageSpec& spec);

// Full backward induction over a price series. marginals[t] is the marginal
// value of energy *before* interval t clears (prices[t] is the next price it
// sees); marginals[T] is the terminal curve. offsets[t] = Q_t(0) makes
// value_at absolute, so it matches exhaustive enumeration of total profit.
// max_segments > 0 coarsens each intermediate curve to bound growth on long
// horizons; 0 keeps the recursion exact.
struct ValuationResult {
    std::vector<MarginalValueCurve> marginals;
    std::vector<double> offsets;

    std::size_t horizon() const noexcept { return marginals.empty() ? 0 : marginals.size() - 1; }
    double value_at(std::size_t t, double e) const;
};

ValuationResult backward_induct(const PriceSeries& prices, const StorageSpec& spec,
                                const MarginalValueCurve& terminal,
                                std::size_t max_segments = 0);

// Terminal conditions. flat_terminal(0) is the default "leftover energy is
// worthless"; target_soc_terminal pays `salvage` per MWh up to `target` and
// nothing beyond, steering the run back toward the target SoC.
MarginalValueCurve flat_terminal(double capacity, double value = 0.0);
MarginalValueCurve target_soc_terminal(double capacity, double target, double salvage);

}  // namespace storarb
