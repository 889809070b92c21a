#pragma once

#include "curve.hpp"
#include "domain.hpp"

namespace storarb {

// Symmetric prediction set around a forecast marginal-value curve:
// [q - w, q + w] with w = sigma * max(z_{1 - gamma'/2}, 0) and gamma' clamped
// into [1e-6, 2 - 1e-6]. gamma >= 1 produces w = 0 (the set collapses to the
// point forecast); gamma -> 0 widens the set without bound.
struct PredictionSetParams {
    double gamma = 1.0;
    double sigma = 0.0;
};

double halfwidth(const PredictionSetParams& params);

// One-step dispatch that is exactly optimal for
//   max  price*(p - b) - C*p + Q(e - p/eta + b*eta)
// when `width` == 0, where Q integrates `curve`. For width > 0 the charge
// thresholds use the pessimistic band edge q - w and the discharge thresholds
// the optimistic edge q + w, which is the conformal rule; width == 0 recovers
// the risk-neutral policy. Feasibility caps and the negative-price export ban
// are applied last. Boundary ties resolve to the earlier (more cautious) case.
DispatchDecision threshold_dispatch(double price, Soc soc_prev,
                                    const MarginalValueCurve& curve, double width,
                                    const StorageSpec& spec);

// Level-form primitive behind threshold_dispatch: compares the stored-energy
// buy-in level (price/eta for a market price) and netback level
// ((price - C)*eta) directly against the curve, with `width` widening both.
// The rolling-horizon baselines call this with adjusted prices while keeping
// the export ban tied to the unadjusted forecast sign.
DispatchDecision threshold_dispatch_levels(double buy_level, double sell_level,
                                           bool allow_discharge, Soc soc_prev,
                                           const MarginalValueCurve& curve, double width,
                                           const StorageSpec& spec);

DispatchDecision risk_neutral_policy(double price, Soc soc_prev,
                                     const MarginalValueCurve& curve,
                                     const StorageSpec& spec);

DispatchDecision conformal_policy(double price, Soc soc_prev,
                                  const MarginalValueCurve& curve,
                                  const PredictionSetParams& params,
                                  const StorageSpec& spec);

// Price interval (low, high] on which conformal_policy idles at this state.
// low may be negative; high is clamped at 0 from below (no export at
// negative prices means sufficiently negative prices always charge or idle).
struct PriceBand {
    double low = 0.0;
    double high = 0.0;
};

PriceBand idle_band(Soc soc_prev, const MarginalValueCurve& curve,
                    const PredictionSetParams& params, const StorageSpec& spec);

}  // namespace storarb
