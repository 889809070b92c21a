#include "policy.hpp"

#include <algorithm>
#include <cmath>

#include "normal.hpp"

namespace storarb {

namespace {
constexpr double kGammaFloor = 1e-6;
constexpr double kGammaCeil = 2.0 - 1e-6;
}  // namespace

double halfwidth(const PredictionSetParams& params) {
    if (!std::isfinite(params.gamma) || !std::isfinite(params.sigma) || params.sigma < 0.0)
        throw_numeric("halfwidth: sigma must be finite and non-negative");
    const double g = std::clamp(params.gamma, kGammaFloor, kGammaCeil);
    return params.sigma * std::max(normal_quantile(1.0 - g / 2.0), 0.0);
}

DispatchDecision threshold_dispatch_levels(double buy_level, double sell_level,
                                           bool allow_discharge, Soc soc_prev,
                                           const MarginalValueCurve& curve, double width,
                                           const StorageSpec& spec) {
    spec.validate();
    if (!std::isfinite(buy_level) || !std::isfinite(sell_level))
        throw_numeric("threshold_dispatch: non-finite price levels");
    if (!std::isfinite(width) || width < 0.0)
        throw_numeric("threshold_dispatch: width must be finite and non-negative");
    if (std::abs(curve.capacity() - spec.capacity) > 1e-9 * std::max(1.0, spec.capacity))
        throw_numeric("threshold_dispatch: curve capacity does not match storage spec");
    const double e = soc_prev.value;
    if (e < -1e-12 || e > spec.capacity + 1e-12)
        throw_numeric("threshold_dispatch: state of charge outside [0, capacity]");

    const double eta = spec.efficiency;
    const double P = spec.power_limit_per_step;
    const auto q = [&](double x) { return curve.evaluate_clamped(x); };

    DispatchDecision d;
    if (buy_level + width <= q(e + P * eta)) {
        // Even the post-charge marginal value beats the buy-in level: max charge.
        d.charge = P;
    } else if (buy_level + width <= q(e)) {
        // Charge until the band's pessimistic edge drops to the buy-in level.
        const double target = curve.inverse(buy_level + width);
        d.charge = std::clamp((target - e) / eta, 0.0, P);
    } else if (!allow_discharge || sell_level - width <= q(e)) {
        // Idle band: stored energy is worth more than selling, less than buying.
    } else if (sell_level - width <= q(e - P / eta)) {
        // Discharge until the band's optimistic edge rises to the netback level.
        const double target = curve.inverse(sell_level - width);
        d.discharge = std::clamp((e - target) * eta, 0.0, P);
    } else {
        d.discharge = P;
    }

    // Energy feasibility caps.
    d.discharge = std::min(d.discharge, e * eta);
    d.charge = std::min(d.charge, (spec.capacity - e) / eta);
    return d;
}

DispatchDecision threshold_dispatch(double price, Soc soc_prev,
                                    const MarginalValueCurve& curve, double width,
                                    const StorageSpec& spec) {
    if (!std::isfinite(price)) throw_numeric("threshold_dispatch: non-finite price");
    return threshold_dispatch_levels(price / spec.efficiency,
                                     (price - spec.marginal_cost) * spec.efficiency,
                                     /*allow_discharge=*/price > 0.0, soc_prev, curve,
                                     width, spec);
}

DispatchDecision risk_neutral_policy(double price, Soc soc_prev,
                                     const MarginalValueCurve& curve,
                                     const StorageSpec& spec) {
    return threshold_dispatch(price, soc_prev, curve, 0.0, spec);
}

DispatchDecision conformal_policy(double price, Soc soc_prev,
                                  const MarginalValueCurve& curve,
                                  const PredictionSetParams& params,
                                  const StorageSpec& spec) {
    return threshold_dispatch(price, soc_prev, curve, halfwidth(params), spec);
}

PriceBand idle_band(Soc soc_prev, const MarginalValueCurve& curve,
                    const PredictionSetParams& params, const StorageSpec& spec) {
    spec.validate();
    const double w = halfwidth(params);
    const double q = curve.evaluate_clamped(soc_prev.value);
    PriceBand band;
    band.low = (q - w) * spec.efficiency;
    band.high = std::max((q + w) / spec.efficiency + spec.marginal_cost, 0.0);
    return band;
}

}  // namespace storarb
