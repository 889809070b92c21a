#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "normal.hpp"
#include "policy.hpp"
#include "valuation.hpp"

namespace storarb {

namespace {

constexpr double kNormSmoothing = 1e-9;  // keeps the window norm differentiable at 0

std::vector<double> decision_grid(double upper, std::size_t points) {
    std::vector<double> g;
    if (upper <= 0.0) {
        g.push_back(0.0);
        return g;
    }
    g.reserve(points);
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(upper * double(i) / double(points - 1));
    return g;
}

}  // namespace

void CvarConfig::validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw_config("cvar: mu must be non-negative");
    if (!(nu >= 0.0) || !(nu < 1.0)) throw_config("cvar: nu must lie in [0, 1)");
    if (scenario_count == 0) throw_config("cvar: scenario_count must be positive");
    if (!(scenario_noise_scale >= 0.0) || !std::isfinite(scenario_noise_scale))
        throw_config("cvar: scenario_noise_scale must be non-negative");
    if (grid_points < 2) throw_config("cvar: grid_points must be at least 2");
}

double cvar(const std::vector<double>& values, const std::vector<double>& weights,
            double nu) {
    if (values.empty() || values.size() != weights.size())
        throw_numeric("cvar: values/weights mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw_numeric("cvar: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw_numeric("cvar: weights must sum to 1");
    if (!(nu >= 0.0) || !(nu < 1.0)) throw_numeric("cvar: nu must lie in [0, 1)");

    // Rockafellar-Uryasev: the objective is piecewise linear and concave in z,
    // maximized at one of the scenario values.
    double best = -std::numeric_limits<double>::infinity();
    for (double z : values) {
        double shortfall = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            shortfall += weights[i] * std::max(z - values[i], 0.0);
        best = std::max(best, z - shortfall / (1.0 - nu));
    }
    return best;
}

DispatchDecision cvar_policy(double price, Soc soc_prev,
                             const std::vector<MarginalValueCurve>& scenario_curves,
                             const std::vector<double>& weights, const CvarConfig& cfg,
                             const StorageSpec& spec) {
    cfg.validate();
    spec.validate();
    if (scenario_curves.empty() || scenario_curves.size() != weights.size())
        throw_numeric("cvar_policy: scenario curves/weights mismatch");

    std::vector<ValueCurve> value(scenario_curves.size());
    for (std::size_t i = 0; i < scenario_curves.size(); ++i)
        value[i] = integrate(scenario_curves[i]);

    const ActionBounds bounds = feasible_bounds(soc_prev, price, spec);
    std::vector<double> v(scenario_curves.size());
    double best_obj = -std::numeric_limits<double>::infinity();
    DispatchDecision best;

    const auto consider = [&](const DispatchDecision& d) {
        const double next = soc_prev.value - d.discharge / spec.efficiency +
                            d.charge * spec.efficiency;
        const double cash = step_profit(price, d, spec);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = cash + value[i].evaluate(next);
        double mean = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) mean += weights[i] * v[i];
        const double obj = mean + cfg.mu * cvar(v, weights, cfg.nu);
        if (obj > best_obj) {
            best_obj = obj;
            best = d;
        }
    };

    // Single-axis candidates; the idle decision is the first, so exact ties
    // resolve to doing nothing.
    for (double p : decision_grid(bounds.max_discharge, cfg.grid_points))
        consider(DispatchDecision{p, 0.0});
    for (double b : decision_grid(bounds.max_charge, cfg.grid_points))
        consider(DispatchDecision{0.0, b});
    return best;
}

void ChanceConfig::validate() const {
    if (!(gamma >= 0.5) || !(gamma < 1.0))
        throw_config("chance constraint: gamma must lie in [0.5, 1)");
    if (!(price_std >= 0.0) || !std::isfinite(price_std))
        throw_config("chance constraint: price_std must be non-negative");
    if (horizon == 0) throw_config("chance constraint: horizon must be positive");
}

void RobustConfig::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw_config("robust: gamma must be non-negative");
    if (!(radius_scale >= 0.0) || !std::isfinite(radius_scale))
        throw_config("robust: radius_scale must be non-negative");
    if (horizon == 0) throw_config("robust: horizon must be positive");
}

namespace {

// Exact maximizer of sum_h mu~_h*(p_h - b_h) - C*p_h over feasible dispatch
// sequences: backward induction at the adjusted prices, then a forward
// threshold-dispatch sweep. The export ban follows the *unadjusted* forecast
// sign; adjusted steps whose netback would exceed their buy-in level are
// treated as charge-only (see bellman_backup_levels), a regime only reachable
// under extreme kappa.
std::vector<DispatchDecision> window_linear_optimum(
    const std::vector<double>& adjusted, const std::vector<bool>& banned, Soc e0,
    const StorageSpec& spec) {
    const std::size_t H = adjusted.size();
    std::vector<MarginalValueCurve> curves(H + 1, flat_terminal(spec.capacity));
    std::vector<double> buy(H), sell(H);
    std::vector<bool> allow(H);
    for (std::size_t h = H; h-- > 0;) {
        buy[h] = adjusted[h] / spec.efficiency;
        sell[h] = (adjusted[h] - spec.marginal_cost) * spec.efficiency;
        allow[h] = !banned[h] && sell[h] <= buy[h];
        curves[h] = bellman_backup_levels(curves[h + 1], buy[h], sell[h], allow[h], spec);
    }
    std::vector<DispatchDecision> plan(H);
    Soc e = e0;
    for (std::size_t h = 0; h < H; ++h) {
        plan[h] = threshold_dispatch_levels(buy[h], sell[h], allow[h], e, curves[h + 1],
                                            0.0, spec);
        e = apply_decision(e, plan[h], spec);
    }
    return plan;
}

double window_objective(const std::vector<DispatchDecision>& plan,
                        const std::vector<double>& prices,
                        const std::vector<bool>& uncertain, double kappa,
                        const StorageSpec& spec) {
    double cash = 0.0, norm2 = kNormSmoothing * kNormSmoothing;
    for (std::size_t h = 0; h < plan.size(); ++h) {
        cash += step_profit(prices[h], plan[h], spec);
        if (uncertain[h]) norm2 += plan[h].net() * plan[h].net();
    }
    return cash - kappa * std::sqrt(norm2);
}

}  // namespace

WindowPlan solve_window(const std::vector<double>& window_prices,
                        const std::vector<bool>& uncertain, double kappa, Soc soc_prev,
                        const StorageSpec& spec) {
    spec.validate();
    const std::size_t H = window_prices.size();
    if (H == 0) throw_numeric("solve_window: empty window");
    if (uncertain.size() != H) throw_numeric("solve_window: mask length mismatch");
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
        throw_numeric("solve_window: kappa must be non-negative");
    for (double p : window_prices)
        if (!std::isfinite(p)) throw_numeric("solve_window: non-finite window price");

    std::vector<bool> banned(H);
    for (std::size_t h = 0; h < H; ++h) banned[h] = window_prices[h] < 0.0;

    std::vector<DispatchDecision> x(H);  // start from the all-idle plan
    double fx = window_objective(x, window_prices, uncertain, kappa, spec);

    for (std::size_t iter = 0; iter < 128; ++iter) {
        // Gradient of the norm term at x folds into per-step price adjustments.
        double norm2 = kNormSmoothing * kNormSmoothing;
        for (std::size_t h = 0; h < H; ++h)
            if (uncertain[h]) norm2 += x[h].net() * x[h].net();
        const double norm = std::sqrt(norm2);
        std::vector<double> adjusted(H);
        for (std::size_t h = 0; h < H; ++h)
            adjusted[h] = window_prices[h] -
                          (uncertain[h] ? kappa * x[h].net() / norm : 0.0);

        const std::vector<DispatchDecision> v =
            window_linear_optimum(adjusted, banned, soc_prev, spec);

        // Frank-Wolfe gap at the adjusted prices.
        double gap = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            gap += (adjusted[h] - spec.marginal_cost) * (v[h].discharge - x[h].discharge);
            gap -= adjusted[h] * (v[h].charge - x[h].charge);
        }
        if (gap <= 1e-10 * (1.0 + std::abs(fx))) break;

        // Ternary search for the step size; the objective is concave in theta.
        const auto blend = [&](double theta) {
            std::vector<DispatchDecision> y(H);
            for (std::size_t h = 0; h < H; ++h) {
                y[h].discharge = x[h].discharge + theta * (v[h].discharge - x[h].discharge);
                y[h].charge = x[h].charge + theta * (v[h].charge - x[h].charge);
            }
            return y;
        };
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 64; ++i) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            const double f1 = window_objective(blend(m1), window_prices, uncertain, kappa, spec);
            const double f2 = window_objective(blend(m2), window_prices, uncertain, kappa, spec);
            if (f1 < f2)
                lo = m1;
            else
                hi = m2;
        }
        const double theta = 0.5 * (lo + hi);
        const std::vector<DispatchDecision> y = blend(theta);
        const double fy = window_objective(y, window_prices, uncertain, kappa, spec);
        if (fy <= fx + 1e-14 * (1.0 + std::abs(fx))) break;  // stalled at the kink
        x = y;
        fx = fy;
    }

    WindowPlan plan;
    plan.decisions = std::move(x);
    plan.objective = fx;
    return plan;
}

namespace {

// Interior iterates can carry simultaneous charge/discharge (convex blends of
// single-sided vertices). Collapse the executed step to the equivalent
// single-sided action before handing it to the harness.
DispatchDecision collapse_first_step(const DispatchDecision& d, double price, Soc soc,
                                     const StorageSpec& spec) {
    const double delta = -d.discharge / spec.efficiency + d.charge * spec.efficiency;
    DispatchDecision out;
    if (delta < 0.0)
        out.discharge = -delta * spec.efficiency;
    else
        out.charge = delta / spec.efficiency;
    const ActionBounds bounds = feasible_bounds(soc, price, spec);
    out.discharge = std::min(out.discharge, bounds.max_discharge);
    out.charge = std::min(out.charge, bounds.max_charge);
    if (out.discharge < 1e-12) out.discharge = 0.0;
    if (out.charge < 1e-12) out.charge = 0.0;
    return out;
}

}  // namespace

DispatchDecision chance_constrained_policy(const std::vector<double>& forecast_window,
                                           Soc soc_prev, const ChanceConfig& cfg,
                                           const StorageSpec& spec) {
    cfg.validate();
    if (forecast_window.empty()) throw_numeric("chance_constrained_policy: empty window");
    // Gamma = 0.5 makes the quantile term vanish: risk-neutral lookahead.
    const double z = normal_quantile(cfg.gamma);
    const double kappa = z * cfg.price_std;
    std::vector<bool> uncertain(forecast_window.size(), true);
    uncertain[0] = false;  // current price is realized
    const WindowPlan plan = solve_window(forecast_window, uncertain, kappa, soc_prev, spec);
    return collapse_first_step(plan.decisions[0], forecast_window[0], soc_prev, spec);
}

DispatchDecision robust_policy(const std::vector<double>& forecast_window, Soc soc_prev,
                               const RobustConfig& cfg, const StorageSpec& spec) {
    cfg.validate();
    if (forecast_window.empty()) throw_numeric("robust_policy: empty window");
    const double kappa = cfg.gamma * cfg.radius_scale;
    std::vector<bool> uncertain(forecast_window.size(), true);
    uncertain[0] = false;
    const WindowPlan plan = solve_window(forecast_window, uncertain, kappa, soc_prev, spec);
    return collapse_first_step(plan.decisions[0], forecast_window[0], soc_prev, spec);
}

void SwitchingConfig::validate() const {
    if (!(zeta >= 0.0) || !std::isfinite(zeta))
        throw_config("switching cost: zeta must be non-negative");
}

DispatchDecision switching_cost_policy(double price, Soc soc_prev,
                                       const MarginalValueCurve& q_hat,
                                       const SwitchingConfig& cfg, const StorageSpec& spec) {
    cfg.validate();
    // The wedge zeta*|e' - e| shifts the buy-in level up and the netback level
    // down by exactly zeta, i.e. the threshold policy with width zeta.
    return threshold_dispatch(price, soc_prev, q_hat, cfg.zeta, spec);
}

}  // namespace storarb
