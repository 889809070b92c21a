#pragma once

#include <cstdint>
#include <vector>

#include "curve.hpp"
#include "domain.hpp"

namespace storarb {

// ---- Scenario-based mean-CVaR single-step policy -------------------------
//
// Maximizes  E[V] + mu * CVaR_nu(V)  over a discretized single-axis decision
// grid, where V_w = price*(p-b) - C*p + Q_w(e') under scenario curve w.
// CVaR uses the exact Rockafellar-Uryasev evaluation (optimum of
// z - (1/(1-nu)) * sum w_i (z - V_i)^+ over candidate z in {V_i}).
struct CvarConfig {
    double mu = 1.0;                    // CVaR weight in the objective
    double nu = 0.95;                   // tail level
    std::size_t scenario_count = 8;     // scenarios the harness generates
    double scenario_noise_scale = 10.0; // perturbation scale for scenarios, $/MWh
    std::uint64_t scenario_seed = 0;
    std::size_t grid_points = 201;      // decision grid per axis

    void validate() const;
};

// Exact CVaR_nu of a finite weighted distribution (weights sum to 1).
double cvar(const std::vector<double>& values, const std::vector<double>& weights,
            double nu);

DispatchDecision cvar_policy(double price, Soc soc_prev,
                             const std::vector<MarginalValueCurve>& scenario_curves,
                             const std::vector<double>& weights, const CvarConfig& cfg,
                             const StorageSpec& spec);

// ---- Rolling-horizon window programs --------------------------------------
//
// Both the chance-constrained and the robust baseline reduce to
//   max  sum_h mu_h*(p_h - b_h) - C*p_h  -  kappa * || (p-b) masked to uncertain steps ||_2
// over feasible dispatch sequences: the chance constraint via its normal
// quantile reformulation (kappa = z_Gamma * price_std), the ellipsoidal
// worst case in closed form (kappa = Gamma * radius_scale). Solved with
// Frank-Wolfe; the linear subproblem is an exact deterministic storage DP at
// adjusted prices. The first window entry is the realized current price
// (zero uncertainty); only the first-step decision is executed.
struct ChanceConfig {
    double gamma = 0.95;      // confidence level, [0.5, 1)
    double price_std = 10.0;  // assumed per-step price std, $/MWh
    std::size_t horizon = 12; // window length including the current step

    void validate() const;
};

struct RobustConfig {
    double gamma = 1.0;        // uncertainty budget, >= 0
    double radius_scale = 10.0;  // ellipsoid radius per unit budget, $/MWh
    std::size_t horizon = 12;

    void validate() const;
};

DispatchDecision chance_constrained_policy(const std::vector<double>& forecast_window,
                                           Soc soc_prev, const ChanceConfig& cfg,
                                           const StorageSpec& spec);

DispatchDecision robust_policy(const std::vector<double>& forecast_window, Soc soc_prev,
                               const RobustConfig& cfg, const StorageSpec& spec);

// Shared solver, exposed for tests: maximizes the window objective above and
// returns the full plan. `uncertain[h]` marks steps inside the norm.
struct WindowPlan {
    std::vector<DispatchDecision> decisions;
    double objective = 0.0;
};

WindowPlan solve_window(const std::vector<double>& window_prices,
                        const std::vector<bool>& uncertain, double kappa, Soc soc_prev,
                        const StorageSpec& spec);

// ---- Switching-cost policy -------------------------------------------------
//
// max  price*(p-b) - C*p + Q(e') - zeta*|e' - e|: the SoC-movement wedge
// widens both action thresholds by exactly zeta, so this is the threshold
// policy with width zeta; zeta = 0 reproduces the risk-neutral policy
// bit-for-bit.
struct SwitchingConfig {
    double zeta = 0.0;  // $/MWh of SoC movement

    void validate() const;
};

DispatchDecision switching_cost_policy(double price, Soc soc_prev,
                                       const MarginalValueCurve& q_hat,
                                       const SwitchingConfig& cfg, const StorageSpec& spec);

}  // namespace storarb
