#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "controller.hpp"
#include "domain.hpp"
#include "run_config.hpp"
#include "valuation.hpp"

namespace storarb {

// One executed interval. The conformal columns are sparse: gamma is set for
// conformal strategies only, and the loss for step t is completed one step
// later (when the realized price makes the corrected curve computable), so
// the final step's loss stays unset.
struct TrajectoryRecord {
    std::size_t step = 0;
    std::int64_t timestamp = 0;
    double price = 0.0;
    bool has_gamma = false;
    double gamma = 0.0;      // gamma used for this step's decision
    double discharge = 0.0;  // p
    double charge = 0.0;     // b
    double soc = 0.0;        // state of charge after the step, MWh
    double step_profit = 0.0;
    double cumulative_profit = 0.0;
    bool has_loss = false;
    double loss_clipped = 0.0;     // clipped loss scored against this step
    double cumulative_risk = 0.0;  // running mean of clipped losses through this step
};

struct RunSummary {
    std::string strategy;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    double initial_soc = 0.0;
    double final_soc = 0.0;
    double cash_profit = 0.0;
    double terminal_value = 0.0;
    double profit = 0.0;         // cash_profit + terminal_value
    double oracle_profit = 0.0;  // offline reference from the same start, same curve budget
    double regret = 0.0;         // oracle_profit - profit

    bool conformal = false;
    double epsilon = 0.0;
    double rho = 0.0;
    double final_gamma = 0.0;
    double min_gamma = 0.0;
    double cumulative_risk = 0.0;
    double risk_bound = 0.0;  // epsilon + (gamma_1 - min gamma) / (rho * updates)
    double max_risk_identity_residual = 0.0;

    bool has_forecast_accuracy = false;
    double forecast_r2 = 0.0;
    double forecast_mae = 0.0;
    bool forecast_r2_degenerate = false;

    bool has_td_diagnostics = false;
    double max_abs_td_error = 0.0;

    // Name/value view of everything numeric above that is present; the sweep
    // CSV and the C API metric lookup read from this.
    std::vector<std::pair<std::string, double>> metrics() const;
};

struct RunResult {
    RunSummary summary;
    std::vector<TrajectoryRecord> trajectory;
    RiskLedger ledger;  // empty unless the strategy is conformal
};

// Offline reference: full-information backward induction, then the
// risk-neutral threshold policy executed forward on the same prices.
// max_segments = 0 keeps the recursion exact, in which case forward profit
// equals the dynamic-programming value at the start state up to rounding.
struct OracleReference {
    double profit = 0.0;    // forward profit including terminal value
    double dp_value = 0.0;  // value_at(0, initial) from the induction
    Soc final_soc;
    std::vector<DispatchDecision> decisions;
};

OracleReference offline_oracle(const PriceSeries& prices, const StorageSpec& spec, Soc initial,
                               const MarginalValueCurve& terminal, std::size_t max_segments = 0);

// Runs the configured strategy over the configured prices. The overload with
// an explicit series skips price resolution (tests inject fixtures); the
// series must already satisfy PriceSeries::validate().
RunResult run_backtest(const RunConfig& cfg);
RunResult run_backtest(const RunConfig& cfg, const PriceSeries& prices);

// Resolves the configured price source (synthetic generation or CSV load).
PriceSeries resolve_prices(const RunConfig& cfg);
// Per-step power limit after applying an optional MW rating to the interval.
StorageSpec resolve_storage(const RunConfig& cfg, const PriceSeries& prices);
// Terminal marginal-value curve per the configured terminal condition.
MarginalValueCurve resolve_terminal(const RunConfig& cfg, const StorageSpec& spec,
                                    const PriceSeries& prices);

// Non-causal reference gap; >= -1e-9 * scale whenever both numbers come from
// the same prices, spec, terminal condition, and curve budget.
double compute_regret(double run_profit, double oracle_profit);

// Serialization. CSV floats use "%.10g" so identical runs are byte-identical;
// absent optional fields stay empty. JSON keys are emitted in a fixed order.
std::string trajectory_to_csv(const std::vector<TrajectoryRecord>& records);
std::string summary_to_json(const RunSummary& summary);
// Controller audit trail: t,gamma,loss_raw,loss_clipped,cumulative_risk where
// t is the step the loss scores and gamma the value produced by its update.
std::string ledger_to_csv(const RiskLedger& ledger);

// One-dimensional parameter sweep: applies each value to `param` (dotted
// config path) on top of `base`, runs each config (in parallel when jobs != 1),
// and returns long-format rows ordered by (value index, metric). jobs = 0
// picks the hardware concurrency.
struct SweepRow {
    std::string param;
    double value = 0.0;
    std::string metric;
    double metric_value = 0.0;
};

std::vector<SweepRow> run_sweep(const ConfigMap& base, const std::string& param,
                                const std::vector<double>& values, std::size_t jobs = 0);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace storarb
