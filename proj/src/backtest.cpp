#include "backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <memory>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include "baselines.hpp"
#include "forecast.hpp"
#include "policy.hpp"
#include "prices.hpp"

#include "json.hpp"

namespace storarb {
namespace {

constexpr double kFeasSlack = 1e-9;

std::string fmt_double(double x) {
    if (x == 0.0) x = 0.0;  // normalize -0
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

double mean_price(const PriceSeries& prices) {
    KahanSum sum;
    for (double p : prices.prices) sum.add(p);
    return prices.size() == 0 ? 0.0 : sum.value() / static_cast<double>(prices.size());
}

// 99th percentile of |price| (nearest-rank); the default value-loss normalizer
// is power_limit * p99, a robust bound on a single step's value swing.
double abs_price_p99(const std::vector<double>& prices) {
    if (prices.empty()) return 0.0;
    std::vector<double> mags(prices.size());
    std::transform(prices.begin(), prices.end(), mags.begin(),
                   [](double p) { return std::fabs(p); });
    std::sort(mags.begin(), mags.end());
    const auto n = static_cast<double>(mags.size());
    auto rank = static_cast<std::size_t>(std::ceil(0.99 * n));
    if (rank == 0) rank = 1;
    return mags[std::min(mags.size() - 1, rank - 1)];
}

// Seasonal-naive point forecast for the rolling-horizon baselines: entry 0 is
// the realized current price; later entries reuse the price one day earlier
// (falling back to persistence near the series start). Only indices <= t are
// read, so the forecast is causal.
std::vector<double> point_forecast_window(const PriceSeries& prices, std::size_t t,
                                          std::size_t horizon, std::int64_t steps_per_day) {
    std::vector<double> window(horizon);
    window[0] = prices.prices[t];
    for (std::size_t h = 1; h < horizon; ++h) {
        const auto src = static_cast<std::int64_t>(t + h) - steps_per_day;
        window[h] = (src >= 0 && src <= static_cast<std::int64_t>(t))
                        ? prices.prices[static_cast<std::size_t>(src)]
                        : prices.prices[t];
    }
    return window;
}

std::vector<MarginalValueCurve> cvar_scenarios(const MarginalValueCurve& base, std::size_t t,
                                               const CvarConfig& cfg) {
    std::vector<MarginalValueCurve> scenarios;
    scenarios.reserve(cfg.scenario_count);
    for (std::size_t w = 0; w < cfg.scenario_count; ++w) {
        if (w == 0 || cfg.scenario_noise_scale == 0.0) {
            // Scenario 0 is always the unperturbed forecast, so a single
            // scenario (or zero noise) degenerates to the risk-neutral view.
            scenarios.push_back(base);
            continue;
        }
        std::mt19937_64 rng(derive_seed(cfg.scenario_seed,
                                        static_cast<std::uint64_t>(t) * cfg.scenario_count + w));
        std::normal_distribution<double> gauss(0.0, cfg.scenario_noise_scale);
        std::vector<double> values = base.values();
        for (double& v : values) v += gauss(rng);
        scenarios.emplace_back(base.upper_breaks(), repair_non_increasing(std::move(values)));
    }
    return scenarios;
}

void check_decision_feasible(const DispatchDecision& d, Soc soc, double price,
                             const StorageSpec& spec) {
    const ActionBounds ab = feasible_bounds(soc, price, spec);
    const bool ok = d.discharge >= -kFeasSlack && d.charge >= -kFeasSlack &&
                    d.discharge <= ab.max_discharge + kFeasSlack &&
                    d.charge <= ab.max_charge + kFeasSlack &&
                    !(d.discharge > kFeasSlack && d.charge > kFeasSlack);
    if (!ok) {
        throw_numeric("infeasible decision: discharge=" + std::to_string(d.discharge) +
                      " charge=" + std::to_string(d.charge));
    }
}

// Context needed to score step t's loss once price t+1 arrives.
struct PendingStep {
    MarginalValueCurve q_hat;
    double q_hat_offset = 0.0;
    double price = 0.0;
    double soc_before = 0.0;
    double soc_after = 0.0;
    double gamma = 0.0;
};

}  // namespace

std::vector<std::pair<std::string, double>> RunSummary::metrics() const {
    std::vector<std::pair<std::string, double>> m;
    m.emplace_back("steps", static_cast<double>(steps));
    m.emplace_back("profit", profit);
    m.emplace_back("cash_profit", cash_profit);
    m.emplace_back("terminal_value", terminal_value);
    m.emplace_back("oracle_profit", oracle_profit);
    m.emplace_back("regret", regret);
    m.emplace_back("initial_soc", initial_soc);
    m.emplace_back("final_soc", final_soc);
    if (conformal) {
        m.emplace_back("epsilon", epsilon);
        m.emplace_back("rho", rho);
        m.emplace_back("final_gamma", final_gamma);
        m.emplace_back("min_gamma", min_gamma);
        m.emplace_back("cumulative_risk", cumulative_risk);
        m.emplace_back("risk_bound", risk_bound);
        m.emplace_back("max_risk_identity_residual", max_risk_identity_residual);
    }
    if (has_forecast_accuracy) {
        m.emplace_back("forecast_r2", forecast_r2);
        m.emplace_back("forecast_mae", forecast_mae);
    }
    if (has_td_diagnostics) m.emplace_back("max_abs_td_error", max_abs_td_error);
    return m;
}

PriceSeries resolve_prices(const RunConfig& cfg) {
    if (cfg.price_source == PriceSourceKind::csv) {
        return load_prices(cfg.price_path, cfg.allow_gaps);
    }
    return synthesize_prices(cfg.gen, derive_seed(cfg.seed, 0), cfg.steps);
}

StorageSpec resolve_storage(const RunConfig& cfg, const PriceSeries& prices) {
    StorageSpec spec = cfg.storage;
    if (cfg.power_limit_mw > 0.0) {
        if (prices.size() < 2) {
            throw_config("storage.power_limit_mw needs at least two prices to infer the interval");
        }
        const double hours = static_cast<double>(prices.modal_interval_seconds()) / 3600.0;
        spec.power_limit_per_step = power_limit_from_rating(cfg.power_limit_mw, hours);
    }
    spec.validate();
    return spec;
}

MarginalValueCurve resolve_terminal(const RunConfig& cfg, const StorageSpec& spec,
                                    const PriceSeries& prices) {
    if (cfg.terminal_kind == TerminalKind::zero || cfg.terminal_target_fraction == 0.0) {
        return flat_terminal(spec.capacity);
    }
    const double salvage =
        cfg.terminal_salvage_auto ? std::max(0.0, mean_price(prices)) : cfg.terminal_salvage;
    if (salvage == 0.0) return flat_terminal(spec.capacity);
    return target_soc_terminal(spec.capacity, cfg.terminal_target_fraction * spec.capacity,
                               salvage);
}

OracleReference offline_oracle(const PriceSeries& prices, const StorageSpec& spec, Soc initial,
                               const MarginalValueCurve& terminal, std::size_t max_segments) {
    const ValuationResult truth = backward_induct(prices, spec, terminal, max_segments);
    OracleReference ref;
    ref.dp_value = truth.value_at(0, initial.value);
    ref.decisions.reserve(prices.size());
    Soc e = initial;
    KahanSum profit;
    for (std::size_t t = 0; t < prices.size(); ++t) {
        const DispatchDecision d =
            threshold_dispatch(prices.prices[t], e, truth.marginals[t + 1], 0.0, spec);
        profit.add(step_profit(prices.prices[t], d, spec));
        e = apply_decision(e, d, spec);
        ref.decisions.push_back(d);
    }
    profit.add(ValueCurve(terminal).evaluate(e.value));
    ref.profit = profit.value();
    ref.final_soc = e;
    return ref;
}

RunResult run_backtest(const RunConfig& cfg) { return run_backtest(cfg, resolve_prices(cfg)); }

RunResult run_backtest(const RunConfig& cfg, const PriceSeries& prices) {
    prices.validate();
    const std::size_t T = prices.size();
    if (T == 0) throw_data("price series is empty");
    const StorageSpec spec = resolve_storage(cfg, prices);
    const MarginalValueCurve terminal = resolve_terminal(cfg, spec, prices);

    // Ground-truth valuation and the per-step forecast targets derived from it.
    const ValuationResult truth = backward_induct(prices, spec, terminal, cfg.curve_segments);
    std::vector<Forecast> targets;
    targets.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        targets.push_back(Forecast{truth.marginals[t + 1], truth.offsets[t + 1]});
    }

    std::unique_ptr<ForecastSource> forecaster;
    RunSummary summary;
    if (cfg.forecaster == ForecasterKind::noisy) {
        NoisyOracleConfig noise = cfg.noise;
        if (!cfg.noise_seed_set) noise.seed = derive_seed(cfg.seed, 1);
        auto noisy = std::make_unique<NoisyOracleForecast>(targets, noise, cfg.forecaster_grid);
        const AccuracyReport acc = measure_r2(noisy->all(), targets);
        summary.has_forecast_accuracy = true;
        summary.forecast_r2 = acc.r_squared;
        summary.forecast_mae = acc.mean_abs_error;
        summary.forecast_r2_degenerate = acc.degenerate;
        forecaster = std::move(noisy);
    } else {
        summary.has_forecast_accuracy = true;
        summary.forecast_r2 = 1.0;
        summary.forecast_mae = 0.0;
        forecaster = std::make_unique<OracleForecast>(targets);
    }

    // Controller setup (conformal strategies only).
    const bool conformal = strategy_is_conformal(cfg.strategy);
    ControllerConfig ccfg = cfg.controller;
    if (conformal && ccfg.loss_kind == LossKind::value_error && ccfg.value_loss_scale == 0.0) {
        const double scale = spec.power_limit_per_step * abs_price_p99(prices.prices);
        ccfg.value_loss_scale = scale > 0.0 ? scale : 1.0;
    }
    ControllerState state = make_controller_state(ccfg);
    RiskLedger ledger;
    if (conformal) ledger.gamma_trace.push_back(state.gamma);

    CvarConfig cvar_cfg = cfg.cvar;
    if (!cfg.cvar_seed_set) cvar_cfg.scenario_seed = derive_seed(cfg.seed, 2);
    const std::vector<double> cvar_weights(
        cvar_cfg.scenario_count, 1.0 / static_cast<double>(cvar_cfg.scenario_count));
    const std::int64_t steps_per_day =
        T >= 2 ? std::max<std::int64_t>(1, 86400 / prices.modal_interval_seconds()) : 1;

    const bool need_correction = conformal || cfg.td_diagnostics;
    RunResult result;
    result.trajectory.reserve(T);

    Soc e{cfg.initial_soc_fraction * spec.capacity};
    summary.initial_soc = e.value;
    KahanSum cash;
    PendingStep pending;
    bool has_pending = false;

    auto run_step = [&](std::size_t t) {
        const double price = prices.prices[t];
        const Forecast& f = forecaster->predict(t);

        // Score the previous step now that its corrected curve is computable.
        if (need_correction && has_pending) {
            const MarginalValueCurve q_bar = bellman_backup(f.marginal, price, spec);
            if (conformal) {
                double raw = 0.0;
                if (ccfg.loss_kind == LossKind::prediction_error) {
                    raw = loss_prediction_error(state, pending.q_hat.evaluate(pending.soc_after),
                                                q_bar.evaluate(pending.soc_after), ccfg);
                } else {
                    raw = loss_value_error(Soc{pending.soc_before}, pending.price, pending.q_hat,
                                           q_bar, PredictionSetParams{pending.gamma, ccfg.sigma},
                                           spec);
                }
                const double loss = clip_loss(raw, ccfg);
                update_gamma(state, loss, ccfg);
                ledger.gamma_trace.push_back(state.gamma);
                ledger.raw_losses.push_back(raw);
                ledger.losses.push_back(loss);
                ledger.cumulative_risk.push_back(cumulative_risk(state));
                const double resid = risk_identity_residual(state, ccfg);
                summary.max_risk_identity_residual =
                    std::max(summary.max_risk_identity_residual, resid);
                if (resid > 1e-9) {
                    throw_numeric("risk identity residual " + std::to_string(resid) +
                                  " exceeds 1e-9");
                }
                TrajectoryRecord& prev = result.trajectory.back();
                prev.has_loss = true;
                prev.loss_clipped = loss;
                prev.cumulative_risk = ledger.cumulative_risk.back();
            }
            if (cfg.td_diagnostics) {
                const ValueCurve q_hat_value(pending.q_hat, pending.q_hat_offset);
                const double offset_bar =
                    bellman_backup_offset(f.marginal, f.value_offset, price, spec);
                const ValueCurve q_bar_value(q_bar, offset_bar);
                const double delta = q_hat_value.evaluate(pending.soc_after) -
                                     q_bar_value.evaluate(pending.soc_after);
                summary.has_td_diagnostics = true;
                summary.max_abs_td_error =
                    std::max(summary.max_abs_td_error, std::fabs(delta));
            }
        }

        // Decide with the (possibly just updated) state.
        DispatchDecision d;
        double gamma_used = 0.0;
        switch (cfg.strategy) {
            case StrategyKind::idle:
                break;
            case StrategyKind::risk_neutral:
                d = risk_neutral_policy(price, e, f.marginal, spec);
                break;
            case StrategyKind::cc_prediction_error:
            case StrategyKind::cc_value_error:
                gamma_used = state.gamma;
                d = conformal_policy(price, e, f.marginal,
                                     PredictionSetParams{gamma_used, ccfg.sigma}, spec);
                break;
            case StrategyKind::cvar: {
                const auto scenarios = cvar_scenarios(f.marginal, t, cvar_cfg);
                d = cvar_policy(price, e, scenarios, cvar_weights, cvar_cfg, spec);
                break;
            }
            case StrategyKind::chance_constrained: {
                const auto window =
                    point_forecast_window(prices, t, cfg.chance.horizon, steps_per_day);
                d = chance_constrained_policy(window, e, cfg.chance, spec);
                break;
            }
            case StrategyKind::robust: {
                const auto window =
                    point_forecast_window(prices, t, cfg.robust.horizon, steps_per_day);
                d = robust_policy(window, e, cfg.robust, spec);
                break;
            }
            case StrategyKind::switching_cost:
                d = switching_cost_policy(price, e, f.marginal, cfg.switching, spec);
                break;
        }

        check_decision_feasible(d, e, price, spec);
        const Soc e_next = apply_decision(e, d, spec);
        const double profit = step_profit(price, d, spec);
        cash.add(profit);

        TrajectoryRecord rec;
        rec.step = t;
        rec.timestamp = prices.timestamps[t];
        rec.price = price;
        rec.discharge = d.discharge;
        rec.charge = d.charge;
        rec.soc = e_next.value;
        rec.step_profit = profit;
        rec.cumulative_profit = cash.value();
        if (conformal) {
            rec.has_gamma = true;
            rec.gamma = gamma_used;
        }
        result.trajectory.push_back(rec);

        if (need_correction) {
            pending = PendingStep{f.marginal, f.value_offset, price, e.value, e_next.value,
                                  gamma_used};
            has_pending = true;
        }
        e = e_next;
    };

    for (std::size_t t = 0; t < T; ++t) {
        try {
            run_step(t);
        } catch (const Error& err) {
            throw Error(err.code(), std::string(err.what()) + " (step " + std::to_string(t) + ")");
        }
    }

    summary.strategy = strategy_name(cfg.strategy);
    summary.steps = T;
    summary.seed = cfg.seed;
    summary.final_soc = e.value;
    summary.cash_profit = cash.value();
    summary.terminal_value = ValueCurve(terminal).evaluate(e.value);
    summary.profit = summary.cash_profit + summary.terminal_value;

    const OracleReference oracle =
        offline_oracle(prices, spec, Soc{summary.initial_soc}, terminal, cfg.curve_segments);
    summary.oracle_profit = oracle.profit;
    summary.regret = compute_regret(summary.profit, oracle.profit);

    if (conformal) {
        summary.conformal = true;
        summary.epsilon = ccfg.epsilon;
        summary.rho = ccfg.rho;
        summary.final_gamma = state.gamma;
        summary.min_gamma = *std::min_element(ledger.gamma_trace.begin(),
                                              ledger.gamma_trace.end());
        summary.cumulative_risk = state.steps == 0 ? 0.0 : cumulative_risk(state);
        summary.risk_bound =
            state.steps == 0
                ? ccfg.epsilon
                : ccfg.epsilon + (ccfg.gamma_init - summary.min_gamma) /
                                     (ccfg.rho * static_cast<double>(state.steps));
        result.ledger = std::move(ledger);
    }

    result.summary = std::move(summary);
    return result;
}

double compute_regret(double run_profit, double oracle_profit) {
    return oracle_profit - run_profit;
}

std::string trajectory_to_csv(const std::vector<TrajectoryRecord>& records) {
    std::ostringstream out;
    out << "t,timestamp,price,gamma,p,b,soc,step_profit,cumulative_profit,"
           "loss_clipped,cumulative_risk\n";
    for (const TrajectoryRecord& r : records) {
        out << r.step << ',' << format_iso8601_utc(r.timestamp) << ',' << fmt_double(r.price)
            << ',';
        if (r.has_gamma) out << fmt_double(r.gamma);
        out << ',' << fmt_double(r.discharge) << ',' << fmt_double(r.charge) << ','
            << fmt_double(r.soc) << ',' << fmt_double(r.step_profit) << ','
            << fmt_double(r.cumulative_profit) << ',';
        if (r.has_loss) out << fmt_double(r.loss_clipped);
        out << ',';
        if (r.has_loss) out << fmt_double(r.cumulative_risk);
        out << '\n';
    }
    return out.str();
}

std::string ledger_to_csv(const RiskLedger& ledger) {
    std::ostringstream out;
    out << "t,gamma,loss_raw,loss_clipped,cumulative_risk\n";
    for (std::size_t i = 0; i < ledger.losses.size(); ++i) {
        out << i << ',' << fmt_double(ledger.gamma_trace[i + 1]) << ','
            << fmt_double(ledger.raw_losses[i]) << ',' << fmt_double(ledger.losses[i]) << ','
            << fmt_double(ledger.cumulative_risk[i]) << '\n';
    }
    return out.str();
}

std::string summary_to_json(const RunSummary& summary) {
    nlohmann::ordered_json j;
    j["strategy"] = summary.strategy;
    j["steps"] = summary.steps;
    j["seed"] = summary.seed;
    j["initial_soc"] = summary.initial_soc;
    j["final_soc"] = summary.final_soc;
    j["cash_profit"] = summary.cash_profit;
    j["terminal_value"] = summary.terminal_value;
    j["profit"] = summary.profit;
    j["oracle_profit"] = summary.oracle_profit;
    j["regret"] = summary.regret;
    if (summary.conformal) {
        j["epsilon"] = summary.epsilon;
        j["rho"] = summary.rho;
        j["final_gamma"] = summary.final_gamma;
        j["min_gamma"] = summary.min_gamma;
        j["cumulative_risk"] = summary.cumulative_risk;
        j["risk_bound"] = summary.risk_bound;
        j["max_risk_identity_residual"] = summary.max_risk_identity_residual;
    }
    if (summary.has_forecast_accuracy) {
        j["forecast_r2"] = summary.forecast_r2;
        j["forecast_mae"] = summary.forecast_mae;
        j["forecast_r2_degenerate"] = summary.forecast_r2_degenerate;
    }
    if (summary.has_td_diagnostics) j["max_abs_td_error"] = summary.max_abs_td_error;
    return j.dump(2) + "\n";
}

std::vector<SweepRow> run_sweep(const ConfigMap& base, const std::string& param,
                                const std::vector<double>& values, std::size_t jobs) {
    if (values.empty()) throw_config("sweep needs at least one value");
    if (jobs == 0) {
        jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    auto run_one = [&base, &param](double value) {
        ConfigMap map = base;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        map.set(param, buf);
        return run_backtest(RunConfig::from_map(map)).summary;
    };

    std::vector<RunSummary> summaries(values.size());
    for (std::size_t begin = 0; begin < values.size(); begin += jobs) {
        const std::size_t end = std::min(values.size(), begin + jobs);
        std::vector<std::future<RunSummary>> batch;
        batch.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, run_one, values[i]));
        }
        for (std::size_t i = begin; i < end; ++i) summaries[i] = batch[i - begin].get();
    }

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (const auto& [name, metric_value] : summaries[i].metrics()) {
            rows.push_back(SweepRow{param, values[i], name, metric_value});
        }
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "param,value,metric,metric_value\n";
    for (const SweepRow& r : rows) {
        out << r.param << ',' << fmt_double(r.value) << ',' << r.metric << ','
            << fmt_double(r.metric_value) << '\n';
    }
    return out.str();
}

}  // namespace storarb
