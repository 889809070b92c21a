#pragma once

#include <cstdint>
#include <string>

#include "baselines.hpp"
#include "config.hpp"
#include "controller.hpp"
#include "domain.hpp"
#include "forecast.hpp"
#include "prices.hpp"

namespace storarb {

enum class StrategyKind {
    idle,
    risk_neutral,
    cc_prediction_error,
    cc_value_error,
    cvar,
    chance_constrained,
    robust,
    switching_cost,
};

std::string strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);
bool strategy_is_conformal(StrategyKind kind) noexcept;

enum class PriceSourceKind { synthetic, csv };
enum class ForecasterKind { oracle, noisy };
enum class TerminalKind { zero, target_soc };

// Fully resolved run description. Built from a ConfigMap (strict: unknown
// keys are config errors) so CLI --set overrides and sweep parameters share
// one dotted-path namespace.
struct RunConfig {
    StorageSpec storage;
    // > 0 means storage.power_limit_per_step is derived from this MW rating
    // and the price interval once prices are available.
    double power_limit_mw = 0.0;

    PriceSourceKind price_source = PriceSourceKind::synthetic;
    std::string price_path;
    bool allow_gaps = false;
    std::size_t steps = 2016;
    PriceGenSpec gen;

    std::size_t curve_segments = 50;
    TerminalKind terminal_kind = TerminalKind::zero;
    double terminal_target_fraction = 0.5;
    double terminal_salvage = 0.0;
    bool terminal_salvage_auto = true;  // salvage defaults to the mean price

    ForecasterKind forecaster = ForecasterKind::oracle;
    NoisyOracleConfig noise;
    bool noise_seed_set = false;  // unset -> derived from run seed
    std::size_t forecaster_grid = 50;

    StrategyKind strategy = StrategyKind::risk_neutral;
    ControllerConfig controller;
    CvarConfig cvar;
    bool cvar_seed_set = false;
    ChanceConfig chance;
    RobustConfig robust;
    SwitchingConfig switching;

    std::uint64_t seed = 1;
    double initial_soc_fraction = 0.5;
    bool td_diagnostics = false;

    static RunConfig from_map(const ConfigMap& map);
    void validate() const;
};

// Deterministic stream split so price synthesis, forecast noise, and
// scenario noise differ while all following from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace storarb
