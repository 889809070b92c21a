#include "run_config.hpp"

#include <cmath>
#include <set>
#include <string>

namespace storarb {
namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "storage.power_limit_per_step",
        "storage.power_limit_mw",
        "storage.capacity",
        "storage.efficiency",
        "storage.marginal_cost",
        "prices.source",
        "prices.path",
        "prices.allow_gaps",
        "prices.steps",
        "prices.level",
        "prices.daily_amplitude",
        "prices.secondary_amplitude",
        "prices.noise_std",
        "prices.noise_halflife",
        "prices.spike_rate",
        "prices.spike_scale",
        "prices.spike_positive_share",
        "prices.interval_seconds",
        "prices.start",
        "valuation.curve_segments",
        "valuation.terminal",
        "valuation.terminal_target_fraction",
        "valuation.terminal_salvage",
        "forecaster.kind",
        "forecaster.noise_scale",
        "forecaster.bias",
        "forecaster.correlation_halflife",
        "forecaster.flip_probability",
        "forecaster.seed",
        "forecaster.grid_segments",
        "run.strategy",
        "run.seed",
        "run.initial_soc_fraction",
        "run.td_diagnostics",
        "controller.epsilon",
        "controller.rho",
        "controller.sigma",
        "controller.gamma_init",
        "controller.gamma_bar",
        "controller.k",
        "controller.value_loss_scale",
        "controller.mapping",
        "cvar.mu",
        "cvar.nu",
        "cvar.scenario_count",
        "cvar.scenario_noise_scale",
        "cvar.scenario_seed",
        "cvar.grid_points",
        "chance.gamma",
        "chance.price_std",
        "chance.horizon",
        "robust.gamma",
        "robust.radius_scale",
        "robust.horizon",
        "switching.zeta",
    };
    return keys;
}

std::size_t get_size(const ConfigMap& map, const std::string& key, std::size_t fallback) {
    return static_cast<std::size_t>(map.get_uint(key, fallback));
}

}  // namespace

std::string strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::idle: return "idle";
        case StrategyKind::risk_neutral: return "risk_neutral";
        case StrategyKind::cc_prediction_error: return "cc_prediction_error";
        case StrategyKind::cc_value_error: return "cc_value_error";
        case StrategyKind::cvar: return "cvar";
        case StrategyKind::chance_constrained: return "chance_constrained";
        case StrategyKind::robust: return "robust";
        case StrategyKind::switching_cost: return "switching_cost";
    }
    throw_config("unknown strategy kind");
}

StrategyKind strategy_from_name(const std::string& name) {
    for (StrategyKind k : {StrategyKind::idle, StrategyKind::risk_neutral,
                           StrategyKind::cc_prediction_error, StrategyKind::cc_value_error,
                           StrategyKind::cvar, StrategyKind::chance_constrained,
                           StrategyKind::robust, StrategyKind::switching_cost}) {
        if (strategy_name(k) == name) return k;
    }
    throw_config("unknown strategy '" + name +
                 "' (expected idle, risk_neutral, cc_prediction_error, cc_value_error, "
                 "cvar, chance_constrained, robust, or switching_cost)");
}

bool strategy_is_conformal(StrategyKind kind) noexcept {
    return kind == StrategyKind::cc_prediction_error || kind == StrategyKind::cc_value_error;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    // splitmix64 finalizer over (seed, stream); decorrelates the derived streams.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RunConfig RunConfig::from_map(const ConfigMap& map) {
    for (const auto& [key, value] : map.entries()) {
        (void)value;
        if (known_keys().count(key) == 0) throw_config("unknown config key '" + key + "'");
    }

    RunConfig rc;

    rc.storage.power_limit_per_step =
        map.get_double("storage.power_limit_per_step", rc.storage.power_limit_per_step);
    rc.power_limit_mw = map.get_double("storage.power_limit_mw", 0.0);
    if (map.has("storage.power_limit_mw") && map.has("storage.power_limit_per_step")) {
        throw_config("set storage.power_limit_per_step or storage.power_limit_mw, not both");
    }
    rc.storage.capacity = map.get_double("storage.capacity", rc.storage.capacity);
    rc.storage.efficiency = map.get_double("storage.efficiency", rc.storage.efficiency);
    rc.storage.marginal_cost = map.get_double("storage.marginal_cost", rc.storage.marginal_cost);

    const std::string source = map.get_string("prices.source", "synthetic");
    if (source == "synthetic") {
        rc.price_source = PriceSourceKind::synthetic;
    } else if (source == "csv") {
        rc.price_source = PriceSourceKind::csv;
        if (!map.has("prices.path")) throw_config("prices.source = \"csv\" requires prices.path");
    } else {
        throw_config("prices.source must be \"synthetic\" or \"csv\", got '" + source + "'");
    }
    rc.price_path = map.get_string("prices.path", "");
    rc.allow_gaps = map.get_bool("prices.allow_gaps", false);
    rc.steps = get_size(map, "prices.steps", rc.steps);
    rc.gen.level = map.get_double("prices.level", rc.gen.level);
    rc.gen.daily_amplitude = map.get_double("prices.daily_amplitude", rc.gen.daily_amplitude);
    rc.gen.secondary_amplitude =
        map.get_double("prices.secondary_amplitude", rc.gen.secondary_amplitude);
    rc.gen.noise_std = map.get_double("prices.noise_std", rc.gen.noise_std);
    rc.gen.noise_halflife = map.get_double("prices.noise_halflife", rc.gen.noise_halflife);
    rc.gen.spike_rate = map.get_double("prices.spike_rate", rc.gen.spike_rate);
    rc.gen.spike_scale = map.get_double("prices.spike_scale", rc.gen.spike_scale);
    rc.gen.spike_positive_share =
        map.get_double("prices.spike_positive_share", rc.gen.spike_positive_share);
    rc.gen.interval_seconds = map.get_int("prices.interval_seconds", rc.gen.interval_seconds);
    if (map.has("prices.start")) {
        rc.gen.start_epoch = parse_iso8601_utc(map.get_string("prices.start", ""));
    }

    rc.curve_segments = get_size(map, "valuation.curve_segments", rc.curve_segments);
    const std::string terminal = map.get_string("valuation.terminal", "zero");
    if (terminal == "zero") {
        rc.terminal_kind = TerminalKind::zero;
    } else if (terminal == "target_soc") {
        rc.terminal_kind = TerminalKind::target_soc;
    } else {
        throw_config("valuation.terminal must be \"zero\" or \"target_soc\", got '" + terminal +
                     "'");
    }
    rc.terminal_target_fraction =
        map.get_double("valuation.terminal_target_fraction", rc.terminal_target_fraction);
    if (map.has("valuation.terminal_salvage")) {
        rc.terminal_salvage = map.get_double("valuation.terminal_salvage", 0.0);
        rc.terminal_salvage_auto = false;
    }

    const std::string fk = map.get_string("forecaster.kind", "oracle");
    if (fk == "oracle") {
        rc.forecaster = ForecasterKind::oracle;
    } else if (fk == "noisy") {
        rc.forecaster = ForecasterKind::noisy;
    } else {
        throw_config("forecaster.kind must be \"oracle\" or \"noisy\", got '" + fk + "'");
    }
    rc.noise.noise_scale = map.get_double("forecaster.noise_scale", rc.noise.noise_scale);
    rc.noise.bias = map.get_double("forecaster.bias", rc.noise.bias);
    rc.noise.correlation_halflife =
        map.get_double("forecaster.correlation_halflife", rc.noise.correlation_halflife);
    rc.noise.flip_probability =
        map.get_double("forecaster.flip_probability", rc.noise.flip_probability);
    if (map.has("forecaster.seed")) {
        rc.noise.seed = map.get_uint("forecaster.seed", 0);
        rc.noise_seed_set = true;
    }
    rc.forecaster_grid = get_size(map, "forecaster.grid_segments", rc.forecaster_grid);

    rc.strategy = strategy_from_name(map.get_string("run.strategy", "risk_neutral"));
    rc.seed = map.get_uint("run.seed", rc.seed);
    rc.initial_soc_fraction = map.get_double("run.initial_soc_fraction", rc.initial_soc_fraction);
    rc.td_diagnostics = map.get_bool("run.td_diagnostics", false);

    rc.controller.epsilon = map.get_double("controller.epsilon", rc.controller.epsilon);
    rc.controller.rho = map.get_double("controller.rho", rc.controller.rho);
    rc.controller.sigma = map.get_double("controller.sigma", rc.controller.sigma);
    rc.controller.gamma_init = map.get_double("controller.gamma_init", rc.controller.gamma_init);
    rc.controller.gamma_bar = map.get_double("controller.gamma_bar", rc.controller.gamma_bar);
    rc.controller.k = map.get_double("controller.k", rc.controller.k);
    rc.controller.value_loss_scale =
        map.get_double("controller.value_loss_scale", rc.controller.value_loss_scale);
    const std::string mapping = map.get_string("controller.mapping", "decreasing_exp");
    if (mapping == "decreasing_exp") {
        rc.controller.mapping_kind = MappingKind::decreasing_exp;
    } else if (mapping == "saturating_exp") {
        rc.controller.mapping_kind = MappingKind::saturating_exp;
    } else {
        throw_config("controller.mapping must be \"decreasing_exp\" or \"saturating_exp\", got '" +
                     mapping + "'");
    }
    rc.controller.loss_kind = rc.strategy == StrategyKind::cc_value_error
                                  ? LossKind::value_error
                                  : LossKind::prediction_error;

    rc.cvar.mu = map.get_double("cvar.mu", rc.cvar.mu);
    rc.cvar.nu = map.get_double("cvar.nu", rc.cvar.nu);
    rc.cvar.scenario_count = get_size(map, "cvar.scenario_count", rc.cvar.scenario_count);
    rc.cvar.scenario_noise_scale =
        map.get_double("cvar.scenario_noise_scale", rc.cvar.scenario_noise_scale);
    if (map.has("cvar.scenario_seed")) {
        rc.cvar.scenario_seed = map.get_uint("cvar.scenario_seed", 0);
        rc.cvar_seed_set = true;
    }
    rc.cvar.grid_points = get_size(map, "cvar.grid_points", rc.cvar.grid_points);

    rc.chance.gamma = map.get_double("chance.gamma", rc.chance.gamma);
    rc.chance.price_std = map.get_double("chance.price_std", rc.chance.price_std);
    rc.chance.horizon = get_size(map, "chance.horizon", rc.chance.horizon);

    rc.robust.gamma = map.get_double("robust.gamma", rc.robust.gamma);
    rc.robust.radius_scale = map.get_double("robust.radius_scale", rc.robust.radius_scale);
    rc.robust.horizon = get_size(map, "robust.horizon", rc.robust.horizon);

    rc.switching.zeta = map.get_double("switching.zeta", rc.switching.zeta);

    rc.validate();
    return rc;
}

void RunConfig::validate() const {
    if (power_limit_mw < 0.0 || !std::isfinite(power_limit_mw)) {
        throw_config("storage.power_limit_mw must be finite and non-negative");
    }
    if (power_limit_mw == 0.0) {
        storage.validate();
    } else {
        StorageSpec probe = storage;
        probe.power_limit_per_step = 1.0;  // placeholder until the interval is known
        probe.validate();
    }
    if (price_source == PriceSourceKind::synthetic) {
        gen.validate();
        if (steps < 2) throw_config("prices.steps must be at least 2");
    }
    if (terminal_target_fraction < 0.0 || terminal_target_fraction > 1.0) {
        throw_config("valuation.terminal_target_fraction must lie in [0, 1]");
    }
    if (!std::isfinite(terminal_salvage)) throw_config("valuation.terminal_salvage must be finite");
    noise.validate();
    controller.validate();
    cvar.validate();
    chance.validate();
    robust.validate();
    switching.validate();
    if (initial_soc_fraction < 0.0 || initial_soc_fraction > 1.0) {
        throw_config("run.initial_soc_fraction must lie in [0, 1]");
    }
}

}  // namespace storarb
