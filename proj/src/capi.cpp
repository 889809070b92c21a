#include "storarb.h"

#include <cstring>
#include <exception>
#include <map>
#include <new>
#include <string>

#include "backtest.hpp"
#include "config.hpp"
#include "forecast.hpp"
#include "run_config.hpp"

#include "json.hpp"

namespace {

thread_local std::string g_last_error;

storarb_status to_status(storarb::ErrorCode code) {
    switch (code) {
        case storarb::ErrorCode::config: return STORARB_ERR_CONFIG;
        case storarb::ErrorCode::data: return STORARB_ERR_DATA;
        case storarb::ErrorCode::numeric: return STORARB_ERR_NUMERIC;
    }
    return STORARB_ERR_NUMERIC;
}

// Runs `fn` translating C++ exceptions into statuses + last-error text.
template <typename Fn>
storarb_status guarded(Fn&& fn) {
    try {
        fn();
        return STORARB_OK;
    } catch (const storarb::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return STORARB_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return STORARB_ERR_NUMERIC;
    } catch (...) {
        g_last_error = "unknown error";
        return STORARB_ERR_NUMERIC;
    }
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) storarb::throw_config(what);
}

}  // namespace

struct storarb_config {
    storarb::ConfigMap map;
};

struct storarb_result {
    storarb::RunResult run;
    std::map<std::string, double> metric_index;

    explicit storarb_result(storarb::RunResult r) : run(std::move(r)) {
        for (const auto& [name, value] : run.summary.metrics()) metric_index[name] = value;
    }
};

extern "C" {

const char* storarb_version(void) { return "1.0.0"; }

const char* storarb_last_error(void) { return g_last_error.c_str(); }

storarb_status storarb_config_create(storarb_config** out) {
    return guarded([&] {
        require(out != nullptr, "out pointer is null");
        *out = new storarb_config{};
    });
}

storarb_status storarb_config_load(const char* path, storarb_config** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "path/out pointer is null");
        auto map = storarb::ConfigMap::parse_file(path);
        *out = new storarb_config{std::move(map)};
    });
}

storarb_status storarb_config_parse(const char* text, storarb_config** out) {
    return guarded([&] {
        require(text != nullptr && out != nullptr, "text/out pointer is null");
        auto map = storarb::ConfigMap::parse_text(text);
        *out = new storarb_config{std::move(map)};
    });
}

storarb_status storarb_config_set(storarb_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        require(cfg != nullptr && key != nullptr && value != nullptr,
                "config/key/value pointer is null");
        cfg->map.set(key, value);
    });
}

void storarb_config_free(storarb_config* cfg) { delete cfg; }

storarb_status storarb_run(const storarb_config* cfg, storarb_result** out) {
    return guarded([&] {
        require(cfg != nullptr && out != nullptr, "config/out pointer is null");
        auto rc = storarb::RunConfig::from_map(cfg->map);
        *out = new storarb_result(storarb::run_backtest(rc));
    });
}

storarb_status storarb_run_oracle(const storarb_config* cfg, storarb_result** out) {
    return guarded([&] {
        require(cfg != nullptr && out != nullptr, "config/out pointer is null");
        storarb::ConfigMap map = cfg->map;
        map.set("run.strategy", "risk_neutral");
        map.set("forecaster.kind", "oracle");
        auto rc = storarb::RunConfig::from_map(map);
        *out = new storarb_result(storarb::run_backtest(rc));
    });
}

storarb_status storarb_sweep(const storarb_config* cfg, const char* param, const double* values,
                             size_t count, size_t jobs, char** csv_out) {
    return guarded([&] {
        require(cfg != nullptr && param != nullptr && csv_out != nullptr,
                "config/param/out pointer is null");
        require(values != nullptr && count > 0, "sweep needs at least one value");
        std::vector<double> vals(values, values + count);
        auto rows = storarb::run_sweep(cfg->map, param, vals, jobs);
        *csv_out = copy_string(storarb::sweep_to_csv(rows));
    });
}

storarb_status storarb_generate_prices(const storarb_config* cfg, char** csv_out) {
    return guarded([&] {
        require(cfg != nullptr && csv_out != nullptr, "config/out pointer is null");
        auto rc = storarb::RunConfig::from_map(cfg->map);
        *csv_out = copy_string(storarb::prices_to_csv(storarb::resolve_prices(rc)));
    });
}

storarb_status storarb_calibrate_forecaster(const storarb_config* cfg, double target_r2,
                                            double tolerance, char** json_out) {
    return guarded([&] {
        require(cfg != nullptr && json_out != nullptr, "config/out pointer is null");
        auto rc = storarb::RunConfig::from_map(cfg->map);
        const auto prices = storarb::resolve_prices(rc);
        const auto spec = storarb::resolve_storage(rc, prices);
        const auto terminal = storarb::resolve_terminal(rc, spec, prices);
        const auto truth =
            storarb::backward_induct(prices, spec, terminal, rc.curve_segments);
        std::vector<storarb::Forecast> targets;
        targets.reserve(prices.size());
        for (size_t t = 0; t < prices.size(); ++t) {
            targets.push_back(
                storarb::Forecast{truth.marginals[t + 1], truth.offsets[t + 1]});
        }
        storarb::NoisyOracleConfig tmpl = rc.noise;
        if (!rc.noise_seed_set) tmpl.seed = storarb::derive_seed(rc.seed, 1);
        if (tolerance <= 0.0) tolerance = 0.05;
        const auto cal = storarb::calibrate_noise(target_r2, targets, tmpl,
                                                  rc.forecaster_grid, tolerance);
        nlohmann::ordered_json j;
        j["target_r2"] = target_r2;
        j["achieved_r2"] = cal.report.r_squared;
        j["mean_abs_error"] = cal.report.mean_abs_error;
        j["forecaster"] = {
            {"kind", "noisy"},
            {"noise_scale", cal.config.noise_scale},
            {"bias", cal.config.bias},
            {"correlation_halflife", cal.config.correlation_halflife},
            {"flip_probability", cal.config.flip_probability},
            {"seed", cal.config.seed},
        };
        *json_out = copy_string(j.dump(2) + "\n");
    });
}

size_t storarb_result_num_steps(const storarb_result* result) {
    return result == nullptr ? 0 : result->run.trajectory.size();
}

storarb_status storarb_result_metric(const storarb_result* result, const char* name,
                                     double* out) {
    return guarded([&] {
        require(result != nullptr && name != nullptr && out != nullptr,
                "result/name/out pointer is null");
        auto it = result->metric_index.find(name);
        if (it == result->metric_index.end()) {
            storarb::throw_config(std::string("unknown metric '") + name + "'");
        }
        *out = it->second;
    });
}

storarb_status storarb_result_trajectory_csv(const storarb_result* result, char** out) {
    return guarded([&] {
        require(result != nullptr && out != nullptr, "result/out pointer is null");
        *out = copy_string(storarb::trajectory_to_csv(result->run.trajectory));
    });
}

storarb_status storarb_result_ledger_csv(const storarb_result* result, char** out) {
    return guarded([&] {
        require(result != nullptr && out != nullptr, "result/out pointer is null");
        *out = copy_string(storarb::ledger_to_csv(result->run.ledger));
    });
}

storarb_status storarb_result_summary_json(const storarb_result* result, char** out) {
    return guarded([&] {
        require(result != nullptr && out != nullptr, "result/out pointer is null");
        *out = copy_string(storarb::summary_to_json(result->run.summary));
    });
}

void storarb_result_free(storarb_result* result) { delete result; }

void storarb_string_free(char* s) { delete[] s; }

}  // extern "C"
