// storarb command-line front end. Talks to the core exclusively through the
// C API in storarb.h; exit codes mirror storarb_status (0 ok, 2 config,
// 3 data, 4 numeric).

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "storarb.h"

namespace {

struct ConfigDeleter {
    void operator()(storarb_config* c) const { storarb_config_free(c); }
};
struct ResultDeleter {
    void operator()(storarb_result* r) const { storarb_result_free(r); }
};
using ConfigPtr = std::unique_ptr<storarb_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<storarb_result, ResultDeleter>;

// Owned C string from the API.
struct ApiString {
    char* ptr = nullptr;
    ~ApiString() { storarb_string_free(ptr); }
    ApiString() = default;
    ApiString(const ApiString&) = delete;
    ApiString& operator=(const ApiString&) = delete;
};

int fail(storarb_status status) {
    std::fprintf(stderr, "error: %s\n", storarb_last_error());
    return static_cast<int>(status);
}

int write_file(const std::string& path, const char* text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
        std::fprintf(stderr, "error: cannot open %s for writing\n", path.c_str());
        return static_cast<int>(STORARB_ERR_DATA);
    }
    const size_t len = std::strlen(text);
    const size_t written = std::fwrite(text, 1, len, f);
    std::fclose(f);
    if (written != len) {
        std::fprintf(stderr, "error: short write to %s\n", path.c_str());
        return static_cast<int>(STORARB_ERR_DATA);
    }
    return 0;
}

// Shared options: config source plus dotted-path overrides.
struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string strategy;
    long long seed = -1;
    bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* copt = cmd->add_option("-c,--config", opts.config_path, "run configuration file");
    if (config_required) copt->required()->check(CLI::ExistingFile);
    cmd->add_option("--set", opts.sets,
                    "override a config key, e.g. --set controller.epsilon=0.2 (repeatable)");
    cmd->add_option("--strategy", opts.strategy,
                    "override run.strategy (idle, risk_neutral, cc_prediction_error, "
                    "cc_value_error, cvar, chance_constrained, robust, switching_cost)");
    cmd->add_option("--seed", opts.seed, "override run.seed")
        ->check(CLI::NonNegativeNumber)
        ->each([&opts](const std::string&) { opts.has_seed = true; });
}

// Builds the config handle from --config/--set/--strategy/--seed.
storarb_status build_config(const CommonOpts& opts, ConfigPtr& out) {
    storarb_config* raw = nullptr;
    storarb_status st = opts.config_path.empty()
                            ? storarb_config_create(&raw)
                            : storarb_config_load(opts.config_path.c_str(), &raw);
    if (st != STORARB_OK) return st;
    out.reset(raw);
    for (const std::string& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return STORARB_ERR_CONFIG;
        }
        st = storarb_config_set(out.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != STORARB_OK) return st;
    }
    if (!opts.strategy.empty()) {
        st = storarb_config_set(out.get(), "run.strategy", opts.strategy.c_str());
        if (st != STORARB_OK) return st;
    }
    if (opts.has_seed) {
        st = storarb_config_set(out.get(), "run.seed", std::to_string(opts.seed).c_str());
        if (st != STORARB_OK) return st;
    }
    return STORARB_OK;
}

// simulate/oracle shared tail: run, then emit summary (stdout) and optional files.
int emit_run(const ResultPtr& result, const std::string& out_dir) {
    ApiString summary;
    storarb_status st = storarb_result_summary_json(result.get(), &summary.ptr);
    if (st != STORARB_OK) return fail(st);
    if (out_dir.empty()) {
        std::fputs(summary.ptr, stdout);
        return 0;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create %s: %s\n", out_dir.c_str(),
                     ec.message().c_str());
        return static_cast<int>(STORARB_ERR_DATA);
    }
    ApiString trajectory;
    st = storarb_result_trajectory_csv(result.get(), &trajectory.ptr);
    if (st != STORARB_OK) return fail(st);
    if (int rc = write_file(out_dir + "/trajectory.csv", trajectory.ptr); rc != 0) return rc;
    if (int rc = write_file(out_dir + "/summary.json", summary.ptr); rc != 0) return rc;
    ApiString ledger;
    st = storarb_result_ledger_csv(result.get(), &ledger.ptr);
    if (st != STORARB_OK) return fail(st);
    // More than just the header row => the run had a conformal controller.
    if (std::strchr(ledger.ptr, '\n') != nullptr &&
        *(std::strchr(ledger.ptr, '\n') + 1) != '\0') {
        if (int rc = write_file(out_dir + "/ledger.csv", ledger.ptr); rc != 0) return rc;
    }
    std::fputs(summary.ptr, stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"storarb: risk-aware online energy-storage arbitrage backtester"};
    app.require_subcommand(1);
    std::string version = storarb_version();
    app.set_version_flag("--version", version);

    CommonOpts sim_opts;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "run the configured strategy over the price series");
    add_common(sim, sim_opts, true);
    sim->add_option("-o,--out", sim_out,
                    "directory for trajectory.csv and summary.json (summary also on stdout)");

    CommonOpts oracle_opts;
    std::string oracle_out;
    auto* oracle = app.add_subcommand(
        "oracle", "run the full-information offline reference on the same prices");
    add_common(oracle, oracle_opts, true);
    oracle->add_option("-o,--out", oracle_out, "directory for trajectory.csv and summary.json");

    CommonOpts sweep_opts;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::string sweep_out;
    std::size_t sweep_jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "rerun the config over a grid of one parameter");
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--param", sweep_param, "dotted config key to vary")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--jobs", sweep_jobs, "parallel runs (0 = hardware concurrency)");
    sweep->add_option("-o,--out", sweep_out, "CSV output path (default stdout)");

    CommonOpts gen_opts;
    std::string gen_out;
    std::size_t gen_steps = 0;
    auto* gen = app.add_subcommand("gen-prices", "emit the configured price series as CSV");
    add_common(gen, gen_opts, false);
    gen->add_option("--steps", gen_steps, "override prices.steps");
    gen->add_option("-o,--out", gen_out, "CSV output path (default stdout)");

    CommonOpts cal_opts;
    double cal_target = 0.0;
    double cal_tolerance = 0.0;
    std::string cal_out;
    auto* cal = app.add_subcommand(
        "calibrate-forecaster",
        "scale the noisy forecaster template to a target R^2 against ground truth");
    add_common(cal, cal_opts, true);
    cal->add_option("--target-r2", cal_target, "desired forecast R^2 (<= 1)")->required();
    cal->add_option("--tolerance", cal_tolerance, "acceptable |achieved - target| (default 0.05)");
    cal->add_option("-o,--out", cal_out, "JSON output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(STORARB_ERR_CONFIG);
    }

    if (sim->parsed() || oracle->parsed()) {
        const bool is_oracle = oracle->parsed();
        const CommonOpts& opts = is_oracle ? oracle_opts : sim_opts;
        const std::string& out_dir = is_oracle ? oracle_out : sim_out;
        ConfigPtr cfg;
        if (storarb_status st = build_config(opts, cfg); st != STORARB_OK) return fail(st);
        storarb_result* raw = nullptr;
        const storarb_status st =
            is_oracle ? storarb_run_oracle(cfg.get(), &raw) : storarb_run(cfg.get(), &raw);
        if (st != STORARB_OK) return fail(st);
        ResultPtr result(raw);
        return emit_run(result, out_dir);
    }

    if (sweep->parsed()) {
        ConfigPtr cfg;
        if (storarb_status st = build_config(sweep_opts, cfg); st != STORARB_OK) return fail(st);
        ApiString csv;
        const storarb_status st =
            storarb_sweep(cfg.get(), sweep_param.c_str(), sweep_values.data(),
                          sweep_values.size(), sweep_jobs, &csv.ptr);
        if (st != STORARB_OK) return fail(st);
        if (sweep_out.empty()) {
            std::fputs(csv.ptr, stdout);
            return 0;
        }
        return write_file(sweep_out, csv.ptr);
    }

    if (gen->parsed()) {
        ConfigPtr cfg;
        if (storarb_status st = build_config(gen_opts, cfg); st != STORARB_OK) return fail(st);
        if (gen_steps > 0) {
            const storarb_status st = storarb_config_set(cfg.get(), "prices.steps",
                                                         std::to_string(gen_steps).c_str());
            if (st != STORARB_OK) return fail(st);
        }
        ApiString csv;
        if (storarb_status st = storarb_generate_prices(cfg.get(), &csv.ptr); st != STORARB_OK) {
            return fail(st);
        }
        if (gen_out.empty()) {
            std::fputs(csv.ptr, stdout);
            return 0;
        }
        return write_file(gen_out, csv.ptr);
    }

    if (cal->parsed()) {
        ConfigPtr cfg;
        if (storarb_status st = build_config(cal_opts, cfg); st != STORARB_OK) return fail(st);
        ApiString json;
        const storarb_status st =
            storarb_calibrate_forecaster(cfg.get(), cal_target, cal_tolerance, &json.ptr);
        if (st != STORARB_OK) return fail(st);
        if (cal_out.empty()) {
            std::fputs(json.ptr, stdout);
            return 0;
        }
        return write_file(cal_out, json.ptr);
    }

    return 0;
}
