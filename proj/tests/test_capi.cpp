// Exercises the shared-library C interface end to end: status codes, error
// text, handle lifecycle, and the serialized artifacts. Built as a separate
// binary that links the shared library (not the core objects) so the exported
// surface itself is what gets tested.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstddef>
#include <string>

#include "doctest.h"
#include "storarb.h"

namespace {

struct ConfigHandle {
    storarb_config* ptr = nullptr;
    ~ConfigHandle() { storarb_config_free(ptr); }
};

struct ResultHandle {
    storarb_result* ptr = nullptr;
    ~ResultHandle() { storarb_result_free(ptr); }
};

struct StringHandle {
    char* ptr = nullptr;
    ~StringHandle() { storarb_string_free(ptr); }
    std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

// Small, fast run shared by several cases.
storarb_config* small_config(const char* strategy, const char* steps) {
    storarb_config* cfg = nullptr;
    REQUIRE(storarb_config_create(&cfg) == STORARB_OK);
    REQUIRE(storarb_config_set(cfg, "run.strategy", strategy) == STORARB_OK);
    REQUIRE(storarb_config_set(cfg, "prices.steps", steps) == STORARB_OK);
    return cfg;
}

}  // namespace

TEST_CASE("status enum pins the CLI exit codes") {
    CHECK(STORARB_OK == 0);
    CHECK(STORARB_ERR_CONFIG == 2);
    CHECK(STORARB_ERR_DATA == 3);
    CHECK(STORARB_ERR_NUMERIC == 4);
}

TEST_CASE("version and last-error are always readable") {
    REQUIRE(storarb_version() != nullptr);
    CHECK(std::string(storarb_version()) == "1.0.0");
    CHECK(storarb_last_error() != nullptr);  // never NULL, even before failures
}

TEST_CASE("null-pointer arguments are config errors, not crashes") {
    CHECK(storarb_config_create(nullptr) == STORARB_ERR_CONFIG);
    CHECK(storarb_config_load(nullptr, nullptr) == STORARB_ERR_CONFIG);
    CHECK(storarb_config_parse(nullptr, nullptr) == STORARB_ERR_CONFIG);
    CHECK(storarb_run(nullptr, nullptr) == STORARB_ERR_CONFIG);
    CHECK(storarb_run_oracle(nullptr, nullptr) == STORARB_ERR_CONFIG);
    CHECK(storarb_generate_prices(nullptr, nullptr) == STORARB_ERR_CONFIG);
    CHECK(std::string(storarb_last_error()).find("null") != std::string::npos);

    ConfigHandle cfg;
    REQUIRE(storarb_config_create(&cfg.ptr) == STORARB_OK);
    CHECK(storarb_config_set(cfg.ptr, nullptr, "1") == STORARB_ERR_CONFIG);
    CHECK(storarb_config_set(nullptr, "a", "1") == STORARB_ERR_CONFIG);

    // Free functions tolerate NULL.
    storarb_config_free(nullptr);
    storarb_result_free(nullptr);
    storarb_string_free(nullptr);
    CHECK(storarb_result_num_steps(nullptr) == 0);
}

TEST_CASE("config parse and load surface config errors with messages") {
    ConfigHandle bad;
    CHECK(storarb_config_parse("novalue\n", &bad.ptr) == STORARB_ERR_CONFIG);
    CHECK(std::string(storarb_last_error()).find("line 1") != std::string::npos);
    CHECK(storarb_config_load("definitely_missing.toml", &bad.ptr) == STORARB_ERR_CONFIG);
    CHECK(std::string(storarb_last_error()).find("cannot open") != std::string::npos);

    ConfigHandle ok;
    REQUIRE(storarb_config_parse("[run]\nseed = 3\n", &ok.ptr) == STORARB_OK);
    ResultHandle run;
    REQUIRE(storarb_run(ok.ptr, &run.ptr) == STORARB_OK);
    CHECK(storarb_result_num_steps(run.ptr) == 2016);
}

TEST_CASE("a full run through the C surface") {
    ConfigHandle cfg;
    cfg.ptr = small_config("cc_prediction_error", "120");
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.kind", "noisy") == STORARB_OK);
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.noise_scale", "8.0") == STORARB_OK);

    ResultHandle run;
    REQUIRE(storarb_run(cfg.ptr, &run.ptr) == STORARB_OK);
    CHECK(storarb_result_num_steps(run.ptr) == 120);

    double profit = 0.0, regret = 0.0, risk = 0.0;
    CHECK(storarb_result_metric(run.ptr, "profit", &profit) == STORARB_OK);
    CHECK(storarb_result_metric(run.ptr, "regret", &regret) == STORARB_OK);
    CHECK(storarb_result_metric(run.ptr, "cumulative_risk", &risk) == STORARB_OK);
    CHECK(risk >= 0.0);
    CHECK(risk <= 1.0);

    double dummy = 0.0;
    CHECK(storarb_result_metric(run.ptr, "not_a_metric", &dummy) == STORARB_ERR_CONFIG);
    CHECK(std::string(storarb_last_error()).find("unknown metric") != std::string::npos);

    StringHandle traj;
    REQUIRE(storarb_result_trajectory_csv(run.ptr, &traj.ptr) == STORARB_OK);
    CHECK(traj.str().rfind("t,timestamp,price,gamma,", 0) == 0);

    StringHandle ledger;
    REQUIRE(storarb_result_ledger_csv(run.ptr, &ledger.ptr) == STORARB_OK);
    CHECK(ledger.str().rfind("t,gamma,loss_raw,loss_clipped,cumulative_risk\n", 0) == 0);
    CHECK(ledger.str().size() > 50);  // conformal runs carry rows

    StringHandle json;
    REQUIRE(storarb_result_summary_json(run.ptr, &json.ptr) == STORARB_OK);
    CHECK(json.str().find("\"strategy\": \"cc_prediction_error\"") != std::string::npos);
    CHECK(json.str().find("\"cumulative_risk\":") != std::string::npos);

    // Identical configs give byte-identical artifacts through the C API too.
    ResultHandle again;
    REQUIRE(storarb_run(cfg.ptr, &again.ptr) == STORARB_OK);
    StringHandle traj2;
    REQUIRE(storarb_result_trajectory_csv(again.ptr, &traj2.ptr) == STORARB_OK);
    CHECK(traj.str() == traj2.str());
}

TEST_CASE("non-conformal runs have a header-only ledger") {
    ConfigHandle cfg;
    cfg.ptr = small_config("risk_neutral", "48");
    ResultHandle run;
    REQUIRE(storarb_run(cfg.ptr, &run.ptr) == STORARB_OK);
    StringHandle ledger;
    REQUIRE(storarb_result_ledger_csv(run.ptr, &ledger.ptr) == STORARB_OK);
    CHECK(ledger.str() == "t,gamma,loss_raw,loss_clipped,cumulative_risk\n");
}

TEST_CASE("oracle reference run matches the reported oracle profit") {
    ConfigHandle cfg;
    cfg.ptr = small_config("cc_value_error", "96");
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.kind", "noisy") == STORARB_OK);
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.noise_scale", "10.0") == STORARB_OK);

    ResultHandle run;
    REQUIRE(storarb_run(cfg.ptr, &run.ptr) == STORARB_OK);
    double reported_oracle = 0.0;
    REQUIRE(storarb_result_metric(run.ptr, "oracle_profit", &reported_oracle) == STORARB_OK);

    ResultHandle oracle;
    REQUIRE(storarb_run_oracle(cfg.ptr, &oracle.ptr) == STORARB_OK);
    double oracle_profit = 0.0;
    REQUIRE(storarb_result_metric(oracle.ptr, "profit", &oracle_profit) == STORARB_OK);

    const double scale = std::abs(reported_oracle) + 1.0;
    CHECK(std::abs(oracle_profit - reported_oracle) <= 1e-9 * scale);

    double run_profit = 0.0;
    REQUIRE(storarb_result_metric(run.ptr, "profit", &run_profit) == STORARB_OK);
    CHECK(run_profit <= oracle_profit + 1e-9 * scale);
}

TEST_CASE("run errors map onto the documented statuses") {
    ConfigHandle bad_strategy;
    REQUIRE(storarb_config_create(&bad_strategy.ptr) == STORARB_OK);
    REQUIRE(storarb_config_set(bad_strategy.ptr, "run.strategy", "yolo") == STORARB_OK);
    ResultHandle out;
    CHECK(storarb_run(bad_strategy.ptr, &out.ptr) == STORARB_ERR_CONFIG);
    CHECK(std::string(storarb_last_error()).find("unknown strategy") != std::string::npos);

    ConfigHandle missing_csv;
    REQUIRE(storarb_config_create(&missing_csv.ptr) == STORARB_OK);
    REQUIRE(storarb_config_set(missing_csv.ptr, "prices.source", "csv") == STORARB_OK);
    REQUIRE(storarb_config_set(missing_csv.ptr, "prices.path", "no_such_prices.csv") ==
            STORARB_OK);
    CHECK(storarb_run(missing_csv.ptr, &out.ptr) == STORARB_ERR_DATA);
    CHECK(std::string(storarb_last_error()).find("cannot open") != std::string::npos);
}

TEST_CASE("price generation through the C surface") {
    ConfigHandle cfg;
    cfg.ptr = small_config("risk_neutral", "50");
    StringHandle csv;
    REQUIRE(storarb_generate_prices(cfg.ptr, &csv.ptr) == STORARB_OK);
    const std::string text = csv.str();
    CHECK(text.rfind("timestamp,price\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 51);  // header + one row per step

    StringHandle csv2;
    REQUIRE(storarb_generate_prices(cfg.ptr, &csv2.ptr) == STORARB_OK);
    CHECK(text == csv2.str());
}

TEST_CASE("parameter sweep through the C surface") {
    ConfigHandle cfg;
    cfg.ptr = small_config("risk_neutral", "64");
    const double values[2] = {1.0, 2.0};
    StringHandle csv;
    REQUIRE(storarb_sweep(cfg.ptr, "run.seed", values, 2, 1, &csv.ptr) == STORARB_OK);
    CHECK(csv.str().rfind("param,value,metric,metric_value\n", 0) == 0);
    CHECK(csv.str().find("run.seed,1,profit,") != std::string::npos);
    CHECK(csv.str().find("run.seed,2,profit,") != std::string::npos);

    StringHandle none;
    CHECK(storarb_sweep(cfg.ptr, "run.seed", nullptr, 0, 1, &none.ptr) ==
          STORARB_ERR_CONFIG);
    CHECK(storarb_sweep(cfg.ptr, "run.sead", values, 2, 1, &none.ptr) ==
          STORARB_ERR_CONFIG);
}

TEST_CASE("forecaster calibration through the C surface") {
    ConfigHandle cfg;
    cfg.ptr = small_config("risk_neutral", "288");
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.kind", "noisy") == STORARB_OK);
    REQUIRE(storarb_config_set(cfg.ptr, "forecaster.noise_scale", "10.0") == STORARB_OK);

    StringHandle json;
    REQUIRE(storarb_calibrate_forecaster(cfg.ptr, 0.4, 0.1, &json.ptr) == STORARB_OK);
    CHECK(json.str().find("\"achieved_r2\":") != std::string::npos);
    CHECK(json.str().find("\"noise_scale\":") != std::string::npos);

    StringHandle fail;
    CHECK(storarb_calibrate_forecaster(cfg.ptr, 1.5, 0.1, &fail.ptr) ==
          STORARB_ERR_CONFIG);

    // An all-zero noise template cannot be scaled toward a lower R^2.
    ConfigHandle zero;
    zero.ptr = small_config("risk_neutral", "96");
    REQUIRE(storarb_config_set(zero.ptr, "forecaster.kind", "noisy") == STORARB_OK);
    StringHandle zfail;
    CHECK(storarb_calibrate_forecaster(zero.ptr, 0.4, 0.1, &zfail.ptr) ==
          STORARB_ERR_CONFIG);
}
