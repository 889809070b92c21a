#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace storarb {

// Error taxonomy mirrors the process exit codes: 2 = bad configuration,
// 3 = bad input data, 4 = numerical/feasibility failure.
enum class ErrorCode : int {
    config = 2,
    data = 3,
    numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCode::config, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorCode::data, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCode::numeric, msg); }

// Physical parameters of a single storage unit. Power limits are expressed in
// energy per interval (MWh/step); use power_limit_from_rating() to convert a
// MW rating for a given interval length.
struct StorageSpec {
    double power_limit_per_step = 0.5;  // max charge or discharge energy per interval, MWh
    double capacity = 1.0;              // usable capacity E, MWh
    double efficiency = 0.9;            // one-way efficiency eta in (0, 1]
    double marginal_cost = 10.0;        // discharge cost C, $/MWh

    void validate() const;
};

double power_limit_from_rating(double megawatts, double interval_hours);

// State of charge, MWh. Thin wrapper so signatures distinguish stored energy
// from prices/decisions; bounds are checked against a StorageSpec where the
// value is produced.
struct Soc {
    double value = 0.0;
};

// A single interval's dispatch: energy sold to the grid (discharge) and energy
// bought from the grid (charge), both non-negative and bounded by the power
// limit. A well-formed decision never does both at once.
struct DispatchDecision {
    double discharge = 0.0;  // p, MWh sold this interval
    double charge = 0.0;     // b, MWh bought this interval

    double net() const noexcept { return discharge - charge; }
    bool is_idle() const noexcept { return discharge == 0.0 && charge == 0.0; }
};

// Price series with evenly spaced (modal interval) UTC timestamps.
struct PriceSeries {
    std::vector<std::int64_t> timestamps;  // epoch seconds, strictly increasing
    std::vector<double> prices;            // $/MWh, finite, may be negative

    std::size_t size() const noexcept { return prices.size(); }
    void validate() const;
    // Most common timestamp delta, seconds. Requires size() >= 2.
    std::int64_t modal_interval_seconds() const;
};

// Per-interval feasible action envelope at a given state of charge:
// discharge is further shut off entirely when the price is negative.
struct ActionBounds {
    double max_discharge = 0.0;
    double max_charge = 0.0;
};

// SoC transition e' = e - p/eta + b*eta. Throws ErrorCode::numeric when the
// decision is infeasible from `soc` (violates power, energy, or the
// no-simultaneous-charge-discharge rule) beyond a 1e-9 tolerance.
Soc apply_decision(Soc soc, const DispatchDecision& d, const StorageSpec& spec);

// Cash flow of one interval: price*(p - b) - C*p. No SoC involvement.
double step_profit(double price, const DispatchDecision& d, const StorageSpec& spec);

ActionBounds feasible_bounds(Soc soc, double price, const StorageSpec& spec);

}  // namespace storarb
