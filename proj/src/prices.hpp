#pragma once

#include <cstdint>
#include <string>

#include "domain.hpp"

namespace storarb {

// "YYYY-MM-DDTHH:MM:SS" (UTC) <-> epoch seconds.
std::int64_t parse_iso8601_utc(const std::string& text);
std::string format_iso8601_utc(std::int64_t epoch_seconds);

// Two-column CSV "timestamp,price" with a header row; ISO-8601 UTC timestamps,
// RFC-4180 line endings tolerated. Rejects unparseable rows, non-monotone
// timestamps, and gaps larger than twice the modal interval unless
// allow_gaps is set. Errors carry ErrorCode::data and the offending line.
PriceSeries load_prices(const std::string& path, bool allow_gaps = false);
PriceSeries parse_prices_csv(const std::string& text, bool allow_gaps = false);
std::string prices_to_csv(const PriceSeries& series);

// Seeded synthetic price process: two daily harmonics + AR(1) noise + a
// two-sided spike process, on a fixed interval grid. Defaults give a
// plausible 5-minute power price with occasional negative prices.
struct PriceGenSpec {
    double level = 40.0;             // long-run mean, $/MWh
    double daily_amplitude = 15.0;   // first harmonic amplitude
    double secondary_amplitude = 5.0;  // second harmonic (morning/evening peaks)
    double noise_std = 5.0;          // stationary AR(1) std
    double noise_halflife = 6.0;     // steps; 0 = white noise
    double spike_rate = 0.01;        // per-step spike probability
    double spike_scale = 80.0;       // mean spike magnitude, $/MWh
    double spike_positive_share = 0.5;  // fraction of spikes that are upward
    std::int64_t interval_seconds = 300;
    std::int64_t start_epoch = 1672531200;  // 2023-01-01T00:00:00Z

    void validate() const;
};

PriceSeries synthesize_prices(const PriceGenSpec& gen, std::uint64_t seed, std::size_t steps);

}  // namespace storarb
