#include "prices.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace storarb {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Hinnant's algorithm):
// avoids timegm() and any timezone dependence.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

bool days_in_month_ok(int y, int m, int d) {
    static const int len[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1) return false;
    int n = len[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) n = 29;
    return d <= n;
}

}  // namespace

std::int64_t parse_iso8601_utc(const std::string& text) {
    int y, mo, d, h, mi, s;
    char tail = '\0';
    const int got = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d,
                                &h, &mi, &s, &tail);
    if (got < 6 || (got == 7 && tail != 'Z'))
        throw_data("timestamp not ISO-8601 (YYYY-MM-DDTHH:MM:SS[Z]): '" + text + "'");
    if (!days_in_month_ok(y, mo, d) || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 59)
        throw_data("timestamp out of range: '" + text + "'");
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso8601_utc(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                  int(rem / 3600), int((rem % 3600) / 60), int(rem % 60));
    return buf;
}

PriceSeries parse_prices_csv(const std::string& text, bool allow_gaps) {
    std::istringstream in(text);
    std::string line;
    PriceSeries series;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw_data("prices csv line " + std::to_string(lineno) + ": expected two columns");
        const std::string a = line.substr(0, comma);
        const std::string b = line.substr(comma + 1);
        if (b.find(',') != std::string::npos)
            throw_data("prices csv line " + std::to_string(lineno) + ": too many columns");
        if (!header_seen) {
            header_seen = true;  // header row is required and not data
            continue;
        }
        std::int64_t ts;
        try {
            ts = parse_iso8601_utc(a);
        } catch (const Error& e) {
            throw_data("prices csv line " + std::to_string(lineno) + ": " + e.what());
        }
        std::size_t used = 0;
        double price;
        try {
            price = std::stod(b, &used);
        } catch (const std::exception&) {
            throw_data("prices csv line " + std::to_string(lineno) + ": bad price '" + b + "'");
        }
        while (used < b.size() && (b[used] == ' ' || b[used] == '\t')) ++used;
        if (used != b.size() || !std::isfinite(price))
            throw_data("prices csv line " + std::to_string(lineno) + ": bad price '" + b + "'");
        series.timestamps.push_back(ts);
        series.prices.push_back(price);
    }
    if (!header_seen) throw_data("prices csv: empty file");
    series.validate();
    if (series.size() >= 3 && !allow_gaps) {
        const std::int64_t modal = series.modal_interval_seconds();
        for (std::size_t i = 1; i < series.size(); ++i) {
            const std::int64_t gap = series.timestamps[i] - series.timestamps[i - 1];
            if (gap > 2 * modal)
                throw_data("prices csv: gap of " + std::to_string(gap) + "s before row " +
                           std::to_string(i + 1) + " exceeds twice the modal interval (" +
                           std::to_string(modal) + "s); pass allow_gaps to accept");
        }
    }
    return series;
}

PriceSeries load_prices(const std::string& path, bool allow_gaps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open price file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_prices_csv(buf.str(), allow_gaps);
}

std::string prices_to_csv(const PriceSeries& series) {
    std::string out = "timestamp,price\n";
    char buf[64];
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.10g\n",
                      format_iso8601_utc(series.timestamps[i]).c_str(), series.prices[i]);
        out += buf;
    }
    return out;
}

void PriceGenSpec::validate() const {
    if (!std::isfinite(level)) throw_config("price gen: level must be finite");
    if (!(daily_amplitude >= 0.0) || !(secondary_amplitude >= 0.0))
        throw_config("price gen: amplitudes must be non-negative");
    if (!(noise_std >= 0.0) || !(noise_halflife >= 0.0))
        throw_config("price gen: noise parameters must be non-negative");
    if (!(spike_rate >= 0.0) || spike_rate > 1.0)
        throw_config("price gen: spike_rate must lie in [0, 1]");
    if (!(spike_scale >= 0.0)) throw_config("price gen: spike_scale must be non-negative");
    if (!(spike_positive_share >= 0.0) || spike_positive_share > 1.0)
        throw_config("price gen: spike_positive_share must lie in [0, 1]");
    if (interval_seconds <= 0) throw_config("price gen: interval_seconds must be positive");
}

PriceSeries synthesize_prices(const PriceGenSpec& gen, std::uint64_t seed,
                              std::size_t steps) {
    gen.validate();
    if (steps == 0) throw_config("price gen: steps must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    const double phi = gen.noise_halflife > 0.0 ? std::exp2(-1.0 / gen.noise_halflife) : 0.0;
    const double innovation = gen.noise_std * std::sqrt(1.0 - phi * phi);
    const double steps_per_day = 86400.0 / double(gen.interval_seconds);

    PriceSeries series;
    series.timestamps.reserve(steps);
    series.prices.reserve(steps);
    double ar = gen.noise_std * gauss(rng);
    for (std::size_t t = 0; t < steps; ++t) {
        if (t > 0) ar = phi * ar + innovation * gauss(rng);
        const double phase = 2.0 * M_PI * double(t) / steps_per_day;
        // Trough overnight, broad daytime peak, secondary evening shoulder.
        double price = gen.level - gen.daily_amplitude * std::cos(phase - 0.7) +
                       gen.secondary_amplitude * std::sin(2.0 * phase) + ar;
        if (unif(rng) < gen.spike_rate) {
            const double magnitude = gen.spike_scale * expo(rng);
            price += unif(rng) < gen.spike_positive_share ? magnitude : -magnitude;
        }
        series.timestamps.push_back(gen.start_epoch +
                                    std::int64_t(t) * gen.interval_seconds);
        series.prices.push_back(price);
    }
    return series;
}

}  // namespace storarb
