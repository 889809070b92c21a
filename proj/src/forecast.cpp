#include "forecast.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace storarb {

void NoisyOracleConfig::validate() const {
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
        throw_config("noisy oracle: noise_scale must be non-negative");
    if (!std::isfinite(bias)) throw_config("noisy oracle: bias must be finite");
    if (!(correlation_halflife >= 0.0) || !std::isfinite(correlation_halflife))
        throw_config("noisy oracle: correlation_halflife must be non-negative");
    if (!(flip_probability >= 0.0) || !(flip_probability <= 1.0))
        throw_config("noisy oracle: flip_probability must lie in [0, 1]");
}

OracleForecast::OracleForecast(std::vector<Forecast> targets)
    : targets_(std::move(targets)) {
    if (targets_.empty()) throw_data("oracle forecast: no targets");
}

const Forecast& OracleForecast::predict(std::size_t t) const {
    if (t >= targets_.size()) throw_numeric("oracle forecast: step out of range");
    return targets_[t];
}

std::vector<double> repair_non_increasing(std::vector<double> values) {
    // Pool-adjacent-violators on blocks (mean, count), enforcing block means to
    // be non-increasing left to right.
    std::vector<double> mean;
    std::vector<std::size_t> count;
    mean.reserve(values.size());
    count.reserve(values.size());
    for (double v : values) {
        mean.push_back(v);
        count.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] < mean.back()) {
            const std::size_t n = mean.size();
            const double merged = (mean[n - 2] * double(count[n - 2]) +
                                   mean[n - 1] * double(count[n - 1])) /
                                  double(count[n - 2] + count[n - 1]);
            count[n - 2] += count[n - 1];
            mean[n - 2] = merged;
            mean.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t b = 0; b < mean.size(); ++b)
        out.insert(out.end(), count[b], mean[b]);
    return out;
}

NoisyOracleForecast::NoisyOracleForecast(const std::vector<Forecast>& targets,
                                         const NoisyOracleConfig& cfg,
                                         std::size_t grid_segments) {
    cfg.validate();
    if (targets.empty()) throw_data("noisy oracle: no targets");
    if (grid_segments == 0) throw_config("noisy oracle: grid_segments must be positive");

    const double phi = cfg.correlation_halflife > 0.0
                           ? std::exp2(-1.0 / cfg.correlation_halflife)
                           : 0.0;
    const double innovation = cfg.noise_scale * std::sqrt(1.0 - phi * phi);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> state(grid_segments, 0.0);
    for (std::size_t i = 0; i < grid_segments; ++i) state[i] = cfg.noise_scale * gauss(rng);

    forecasts_.reserve(targets.size());
    const double cap = targets.front().marginal.capacity();
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const MarginalValueCurve grid = resample(targets[t].marginal, grid_segments);
        // resample() may return fewer cells when the input is coarse; force the
        // uniform grid so the AR chains stay aligned across steps.
        std::vector<double> values(grid_segments);
        for (std::size_t i = 0; i < grid_segments; ++i) {
            const double mid = cap * (double(i) + 0.5) / double(grid_segments);
            values[i] = grid.evaluate(mid);
        }
        if (t > 0)
            for (std::size_t i = 0; i < grid_segments; ++i)
                state[i] = phi * state[i] + innovation * gauss(rng);

        const bool flip = unif(rng) < cfg.flip_probability;
        if (flip) {
            double m = 0.0;
            for (double v : values) m += v;
            m /= double(grid_segments);
            for (double& v : values) v = 2.0 * m - v;
        }
        for (std::size_t i = 0; i < grid_segments; ++i) values[i] += cfg.bias + state[i];

        values = repair_non_increasing(std::move(values));
        std::vector<double> breaks(grid_segments);
        for (std::size_t i = 0; i < grid_segments; ++i)
            breaks[i] = i + 1 == grid_segments ? cap
                                               : cap * double(i + 1) / double(grid_segments);
        forecasts_.push_back(
            Forecast{MarginalValueCurve(std::move(breaks), std::move(values)),
                     targets[t].value_offset});
    }
}

const Forecast& NoisyOracleForecast::predict(std::size_t t) const {
    if (t >= forecasts_.size()) throw_numeric("noisy oracle: step out of range");
    return forecasts_[t];
}

AccuracyReport measure_r2(const std::vector<Forecast>& predicted,
                          const std::vector<Forecast>& truth, std::size_t grid_points) {
    if (predicted.size() != truth.size())
        throw_data("measure_r2: prediction/truth lengths differ");
    if (predicted.empty() || grid_points == 0)
        throw_data("measure_r2: nothing to score");

    const double cap = truth.front().marginal.capacity();
    std::vector<double> p, y;
    p.reserve(predicted.size() * grid_points);
    y.reserve(predicted.size() * grid_points);
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (std::size_t j = 0; j < grid_points; ++j) {
            const double e = cap * (double(j) + 0.5) / double(grid_points);
            p.push_back(predicted[t].marginal.evaluate_clamped(e));
            y.push_back(truth[t].marginal.evaluate_clamped(e));
        }
    }

    AccuracyReport rep;
    rep.count = y.size();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= double(y.size());

    double sse = 0.0, sst = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double err = p[i] - y[i];
        sse += err * err;
        sst += (y[i] - mean) * (y[i] - mean);
        mae += std::abs(err);
    }
    rep.mean_abs_error = mae / double(y.size());
    if (sst <= 1e-12 * double(y.size())) {
        rep.degenerate = true;
        rep.r_squared = 0.0;
    } else {
        rep.r_squared = 1.0 - sse / sst;
    }
    return rep;
}

CalibrationResult calibrate_noise(double target_r2, const std::vector<Forecast>& targets,
                                  const NoisyOracleConfig& tmpl, std::size_t grid_segments,
                                  double tolerance) {
    tmpl.validate();
    if (!(tolerance > 0.0)) throw_config("calibrate_noise: tolerance must be positive");
    if (tmpl.noise_scale <= 0.0 && tmpl.bias == 0.0)
        throw_config("calibrate_noise: template needs nonzero noise_scale or bias to scale");

    const auto scaled = [&](double factor) {
        NoisyOracleConfig c = tmpl;
        c.noise_scale = tmpl.noise_scale * factor;
        c.bias = tmpl.bias * factor;
        return c;
    };
    const auto score = [&](double factor) {
        const NoisyOracleForecast f(targets, scaled(factor), grid_segments);
        return measure_r2(f.all(), targets, grid_segments);
    };

    // R^2 is monotone non-increasing in the factor (same seed, scaled draws).
    double lo = 0.0;
    AccuracyReport lo_rep = score(lo);
    if (lo_rep.degenerate) throw_data("calibrate_noise: truth curves have no variance");
    if (lo_rep.r_squared < target_r2 - tolerance)
        throw_config("calibrate_noise: target R^2 above what the template can reach");
    if (std::abs(lo_rep.r_squared - target_r2) <= tolerance)
        return {scaled(lo), lo_rep};

    double hi = 1.0;
    AccuracyReport hi_rep = score(hi);
    std::size_t guard = 0;
    while (hi_rep.r_squared > target_r2 && ++guard < 64) {
        hi *= 2.0;
        hi_rep = score(hi);
    }
    if (hi_rep.r_squared > target_r2)
        throw_numeric("calibrate_noise: search failed to bracket the target");

    for (std::size_t iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const AccuracyReport rep = score(mid);
        if (std::abs(rep.r_squared - target_r2) <= tolerance) return {scaled(mid), rep};
        if (rep.r_squared > target_r2)
            lo = mid;
        else
            hi = mid;
    }
    throw_numeric("calibrate_noise: bisection did not converge to tolerance");
}

}  // namespace storarb
