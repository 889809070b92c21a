#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "curve.hpp"
#include "domain.hpp"

namespace storarb {

// What a forecaster hands the dispatcher for one decision step: the predicted
// marginal value curve of energy after the step clears, plus the predicted
// value of an empty battery (only exact-oracle diagnostics consume the offset).
struct Forecast {
    MarginalValueCurve marginal;
    double value_offset = 0.0;
};

class ForecastSource {
public:
    virtual ~ForecastSource() = default;
    virtual std::size_t horizon() const = 0;
    // Forecast used to decide step t, 0-based; produced after price t is known.
    virtual const Forecast& predict(std::size_t t) const = 0;
};

// Passes the ground-truth targets through unchanged.
class OracleForecast final : public ForecastSource {
public:
    explicit OracleForecast(std::vector<Forecast> targets);
    std::size_t horizon() const override { return targets_.size(); }
    const Forecast& predict(std::size_t t) const override;

private:
    std::vector<Forecast> targets_;
};

// Synthetic stand-in for a trained model: truth segment values on a common
// uniform SoC grid, perturbed by per-segment AR(1) noise plus a constant bias,
// optionally shape-flipped around the per-step mean (systematically wrong
// forecasts, needed to reach negative R^2), then monotone-repaired.
struct NoisyOracleConfig {
    double noise_scale = 0.0;           // stationary std of the AR(1) noise, $/MWh
    double bias = 0.0;                  // constant offset, $/MWh
    double correlation_halflife = 0.0;  // steps until autocorrelation halves; 0 = white
    double flip_probability = 0.0;      // per-step chance of mirroring the SoC shape
    std::uint64_t seed = 0;

    void validate() const;
};

class NoisyOracleForecast final : public ForecastSource {
public:
    NoisyOracleForecast(const std::vector<Forecast>& targets, const NoisyOracleConfig& cfg,
                        std::size_t grid_segments = 50);
    std::size_t horizon() const override { return forecasts_.size(); }
    const Forecast& predict(std::size_t t) const override;
    const std::vector<Forecast>& all() const noexcept { return forecasts_; }

private:
    std::vector<Forecast> forecasts_;
};

// Pooled accuracy of predicted curves against truth, sampled at uniform cell
// midpoints on a common grid: R^2 = 1 - SSE/SST over all (step, point) pairs.
struct AccuracyReport {
    double r_squared = 0.0;
    double mean_abs_error = 0.0;
    std::size_t count = 0;
    bool degenerate = false;  // truth had (near-)zero variance; r_squared not meaningful
};

AccuracyReport measure_r2(const std::vector<Forecast>& predicted,
                          const std::vector<Forecast>& truth, std::size_t grid_points = 50);

// Scales the template's noise_scale and bias by a common factor (bisection)
// until the measured R^2 lands within `tolerance` of `target_r2`. Larger
// factors strictly lower R^2; negative targets therefore need a template with
// nonzero bias and/or flip_probability. Throws ErrorCode::config when the
// target exceeds what the template can reach.
struct CalibrationResult {
    NoisyOracleConfig config;
    AccuracyReport report;
};

CalibrationResult calibrate_noise(double target_r2, const std::vector<Forecast>& targets,
                                  const NoisyOracleConfig& tmpl, std::size_t grid_segments = 50,
                                  double tolerance = 0.05);

// Non-increasing projection (pool adjacent violators, equal weights): the
// monotone repair applied to perturbed segment values.
std::vector<double> repair_non_increasing(std::vector<double> values);

}  // namespace storarb
