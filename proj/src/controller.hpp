#pragma once

#include <cstddef>
#include <vector>

#include "curve.hpp"
#include "domain.hpp"
#include "policy.hpp"

namespace storarb {

enum class LossKind {
    prediction_error,  // running mean of |q_hat - q_bar| at the executed SoC
    value_error,       // |one-step value under corrected vs executed decisions|
};

enum class MappingKind {
    decreasing_exp,    // gamma_ref = gamma_bar * exp(-k * delta_q)  (default)
    saturating_exp,    // gamma_ref = gamma_bar * (1 - exp(-k * delta_q))
};

struct ControllerConfig {
    double epsilon = 0.1;        // target step-loss level
    double rho = 0.001;          // gamma step size
    double sigma = 20.0;         // prediction-set scale, $/MWh
    double gamma_init = 1.0;     // gamma_1
    double gamma_bar = 3.0;      // loss normalizer / mapping ceiling
    double k = 0.1;              // mapping decay rate per $/MWh of drift
    double value_loss_scale = 0.0;  // L_max; 0 = derive from prices (harness)
    LossKind loss_kind = LossKind::prediction_error;
    MappingKind mapping_kind = MappingKind::decreasing_exp;

    void validate() const;
};

// Compensated accumulator; the risk identity is asserted to 1e-9 over 1e4+
// steps, which plain summation does not reliably deliver.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const noexcept { return sum; }
};

// Online controller state. gamma is intentionally unclamped: the risk
// identity sum_s loss_s = t*eps + (gamma_1 - gamma_{t+1})/rho holds exactly
// only for the raw recursion; halfwidth() clamps at evaluation time instead.
// gamma is maintained as gamma_init + rho * sum(eps - loss) with a
// compensated sum, so the identity survives 1e4+ steps at float precision.
struct ControllerState {
    double gamma = 1.0;
    double gamma_init = 1.0;
    KahanSum drift_sum;       // sum of (epsilon - loss_s)
    std::size_t steps = 0;    // number of update_gamma calls
    KahanSum loss_sum;        // sum of clipped losses
    KahanSum abs_q_error_sum; // running numerator of delta_q
    std::size_t q_error_count = 0;
};

// Time series a run keeps for audit: gamma before each update, clipped loss,
// and the running cumulative risk after each update.
struct RiskLedger {
    std::vector<double> gamma_trace;       // gamma_1, gamma_2, ... (post-update appended)
    std::vector<double> raw_losses;        // unclipped loss_t
    std::vector<double> losses;            // clipped loss_t
    std::vector<double> cumulative_risk;   // (1/t) * sum_{s<=t} loss_s
};

ControllerState make_controller_state(const ControllerConfig& cfg);

// gamma_{t+1} = gamma_t + rho * (epsilon - loss); loss must already be
// clipped into [0, 1] (throws ErrorCode::numeric otherwise).
void update_gamma(ControllerState& state, double clipped_loss, const ControllerConfig& cfg);

// clamp(raw / scale, 0, 1) with the loss kind's normalizer (gamma_bar for
// prediction error, value_loss_scale for value error).
double clip_loss(double raw, const ControllerConfig& cfg);

// gamma_ref = mapping(delta_q); see MappingKind.
double reference_gamma(double delta_q, const ControllerConfig& cfg);

// Folds |q_hat(e) - q_bar(e)| at the executed SoC into the running mean and
// returns the raw (unclipped) loss gamma - gamma_ref(delta_q).
double loss_prediction_error(ControllerState& state, double q_hat_at_exec,
                             double q_bar_at_exec, const ControllerConfig& cfg);

// Raw |Vbar - Vhat|: corrected and executed one-step decisions under the same
// prediction set, both valued with the corrected curve (offsets cancel).
double loss_value_error(Soc soc_prev, double price, const MarginalValueCurve& q_hat,
                        const MarginalValueCurve& q_bar, const PredictionSetParams& params,
                        const StorageSpec& spec);

double cumulative_risk(const ControllerState& state);

// | (1/t) sum loss_s  -  [epsilon + (gamma_1 - gamma_{t+1}) / (rho t)] |.
double risk_identity_residual(const ControllerState& state, const ControllerConfig& cfg);

}  // namespace storarb
