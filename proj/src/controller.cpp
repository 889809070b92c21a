#include "controller.hpp"

#include <algorithm>
#include <cmath>

#include "valuation.hpp"

namespace storarb {

void ControllerConfig::validate() const {
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw_config("controller: epsilon must lie in (0, 1)");
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw_config("controller: rho must be positive");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw_config("controller: sigma must be non-negative");
    if (!std::isfinite(gamma_init)) throw_config("controller: gamma_init must be finite");
    if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
        throw_config("controller: gamma_bar must be positive");
    if (!(k >= 0.0) || !std::isfinite(k)) throw_config("controller: k must be non-negative");
    if (!(value_loss_scale >= 0.0) || !std::isfinite(value_loss_scale))
        throw_config("controller: value_loss_scale must be non-negative");
}

ControllerState make_controller_state(const ControllerConfig& cfg) {
    cfg.validate();
    ControllerState s;
    s.gamma = cfg.gamma_init;
    s.gamma_init = cfg.gamma_init;
    return s;
}

void update_gamma(ControllerState& state, double clipped_loss, const ControllerConfig& cfg) {
    if (!(clipped_loss >= 0.0) || !(clipped_loss <= 1.0))
        throw_numeric("update_gamma: loss must be clipped into [0, 1] first");
    state.drift_sum.add(cfg.epsilon - clipped_loss);
    state.loss_sum.add(clipped_loss);
    ++state.steps;
    state.gamma = state.gamma_init + cfg.rho * state.drift_sum.value();
}

double clip_loss(double raw, const ControllerConfig& cfg) {
    if (!std::isfinite(raw)) throw_numeric("clip_loss: non-finite raw loss");
    const double scale =
        cfg.loss_kind == LossKind::prediction_error ? cfg.gamma_bar : cfg.value_loss_scale;
    if (!(scale > 0.0)) throw_config("clip_loss: loss scale must be positive");
    return std::clamp(raw / scale, 0.0, 1.0);
}

double reference_gamma(double delta_q, const ControllerConfig& cfg) {
    if (!(delta_q >= 0.0)) throw_numeric("reference_gamma: delta_q must be non-negative");
    const double decay = std::exp(-cfg.k * delta_q);
    return cfg.mapping_kind == MappingKind::decreasing_exp ? cfg.gamma_bar * decay
                                                           : cfg.gamma_bar * (1.0 - decay);
}

double loss_prediction_error(ControllerState& state, double q_hat_at_exec,
                             double q_bar_at_exec, const ControllerConfig& cfg) {
    if (!std::isfinite(q_hat_at_exec) || !std::isfinite(q_bar_at_exec))
        throw_numeric("loss_prediction_error: non-finite marginal values");
    state.abs_q_error_sum.add(std::abs(q_hat_at_exec - q_bar_at_exec));
    ++state.q_error_count;
    const double delta_q = state.abs_q_error_sum.value() / double(state.q_error_count);
    return state.gamma - reference_gamma(delta_q, cfg);
}

double loss_value_error(Soc soc_prev, double price, const MarginalValueCurve& q_hat,
                        const MarginalValueCurve& q_bar, const PredictionSetParams& params,
                        const StorageSpec& spec) {
    const double w = halfwidth(params);
    // Both hypothetical one-step values use the corrected curve; its unknown
    // additive constant cancels in the difference.
    const StepOutcome corrected = one_step(price, soc_prev, q_bar, w, q_bar, 0.0, spec);
    const StepOutcome executed = one_step(price, soc_prev, q_hat, w, q_bar, 0.0, spec);
    return std::abs(corrected.objective - executed.objective);
}

double cumulative_risk(const ControllerState& state) {
    if (state.steps == 0) throw_numeric("cumulative_risk: no updates yet");
    return state.loss_sum.value() / double(state.steps);
}

double risk_identity_residual(const ControllerState& state, const ControllerConfig& cfg) {
    if (state.steps == 0) return 0.0;
    const double t = double(state.steps);
    const double implied = cfg.epsilon + (state.gamma_init - state.gamma) / (cfg.rho * t);
    return std::abs(cumulative_risk(state) - implied);
}

}  // namespace storarb
