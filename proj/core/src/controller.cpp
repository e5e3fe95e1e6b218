#include "smartconf/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smartconf/errors.hpp"

namespace smartconf {

void ControllerParams::validate() const {
    if (!(pole >= 0.0 && pole < 1.0)) {
        throw InvalidArgument("pole must lie in [0, 1), got " + std::to_string(pole));
    }
    if (aggressive_pole != 0.0) {
        throw InvalidArgument("aggressive pole must be 0");
    }
    if (!std::isfinite(alpha) || alpha == 0.0) {
        throw InvalidArgument("alpha must be finite and nonzero");
    }
    if (!std::isfinite(goal) || !std::isfinite(virtual_goal)) {
        throw InvalidArgument("goal and virtual goal must be finite");
    }
    if (hard ? virtual_goal > goal : virtual_goal != goal) {
        throw InvalidArgument("virtual goal inconsistent with hardness");
    }
    if (interaction_n < 1) {
        throw InvalidArgument("interaction factor must be >= 1");
    }
    if (!(conf_min <= conf_max)) {
        throw InvalidArgument("conf_min must not exceed conf_max");
    }
}

double compute_pole(double delta) {
    if (!std::isfinite(delta) || delta < 1.0) {
        throw InvalidArgument("delta must be finite and >= 1");
    }
    return delta > 2.0 ? 1.0 - 2.0 / delta : 0.0;
}

double compute_virtual_goal(double goal, double lambda, bool hard) {
    if (!std::isfinite(goal) || goal <= 0.0) {
        throw InvalidArgument("goal must be positive");
    }
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw InvalidArgument("lambda must be finite and >= 0");
    }
    if (!hard) {
        return goal;
    }
    if (lambda >= 1.0) {
        throw SynthesisError("system too unstable for a virtual goal (lambda = " +
                             std::to_string(lambda) + ")");
    }
    return (1.0 - lambda) * goal;
}

double effective_pole(const ControllerParams& params, double measured) noexcept {
    if (params.hard && params.switching == PoleSwitching::context_aware &&
        measured > params.virtual_goal) {
        return params.aggressive_pole;
    }
    return params.pole;
}

double unclamped_adjustment(const ControllerParams& params, double measured) noexcept {
    const double p = effective_pole(params, measured);
    const double error = params.virtual_goal - measured;
    return (1.0 - p) / (static_cast<double>(params.interaction_n) * params.alpha) * error;
}

StepResult control_step(ControllerState& state, const ControllerParams& params, double measured) {
    const double p = effective_pole(params, measured);
    const double next =
        std::clamp(state.last_value + unclamped_adjustment(params, measured), params.conf_min,
                   params.conf_max);
    state.last_value = next;
    ++state.step_index;
    return {next, p};
}

} // namespace smartconf
