#pragma once

#include <cstdint>
#include <limits>

namespace smartconf {

// How the pole reacts once a hard goal's virtual goal is crossed.
enum class PoleSwitching {
    context_aware, // regular pole below the virtual goal, 0 above it
    fixed,         // regular pole everywhere (single-pole ablation)
};

// Synthesized gains and goals for one knob. All goals are upper bounds on the
// metric; a knob whose increase lowers the metric carries a negative alpha.
struct ControllerParams {
    double alpha = 1.0;           // metric units per config unit
    double pole = 0.0;            // regular pole, in [0, 1)
    double aggressive_pole = 0.0; // pole used past the virtual goal
    double goal = 0.0;
    double virtual_goal = 0.0;    // == goal unless hard
    bool hard = false;
    std::uint32_t interaction_n = 1;
    double conf_min = 0.0;
    double conf_max = std::numeric_limits<double>::max();
    PoleSwitching switching = PoleSwitching::context_aware;

    // Throws InvalidArgument when an invariant is broken.
    void validate() const;
};

struct ControllerState {
    double last_value = 0.0; // c_k; the deputy value for indirect knobs
    std::uint64_t step_index = 0;
};

struct StepResult {
    double next_value;
    double effective_pole;
};

// p = 1 - 2/delta for delta > 2, else 0.
double compute_pole(double delta);

// (1 - lambda) * goal for hard goals; soft goals are returned unchanged.
// Throws SynthesisError when a hard goal would need lambda >= 1.
double compute_virtual_goal(double goal, double lambda, bool hard);

// Pole actually used for a measurement under the given params.
double effective_pole(const ControllerParams& params, double measured) noexcept;

// (1 - p_eff) / (N * alpha) * (virtual_goal - measured), before clamping.
double unclamped_adjustment(const ControllerParams& params, double measured) noexcept;

// One update of the integral controller. Advances state in place.
StepResult control_step(ControllerState& state, const ControllerParams& params, double measured);

} // namespace smartconf
