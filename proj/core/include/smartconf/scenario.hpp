#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartconf/config_io.hpp"
#include "smartconf/plants.hpp"

namespace smartconf {

enum class PlantKind { bounded_queue, write_buffer, dual_queue };

std::string_view to_string(PlantKind kind);
PlantKind parse_plant_kind(std::string_view name);

struct KnobSpec {
    std::string name;
    std::optional<std::string> deputy; // set for indirect knobs
    double initial = 0.0;
    double conf_min = 0.0;
    double conf_max = 1e9;
    bool integer_valued = false;
    std::vector<double> profile_settings;
    double profile_other = 0.0; // value held by the other knobs while this one is profiled
};

struct GoalShift {
    std::int64_t tick;
    double goal;
};

// A plant preset together with its evaluation workload, profiling workload,
// goal and knob descriptions.
struct Scenario {
    std::string name;
    PlantKind kind = PlantKind::bounded_queue;
    BoundedQueueConfig bounded_queue;
    WriteBufferConfig write_buffer;
    DualQueueConfig dual_queue;

    WorkloadSchedule schedule;         // evaluation; seed replaced per run
    WorkloadSchedule profile_schedule; // profiling; differs from evaluation
    std::int64_t ticks = 0;

    std::string metric;
    GoalEntry goal;
    std::vector<GoalShift> goal_shifts;
    std::vector<KnobSpec> knobs;

    int profile_reps = 20;
    int profile_settle = 10;
    std::uint64_t profile_seed = 7;
    std::optional<double> pole_override; // pins the regular pole (ablation setups)

    std::unique_ptr<Plant> make_plant(std::uint64_t seed) const;
    std::unique_ptr<Plant> make_profile_plant(std::uint64_t seed) const;
    // Goal in force at `tick`.
    double goal_at(std::int64_t tick) const;
    void validate() const;
};

std::vector<std::string> scenario_names();

// Named presets. Throws ConfigError listing the presets for an unknown name.
Scenario make_scenario(std::string_view name);

// Applies `key = value` overrides. A `scenario = <preset>` line, if present,
// selects the base preset; otherwise `base` is used.
Scenario apply_scenario_overrides(Scenario base, std::string_view text);

// Serializes every overridable key, in the same grammar.
std::string describe_scenario(const Scenario& scenario);

} // namespace smartconf
