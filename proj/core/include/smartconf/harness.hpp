#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartconf/profiler.hpp"
#include "smartconf/scenario.hpp"

namespace smartconf {

enum class ModeKind {
    smartconf,       // virtual goal + context-aware poles
    static_value,    // fixed configuration, controller never consulted
    single_pole,     // virtual goal, regular pole only
    no_virtual_goal, // two poles, tracking the real limit
};

struct Mode {
    ModeKind kind = ModeKind::smartconf;
    double static_value = 0.0;

    // "smartconf", "static:<value>", "single-pole", "no-virtual-goal".
    static Mode parse(std::string_view text);
    std::string str() const;

    friend bool operator==(const Mode&, const Mode&) = default;
};

struct KnobColumns {
    double conf = 0.0;
    double deputy = 0.0;
    std::optional<double> effective_pole; // empty until the controller has run
};

struct TraceRow {
    std::int64_t tick = 0;
    std::vector<KnobColumns> knobs;
    double metric = 0.0;
    double goal = 0.0;
    double virtual_goal = 0.0;
    bool violation = false;
    double throughput_cum = 0.0;
};

// Per-tick CSV. Single-knob header:
//   tick,conf_value,deputy_value,metric,goal,virtual_goal,effective_pole,violation,throughput_cum
// Each further knob appends conf_value_<k>,deputy_value_<k>,effective_pole_<k>.
struct RunTrace {
    std::size_t knob_count = 1;
    std::vector<TraceRow> rows;

    static std::string header(std::size_t knob_count);
    std::string to_csv() const;
};

struct RunSummary {
    std::string scenario;
    Mode mode;
    std::uint64_t seed = 0;
    std::int64_t violations = 0;
    std::optional<std::int64_t> first_violation_tick;
    double throughput_cum = 0.0;
    double mean_abs_error = 0.0; // |virtual_goal - metric| after warmup
};

struct RunResult {
    RunTrace trace;
    RunSummary summary;
};

// Share of leading ticks excluded from error summaries.
inline constexpr double kWarmupFraction = 0.1;
std::int64_t warmup_ticks(std::int64_t ticks);

// Holds knob `knob_index` at each setting for `settle` ticks and records one
// sample on the following tick, cycling through the settings `reps` times.
// Indirect knobs record the deputy as the setting.
std::vector<ProfileSample> profile_knob(const Scenario& scenario, std::size_t knob_index,
                                        std::span<const double> settings, int reps, int settle,
                                        std::uint64_t seed);

// Profiles every knob on the scenario's profiling workload and synthesizes a
// controller for each.
std::vector<SynthesisReport> synthesize_scenario(const Scenario& scenario);

RunResult run_scenario(const Scenario& scenario, const Mode& mode, std::uint64_t seed,
                       std::span<const SynthesisReport> controllers);
RunResult run_scenario(const Scenario& scenario, const Mode& mode, std::uint64_t seed);

struct SweepRange {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    // "a:b:step", inclusive of b when it lands on the grid.
    static SweepRange parse(std::string_view text);
    std::vector<double> values() const;
};

struct SweepPoint {
    double value;
    std::int64_t violations;
    double throughput_cum;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::optional<double> best_static; // max throughput among zero-violation values
    double best_throughput = 0.0;

    std::string to_csv() const;
};

SweepResult sweep_static(const Scenario& scenario, const SweepRange& range, std::uint64_t seed,
                         unsigned workers = 0);

struct ModeAggregate {
    Mode mode;
    std::size_t runs = 0;
    std::size_t violating_seeds = 0;
    double mean_throughput = 0.0;
    double mean_abs_error = 0.0;
};

struct CompareResult {
    std::vector<RunSummary> runs; // ordered by (mode, seed)
    std::vector<ModeAggregate> aggregates;

    std::string to_csv() const;
};

// Runs every (mode, seed) pair; `workers` = 0 picks the hardware concurrency.
CompareResult compare_modes(const Scenario& scenario, std::span<const std::uint64_t> seeds,
                            std::span<const Mode> modes, unsigned workers = 0);

// Locale-independent shortest round-trip formatting used in CSV output.
std::string csv_real(double value);

} // namespace smartconf
