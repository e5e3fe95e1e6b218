#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartconf/config_io.hpp"
#include "smartconf/controller.hpp"
#include "smartconf/profiler.hpp"

namespace smartconf {

// Metric goals plus the set of knobs attached to each metric. Copies share state.
class GoalRegistry {
public:
    GoalRegistry();
    explicit GoalRegistry(const GoalFile& goals);

    void set_goal_entry(const std::string& metric, const GoalEntry& entry);
    std::optional<GoalEntry> goal(const std::string& metric) const;

    // Live count of knobs registered under `metric`.
    std::uint32_t knob_count(const std::string& metric) const;
    std::vector<std::string> knob_names(const std::string& metric) const;

    struct Slot;

private:
    friend class Knob;
    struct Impl;

    std::shared_ptr<Slot> attach(const std::string& metric, const std::string& knob);
    void detach(const std::string& metric, const std::string& knob);
    void publish_virtual_goal(const std::shared_ptr<Slot>& slot, const std::string& knob,
                              double virtual_goal);
    double shared_virtual_goal(const std::shared_ptr<Slot>& slot, double own) const;

    std::shared_ptr<Impl> impl_;
};

struct KnobOptions {
    double conf_min = 0.0;
    double conf_max = std::numeric_limits<double>::max();
    bool integer_valued = false;
    PoleSwitching switching = PoleSwitching::context_aware;
    // false tracks the real goal even when hard (no-virtual-goal ablation)
    bool use_virtual_goal = true;
    std::optional<double> pole_override;
};

// What a knob is built from: a synthesis result and the starting value.
// The virtual goal is always recomputed from lambda and the registry goal.
struct KnobModel {
    std::string metric;
    double initial_value = 0.0;
    SynthesisReport synthesis{};
};

struct UnreachableGoal {
    std::string knob;
    std::string metric;
    double goal;
    double value; // the range boundary the knob is pinned at
    std::uint64_t steps;
};

// Direct knob: the controller drives the configuration value itself.
// Every public member is safe to call concurrently.
class Knob {
public:
    using ProfileSink = std::function<void(std::span<const ProfileSample>)>;
    using UnreachableHandler = std::function<void(const UnreachableGoal&)>;

    static constexpr std::size_t kProfileFlushEvery = 64;
    static constexpr std::uint64_t kUnreachableSteps = 20;

    Knob(std::string name, GoalRegistry registry, KnobModel model, KnobOptions options = {});
    virtual ~Knob();

    Knob(const Knob&) = delete;
    Knob& operator=(const Knob&) = delete;

    void set_perf(double measured);
    // Runs one control step on the latest measurement and returns the new value.
    double get_conf();
    void set_goal(double goal);

    double value() const;
    ControllerParams params() const;
    ControllerState state() const;
    double lambda() const;
    std::optional<double> last_effective_pole() const;
    const std::string& name() const noexcept { return name_; }
    const std::string& metric() const noexcept { return metric_; }

    void enable_profiling(ProfileSink sink);
    void flush_profile();
    void on_unreachable(UnreachableHandler handler);

protected:
    // Maps the controller output to the configuration value (before rounding).
    virtual double to_conf(double controller_value) const { return controller_value; }
    // Value recorded alongside a measurement in profiling mode.
    virtual double profiled_setting() const { return value_; }

    // Stores the measurement; returns a profiling batch that is due for the sink.
    std::vector<ProfileSample> store_measurement_locked(double measured);
    void deliver(std::vector<ProfileSample> batch) const;
    double round_safe(double v) const;
    ControllerParams params_locked() const;

    mutable std::mutex mu_;
    ControllerState state_;
    double value_ = 0.0;

private:
    void track_unreachable(double unclamped, double measured, const ControllerParams& p,
                           std::vector<UnreachableGoal>& alerts);

    std::string name_;
    std::string metric_;
    GoalRegistry registry_;
    std::shared_ptr<GoalRegistry::Slot> slot_;
    KnobOptions options_;
    SynthesisReport synthesis_;
    double pole_ = 0.0;
    double goal_ = 0.0;
    double virtual_goal_ = 0.0;
    bool hard_ = false;
    bool super_hard_ = false;
    std::optional<double> measured_;
    std::optional<double> last_pole_;

    bool profiling_ = false;
    ProfileSink sink_;
    std::vector<ProfileSample> buffer_;

    UnreachableHandler unreachable_;
    std::uint64_t pinned_steps_ = 0;
    int pinned_side_ = 0;
};

// Indirect knob: the controller drives a deputy variable (e.g. a queue length)
// and the configuration (e.g. the queue's limit) is derived by a transducer.
class IndirectKnob : public Knob {
public:
    using Transducer = std::function<double(double desired_deputy)>;

    IndirectKnob(std::string name, std::string deputy_name, GoalRegistry registry, KnobModel model,
                 KnobOptions options = {}, Transducer transducer = {});

    using Knob::set_perf;
    // The controller steps from `deputy_value`, the deputy's actual position.
    void set_perf(double measured, double deputy_value);

    double deputy() const;
    const std::string& deputy_name() const noexcept { return deputy_name_; }

protected:
    double to_conf(double controller_value) const override;
    double profiled_setting() const override { return state_.last_value; }

private:
    std::string deputy_name_;
    Transducer transducer_;
};

// Builds a knob from `<dir>/<name>.SmartConf.sys`. Samples are synthesized when
// the file has no synthesized parameters yet. Yields an IndirectKnob when the
// file names a deputy.
std::unique_ptr<Knob> open_knob(const std::filesystem::path& dir, const std::string& name,
                                GoalRegistry registry, KnobOptions options = {});

GoalRegistry load_goal_registry(const std::filesystem::path& goal_file);

} // namespace smartconf
