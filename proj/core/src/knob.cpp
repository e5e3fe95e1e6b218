#include "smartconf/knob.hpp"

#include <atomic>
#include <cmath>
#include <map>

#include "smartconf/errors.hpp"

namespace smartconf {

struct GoalRegistry::Slot {
    std::atomic<std::uint32_t> count{0};
    std::vector<std::string> names;
    std::map<std::string, double> virtual_goals;
};

struct GoalRegistry::Impl {
    mutable std::mutex mu;
    std::map<std::string, GoalEntry> goals;
    std::map<std::string, std::shared_ptr<Slot>> slots;
};

GoalRegistry::GoalRegistry() : impl_(std::make_shared<Impl>()) {}

GoalRegistry::GoalRegistry(const GoalFile& goals) : GoalRegistry() {
    impl_->goals = goals.goals;
}

void GoalRegistry::set_goal_entry(const std::string& metric, const GoalEntry& entry) {
    if (entry.super_hard && !entry.hard) {
        throw InvalidArgument("metric " + metric + " is super_hard but not hard");
    }
    std::lock_guard lock(impl_->mu);
    impl_->goals[metric] = entry;
}

std::optional<GoalEntry> GoalRegistry::goal(const std::string& metric) const {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->goals.find(metric);
    if (it == impl_->goals.end()) return std::nullopt;
    return it->second;
}

std::uint32_t GoalRegistry::knob_count(const std::string& metric) const {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->slots.find(metric);
    return it == impl_->slots.end() ? 0 : it->second->count.load();
}

std::vector<std::string> GoalRegistry::knob_names(const std::string& metric) const {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->slots.find(metric);
    return it == impl_->slots.end() ? std::vector<std::string>{} : it->second->names;
}

std::shared_ptr<GoalRegistry::Slot> GoalRegistry::attach(const std::string& metric,
                                                         const std::string& knob) {
    std::lock_guard lock(impl_->mu);
    auto& slot = impl_->slots[metric];
    if (!slot) slot = std::make_shared<Slot>();
    slot->names.push_back(knob);
    slot->count.fetch_add(1);
    return slot;
}

void GoalRegistry::detach(const std::string& metric, const std::string& knob) {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->slots.find(metric);
    if (it == impl_->slots.end()) return;
    auto& names = it->second->names;
    if (const auto pos = std::find(names.begin(), names.end(), knob); pos != names.end()) {
        names.erase(pos);
        it->second->count.fetch_sub(1);
    }
    if (std::find(names.begin(), names.end(), knob) == names.end()) {
        it->second->virtual_goals.erase(knob);
    }
}

void GoalRegistry::publish_virtual_goal(const std::shared_ptr<Slot>& slot, const std::string& knob,
                                        double virtual_goal) {
    std::lock_guard lock(impl_->mu);
    slot->virtual_goals[knob] = virtual_goal;
}

double GoalRegistry::shared_virtual_goal(const std::shared_ptr<Slot>& slot, double own) const {
    std::lock_guard lock(impl_->mu);
    for (const auto& [name, vg] : slot->virtual_goals) own = std::min(own, vg);
    return own;
}

Knob::Knob(std::string name, GoalRegistry registry, KnobModel model, KnobOptions options)
    : name_(std::move(name)),
      metric_(std::move(model.metric)),
      registry_(std::move(registry)),
      options_(options),
      synthesis_(model.synthesis) {
    const auto entry = registry_.goal(metric_);
    if (!entry) {
        throw ConfigError("no goal for metric " + metric_);
    }
    if (!std::isfinite(model.initial_value)) {
        throw InvalidArgument("initial value must be finite");
    }
    pole_ = options_.pole_override.value_or(synthesis_.pole);
    goal_ = entry->goal;
    hard_ = entry->hard;
    virtual_goal_ = options_.use_virtual_goal
                        ? compute_virtual_goal(goal_, synthesis_.lambda, hard_)
                        : goal_;
    state_.last_value = model.initial_value;
    value_ = model.initial_value;
    super_hard_ = entry->super_hard;
    params_locked().validate();
    slot_ = registry_.attach(metric_, name_);
    if (super_hard_) registry_.publish_virtual_goal(slot_, name_, virtual_goal_);
}

Knob::~Knob() {
    registry_.detach(metric_, name_);
}

ControllerParams Knob::params_locked() const {
    ControllerParams p;
    p.alpha = synthesis_.alpha;
    p.pole = pole_;
    p.goal = goal_;
    p.virtual_goal = virtual_goal_;
    p.hard = hard_;
    p.conf_min = options_.conf_min;
    p.conf_max = options_.conf_max;
    p.switching = options_.switching;
    if (super_hard_ && slot_) {
        p.interaction_n = std::max<std::uint32_t>(1, slot_->count.load());
        // Knobs sharing a super-hard goal track one setpoint: the tightest.
        p.virtual_goal = registry_.shared_virtual_goal(slot_, virtual_goal_);
    }
    return p;
}

std::vector<ProfileSample> Knob::store_measurement_locked(double measured) {
    measured_ = measured;
    if (!profiling_) return {};
    buffer_.push_back({profiled_setting(), measured});
    if (buffer_.size() < kProfileFlushEvery) return {};
    return std::exchange(buffer_, {});
}

void Knob::deliver(std::vector<ProfileSample> batch) const {
    if (batch.empty()) return;
    ProfileSink sink;
    {
        std::lock_guard lock(mu_);
        sink = sink_;
    }
    if (sink) sink(batch);
}

void Knob::set_perf(double measured) {
    if (!std::isfinite(measured)) throw InvalidArgument("measurement must be finite");
    std::vector<ProfileSample> batch;
    {
        std::lock_guard lock(mu_);
        batch = store_measurement_locked(measured);
    }
    deliver(std::move(batch));
}

double Knob::round_safe(double v) const {
    if (!options_.integer_valued) return v;
    return synthesis_.alpha > 0.0 ? std::floor(v) : std::ceil(v);
}

void Knob::track_unreachable(double unclamped, double measured, const ControllerParams& p,
                             std::vector<UnreachableGoal>& alerts) {
    const double target = state_.last_value;
    int side = 0;
    if (unclamped < p.conf_min) side = -1;
    if (unclamped > p.conf_max) side = 1;
    const double error = p.virtual_goal - measured;
    const int signed_side = side * (error > 0.0 ? 1 : (error < 0.0 ? -1 : 0));
    if (signed_side != 0 && signed_side == pinned_side_) {
        ++pinned_steps_;
    } else {
        pinned_side_ = signed_side;
        pinned_steps_ = signed_side != 0 ? 1 : 0;
    }
    if (pinned_steps_ == kUnreachableSteps) {
        alerts.push_back({name_, metric_, goal_, target, pinned_steps_});
    }
}

double Knob::get_conf() {
    std::vector<UnreachableGoal> alerts;
    UnreachableHandler handler;
    double result = 0.0;
    {
        std::lock_guard lock(mu_);
        if (!measured_) return value_;
        const auto p = params_locked();
        const double unclamped = state_.last_value + unclamped_adjustment(p, *measured_);
        const auto step = control_step(state_, p, *measured_);
        last_pole_ = step.effective_pole;
        track_unreachable(unclamped, *measured_, p, alerts);
        value_ = round_safe(to_conf(step.next_value));
        result = value_;
        handler = unreachable_;
    }
    if (handler) {
        for (const auto& a : alerts) handler(a);
    }
    return result;
}

void Knob::set_goal(double goal) {
    if (!std::isfinite(goal) || goal <= 0.0) {
        throw InvalidArgument("goal must be positive");
    }
    std::lock_guard lock(mu_);
    const double vg = options_.use_virtual_goal
                          ? compute_virtual_goal(goal, synthesis_.lambda, hard_)
                          : goal;
    goal_ = goal;
    virtual_goal_ = vg;
    if (super_hard_ && slot_) registry_.publish_virtual_goal(slot_, name_, virtual_goal_);
}

double Knob::value() const {
    std::lock_guard lock(mu_);
    return value_;
}

ControllerParams Knob::params() const {
    std::lock_guard lock(mu_);
    return params_locked();
}

ControllerState Knob::state() const {
    std::lock_guard lock(mu_);
    return state_;
}

double Knob::lambda() const {
    return synthesis_.lambda;
}

std::optional<double> Knob::last_effective_pole() const {
    std::lock_guard lock(mu_);
    return last_pole_;
}

void Knob::enable_profiling(ProfileSink sink) {
    std::lock_guard lock(mu_);
    profiling_ = true;
    sink_ = std::move(sink);
}

void Knob::flush_profile() {
    std::vector<ProfileSample> batch;
    {
        std::lock_guard lock(mu_);
        batch = std::exchange(buffer_, {});
    }
    deliver(std::move(batch));
}

void Knob::on_unreachable(UnreachableHandler handler) {
    std::lock_guard lock(mu_);
    unreachable_ = std::move(handler);
}

IndirectKnob::IndirectKnob(std::string name, std::string deputy_name, GoalRegistry registry,
                           KnobModel model, KnobOptions options, Transducer transducer)
    : Knob(std::move(name), std::move(registry), std::move(model), options),
      deputy_name_(std::move(deputy_name)),
      transducer_(std::move(transducer)) {}

void IndirectKnob::set_perf(double measured, double deputy_value) {
    if (!std::isfinite(measured) || !std::isfinite(deputy_value)) {
        throw InvalidArgument("measurement and deputy value must be finite");
    }
    std::vector<ProfileSample> batch;
    {
        std::lock_guard lock(mu_);
        state_.last_value = deputy_value;
        batch = store_measurement_locked(measured);
    }
    deliver(std::move(batch));
}

double IndirectKnob::deputy() const {
    std::lock_guard lock(mu_);
    return state_.last_value;
}

double IndirectKnob::to_conf(double controller_value) const {
    return transducer_ ? transducer_(controller_value) : controller_value;
}

std::unique_ptr<Knob> open_knob(const std::filesystem::path& dir, const std::string& name,
                                GoalRegistry registry, KnobOptions options) {
    const auto path = dir / knob_sys_filename(name);
    if (!std::filesystem::exists(path)) {
        throw ConfigError("missing system file " + path.string());
    }
    const auto sys = parse_knob_sys(read_text_file(path));
    if (sys.conf_name != name) {
        throw ConfigError(path.string() + " describes '" + sys.conf_name + "', not '" + name + "'");
    }
    const auto entry = registry.goal(sys.metric);
    if (!entry) {
        throw ConfigError("no goal for metric " + sys.metric);
    }
    KnobModel model{sys.metric, sys.initial_conf, {}};
    if (sys.synthesized) {
        model.synthesis = *sys.synthesized;
    } else if (!sys.samples.empty()) {
        model.synthesis = synthesize(sys.samples, entry->goal, entry->hard);
    } else {
        throw ConfigError(path.string() + " has neither synthesized parameters nor samples");
    }
    if (sys.deputy_name) {
        return std::make_unique<IndirectKnob>(name, *sys.deputy_name, std::move(registry),
                                              std::move(model), options);
    }
    return std::make_unique<Knob>(name, std::move(registry), std::move(model), options);
}

GoalRegistry load_goal_registry(const std::filesystem::path& goal_file) {
    if (!std::filesystem::exists(goal_file)) {
        throw ConfigError("missing goal file " + goal_file.string());
    }
    return GoalRegistry(parse_goal_file(read_text_file(goal_file)));
}

} // namespace smartconf
