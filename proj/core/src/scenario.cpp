#include "smartconf/scenario.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>

#include "smartconf/errors.hpp"

namespace smartconf {

namespace {

constexpr std::string_view kQueueKnob = "max.queue.size";
constexpr std::string_view kResponseKnob = "ipc.server.response.queue.maxsize";

KnobSpec queue_knob(std::string name, std::string deputy) {
    KnobSpec k;
    k.name = std::move(name);
    k.deputy = std::move(deputy);
    k.initial = 0.0;
    k.conf_min = 0.0;
    k.conf_max = 1e6;
    k.integer_valued = true;
    k.profile_settings = {10, 30, 50, 70, 90};
    return k;
}

// Profiling mixes small and large requests (a 50/50 read/write analog), so the
// profiled gain sits between the two evaluation phases.
WorkloadSchedule mixed_profile(std::uint64_t seed) {
    return {{{1, 60.0, 2.0, 0.5, 1.0}}, seed};
}

Scenario hb3813_two_phase() {
    Scenario s;
    s.name = "hb3813-two-phase";
    s.kind = PlantKind::bounded_queue;
    // Request size doubles at the midpoint.
    s.schedule = {{{200, 60.0, 1.0, 0.0, 0.0}, {200, 60.0, 2.0, 0.0, 0.0}}, 1};
    s.profile_schedule = mixed_profile(7);
    s.ticks = 400;
    s.metric = "memory.used";
    s.goal = {495.0, true, false};
    s.knobs = {queue_knob(std::string(kQueueKnob), "queue.size")};
    return s;
}

Scenario hb3813_unstable() {
    Scenario s = hb3813_two_phase();
    s.name = "hb3813-unstable";
    // 70% writes / 30% reads, with faster background swings.
    s.schedule = {{{200, 60.0, 1.0, 0.3, 0.2}, {200, 60.0, 2.0, 0.3, 0.4}}, 1};
    s.bounded_queue.base_period = 40.0;
    s.pole_override = 0.9;
    return s;
}

Scenario hb2149_goal_shift() {
    Scenario s;
    s.name = "hb2149-goal-shift";
    s.kind = PlantKind::write_buffer;
    s.schedule = {{{600, 30.0, 0.0, 0.0, 0.0}}, 1};
    s.profile_schedule = {{{1, 30.0, 0.0, 0.0, 0.0}}, 7};
    s.ticks = 600;
    s.metric = "write.latency.worst";
    s.goal = {10.0, false, false};
    s.goal_shifts = {{300, 5.0}};
    KnobSpec k;
    k.name = "global.memstore.lowerLimit";
    k.initial = 0.25;
    k.conf_min = 0.0;
    k.conf_max = 0.39;
    k.profile_settings = {0.05, 0.12, 0.19, 0.26, 0.33};
    s.knobs = {k};
    s.profile_settle = 40;
    return s;
}

Scenario dualqueue_readwrite() {
    Scenario s;
    s.name = "dualqueue-readwrite";
    s.kind = PlantKind::dual_queue;
    // Writes only, then a read-heavy mix from tick 50.
    s.schedule = {{{50, 60.0, 0.0, 0.0, 0.0}, {250, 60.0, 0.0, 0.9, 0.0}}, 1};
    s.profile_schedule = {{{1, 60.0, 0.0, 0.5, 0.0}}, 7};
    s.ticks = 300;
    s.metric = "memory.used";
    s.goal = {495.0, true, true};
    auto request = queue_knob("ipc.server.max.queue.size", "rpc.queue.size");
    auto response = queue_knob(std::string(kResponseKnob), "response.queue.size");
    request.profile_other = 200.0;
    response.profile_other = 200.0;
    s.knobs = {request, response};
    return s;
}

std::string join_reals(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ":";
        out += format_real(values[i]);
    }
    return out;
}

std::vector<double> split_reals(std::string_view text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto colon = text.find(':', start);
        out.push_back(parse_real(text.substr(start, colon - start)));
        if (colon == std::string_view::npos) break;
        start = colon + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view text) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw InvalidArgument("not an integer: '" + std::string(text) + "'");
    }
    return v;
}

bool parse_flag(std::string_view text) {
    if (text == "0") return false;
    if (text == "1") return true;
    throw InvalidArgument("expected 0 or 1, got '" + std::string(text) + "'");
}

struct Field {
    std::string key;
    std::function<std::string()> get;
    std::function<void(std::string_view)> set;
};

Field real_field(std::string key, double& ref) {
    return {std::move(key), [&ref] { return format_real(ref); },
            [&ref](std::string_view v) { ref = parse_real(v); }};
}

Field int_field(std::string key, auto& ref) {
    return {std::move(key), [&ref] { return std::to_string(ref); },
            [&ref](std::string_view v) {
                ref = static_cast<std::remove_reference_t<decltype(ref)>>(parse_int(v));
            }};
}

Field flag_field(std::string key, bool& ref) {
    return {std::move(key), [&ref] { return std::string(ref ? "1" : "0"); },
            [&ref](std::string_view v) { ref = parse_flag(v); }};
}

void phase_fields(std::vector<Field>& out, const std::string& prefix, WorkloadSchedule& sched) {
    for (std::size_t i = 0; i < sched.phases.size(); ++i) {
        auto& p = sched.phases[i];
        const std::string base = prefix + "phase." + std::to_string(i + 1) + ".";
        out.push_back(int_field(base + "duration", p.duration));
        out.push_back(real_field(base + "arrival_rate", p.arrival_rate));
        out.push_back(real_field(base + "request_size_mb", p.request_size_mb));
        out.push_back(real_field(base + "read_fraction", p.read_fraction));
        out.push_back(real_field(base + "read_size_mb", p.read_size_mb));
    }
}

std::vector<Field> fields(Scenario& s) {
    std::vector<Field> f;
    f.push_back({"plant", [&s] { return std::string(to_string(s.kind)); },
                 [&s](std::string_view v) { s.kind = parse_plant_kind(v); }});
    f.push_back(int_field("ticks", s.ticks));
    f.push_back({"metric", [&s] { return s.metric; },
                 [&s](std::string_view v) { s.metric = std::string(v); }});
    f.push_back(real_field("goal", s.goal.goal));
    f.push_back(flag_field("goal.hard", s.goal.hard));
    f.push_back(flag_field("goal.super_hard", s.goal.super_hard));
    f.push_back(int_field("profile.reps", s.profile_reps));
    f.push_back(int_field("profile.settle", s.profile_settle));
    f.push_back(int_field("profile.seed", s.profile_seed));
    f.push_back({"pole", [&s] { return s.pole_override ? format_real(*s.pole_override) : "none"; },
                 [&s](std::string_view v) {
                     if (v == "none") {
                         s.pole_override.reset();
                     } else {
                         s.pole_override = parse_real(v);
                     }
                 }});

    auto& bq = s.bounded_queue;
    f.push_back(real_field("bq.mem_limit", bq.mem_limit));
    f.push_back(real_field("bq.base_mem", bq.base_mem));
    f.push_back(real_field("bq.base_amplitude", bq.base_amplitude));
    f.push_back(real_field("bq.base_period", bq.base_period));
    f.push_back(real_field("bq.base_jitter", bq.base_jitter));
    f.push_back(real_field("bq.drain_fraction", bq.drain_fraction));

    auto& wb = s.write_buffer;
    f.push_back(real_field("wb.heap_mb", wb.heap_mb));
    f.push_back(real_field("wb.upper_limit", wb.upper_limit));
    f.push_back(real_field("wb.flush_rate_mb", wb.flush_rate_mb));
    f.push_back(real_field("wb.flush_rate_jitter", wb.flush_rate_jitter));
    f.push_back(real_field("wb.flush_overhead_s", wb.flush_overhead_s));
    f.push_back(real_field("wb.write_jitter", wb.write_jitter));
    f.push_back(real_field("wb.latency_window", wb.latency_window));

    auto& dq = s.dual_queue;
    f.push_back(real_field("dq.mem_limit", dq.mem_limit));
    f.push_back(real_field("dq.base_mem", dq.base_mem));
    f.push_back(real_field("dq.base_amplitude", dq.base_amplitude));
    f.push_back(real_field("dq.base_period", dq.base_period));
    f.push_back(real_field("dq.base_jitter", dq.base_jitter));
    f.push_back(real_field("dq.request_drain_fraction", dq.request_drain_fraction));
    f.push_back(real_field("dq.response_drain_fraction", dq.response_drain_fraction));
    f.push_back(real_field("dq.write_request_mb", dq.write_request_mb));
    f.push_back(real_field("dq.write_response_mb", dq.write_response_mb));
    f.push_back(real_field("dq.read_request_mb", dq.read_request_mb));
    f.push_back(real_field("dq.read_response_mb", dq.read_response_mb));

    phase_fields(f, "", s.schedule);
    phase_fields(f, "profile.", s.profile_schedule);

    for (std::size_t i = 0; i < s.goal_shifts.size(); ++i) {
        auto& g = s.goal_shifts[i];
        const std::string base = "goal_shift." + std::to_string(i + 1) + ".";
        f.push_back(int_field(base + "tick", g.tick));
        f.push_back(real_field(base + "goal", g.goal));
    }
    for (std::size_t i = 0; i < s.knobs.size(); ++i) {
        auto& k = s.knobs[i];
        const std::string base = "knob." + std::to_string(i + 1) + ".";
        f.push_back({base + "name", [&k] { return k.name; },
                     [&k](std::string_view v) { k.name = std::string(v); }});
        f.push_back({base + "deputy", [&k] { return k.deputy.value_or("none"); },
                     [&k](std::string_view v) {
                         if (v == "none") {
                             k.deputy.reset();
                         } else {
                             k.deputy = std::string(v);
                         }
                     }});
        f.push_back(real_field(base + "initial", k.initial));
        f.push_back(real_field(base + "conf_min", k.conf_min));
        f.push_back(real_field(base + "conf_max", k.conf_max));
        f.push_back(flag_field(base + "integer", k.integer_valued));
        f.push_back({base + "profile_settings", [&k] { return join_reals(k.profile_settings); },
                     [&k](std::string_view v) { k.profile_settings = split_reals(v); }});
        f.push_back(real_field(base + "profile_other", k.profile_other));
    }
    return f;
}

// Grows indexed collections so that `key` has a slot to land in.
void ensure_slot(Scenario& s, std::string_view key) {
    const auto index_after = [&](std::string_view prefix) -> std::size_t {
        if (key.substr(0, prefix.size()) != prefix) return 0;
        const auto rest = key.substr(prefix.size());
        const auto dot = rest.find('.');
        std::size_t idx = 0;
        const auto res = std::from_chars(rest.data(), rest.data() + dot, idx);
        return res.ec == std::errc{} ? idx : 0;
    };
    if (auto i = index_after("phase."); i > 0 && i <= 64 && s.schedule.phases.size() < i) {
        s.schedule.phases.resize(i);
    }
    if (auto i = index_after("profile.phase."); i > 0 && i <= 64 && s.profile_schedule.phases.size() < i) {
        s.profile_schedule.phases.resize(i);
    }
    if (auto i = index_after("goal_shift."); i > 0 && i <= 64 && s.goal_shifts.size() < i) {
        s.goal_shifts.resize(i, GoalShift{0, 1.0});
    }
    if (auto i = index_after("knob."); i > 0 && i <= 8 && s.knobs.size() < i) {
        s.knobs.resize(i);
    }
}

} // namespace

std::string_view to_string(PlantKind kind) {
    switch (kind) {
    case PlantKind::bounded_queue: return "bounded_queue";
    case PlantKind::write_buffer: return "write_buffer";
    case PlantKind::dual_queue: return "dual_queue";
    }
    return "?";
}

PlantKind parse_plant_kind(std::string_view name) {
    if (name == "bounded_queue") return PlantKind::bounded_queue;
    if (name == "write_buffer") return PlantKind::write_buffer;
    if (name == "dual_queue") return PlantKind::dual_queue;
    throw ConfigError("unknown plant '" + std::string(name) +
                      "' (expected bounded_queue, write_buffer or dual_queue)");
}

std::vector<std::string> scenario_names() {
    return {"hb3813-two-phase", "hb3813-unstable", "hb2149-goal-shift", "dualqueue-readwrite"};
}

Scenario make_scenario(std::string_view name) {
    if (name == "hb3813-two-phase") return hb3813_two_phase();
    if (name == "hb3813-unstable") return hb3813_unstable();
    if (name == "hb2149-goal-shift") return hb2149_goal_shift();
    if (name == "dualqueue-readwrite") return dualqueue_readwrite();
    std::string list;
    for (const auto& n : scenario_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown scenario '" + std::string(name) + "'; presets: " + list);
}

std::unique_ptr<Plant> Scenario::make_plant(std::uint64_t seed) const {
    auto sched = schedule;
    sched.seed = seed;
    switch (kind) {
    case PlantKind::bounded_queue:
        return std::make_unique<BoundedQueuePlant>(bounded_queue, std::move(sched));
    case PlantKind::write_buffer:
        return std::make_unique<WriteBufferPlant>(write_buffer, std::move(sched),
                                                  knobs.empty() ? 0.25 : knobs.front().initial);
    case PlantKind::dual_queue:
        return std::make_unique<DualQueuePlant>(dual_queue, std::move(sched));
    }
    throw ConfigError("unknown plant kind");
}

std::unique_ptr<Plant> Scenario::make_profile_plant(std::uint64_t seed) const {
    Scenario copy = *this;
    copy.schedule = profile_schedule;
    return copy.make_plant(seed);
}

double Scenario::goal_at(std::int64_t tick) const {
    double g = goal.goal;
    std::int64_t latest = std::numeric_limits<std::int64_t>::min();
    for (const auto& shift : goal_shifts) {
        if (shift.tick <= tick && shift.tick >= latest) {
            latest = shift.tick;
            g = shift.goal;
        }
    }
    return g;
}

void Scenario::validate() const {
    schedule.validate();
    profile_schedule.validate();
    if (ticks <= 0) throw ConfigError("scenario " + name + ": ticks must be positive");
    if (metric.empty()) throw ConfigError("scenario " + name + ": no metric");
    if (!(goal.goal > 0.0)) throw ConfigError("scenario " + name + ": goal must be positive");
    if (goal.super_hard && !goal.hard) {
        throw ConfigError("scenario " + name + ": super_hard requires hard");
    }
    const std::size_t expected = kind == PlantKind::dual_queue ? 2 : 1;
    if (knobs.size() != expected) {
        throw ConfigError("scenario " + name + ": plant needs " + std::to_string(expected) + " knob(s)");
    }
    for (const auto& k : knobs) {
        if (k.name.empty()) throw ConfigError("scenario " + name + ": unnamed knob");
        if (!(k.conf_min <= k.conf_max)) throw ConfigError("knob " + k.name + ": bad range");
        if (k.profile_settings.size() < 2) {
            throw ConfigError("knob " + k.name + ": need at least 2 profile settings");
        }
    }
    for (const auto& g : goal_shifts) {
        if (!(g.goal > 0.0)) throw ConfigError("scenario " + name + ": shifted goal must be positive");
    }
    if (profile_reps < 1 || profile_settle < 0) {
        throw ConfigError("scenario " + name + ": bad profiling schedule");
    }
    if (pole_override && !(*pole_override >= 0.0 && *pole_override < 1.0)) {
        throw ConfigError("scenario " + name + ": pole must lie in [0, 1)");
    }
}

Scenario apply_scenario_overrides(Scenario base, std::string_view text) {
    const auto lines = parse_key_values(text);
    for (const auto& kv : lines) {
        if (kv.key == "scenario") base = make_scenario(kv.value);
    }
    for (const auto& kv : lines) {
        if (kv.key == "scenario") continue;
        if (kv.key == "name") {
            base.name = kv.value;
            continue;
        }
        ensure_slot(base, kv.key);
        bool matched = false;
        for (auto& field : fields(base)) {
            if (field.key != kv.key) continue;
            try {
                field.set(kv.value);
            } catch (const InvalidArgument& e) {
                throw ParseError(kv.line, e.what());
            }
            matched = true;
            break;
        }
        if (!matched) throw ParseError(kv.line, "unknown scenario key '" + kv.key + "'");
    }
    base.validate();
    return base;
}

std::string describe_scenario(const Scenario& scenario) {
    Scenario copy = scenario;
    std::string out = "name = " + copy.name + "\n";
    for (const auto& field : fields(copy)) out += field.key + " = " + field.get() + "\n";
    return out;
}

} // namespace smartconf
