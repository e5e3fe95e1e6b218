#include "smartconf/harness.hpp"

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "smartconf/errors.hpp"
#include "smartconf/knob.hpp"

namespace smartconf {

namespace {

// Runs task(i) for i in [0, n) on up to `workers` threads.
template <typename Task>
void parallel_for(std::size_t n, unsigned workers, Task&& task) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) task(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

KnobOptions options_for(const KnobSpec& spec, const Mode& mode, const Scenario& scenario) {
    KnobOptions o;
    o.conf_min = spec.conf_min;
    o.conf_max = spec.conf_max;
    o.integer_valued = spec.integer_valued;
    o.pole_override = scenario.pole_override;
    if (mode.kind == ModeKind::single_pole) o.switching = PoleSwitching::fixed;
    if (mode.kind == ModeKind::no_virtual_goal) o.use_virtual_goal = false;
    return o;
}

} // namespace

std::string csv_real(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

Mode Mode::parse(std::string_view text) {
    if (text == "smartconf") return {ModeKind::smartconf, 0.0};
    if (text == "single-pole") return {ModeKind::single_pole, 0.0};
    if (text == "no-virtual-goal") return {ModeKind::no_virtual_goal, 0.0};
    constexpr std::string_view prefix = "static:";
    if (text.substr(0, prefix.size()) == prefix) {
        return {ModeKind::static_value, parse_real(text.substr(prefix.size()))};
    }
    throw InvalidArgument("unknown mode '" + std::string(text) +
                          "' (expected smartconf, static:<value>, single-pole, no-virtual-goal)");
}

std::string Mode::str() const {
    switch (kind) {
    case ModeKind::smartconf: return "smartconf";
    case ModeKind::static_value: return "static:" + csv_real(static_value);
    case ModeKind::single_pole: return "single-pole";
    case ModeKind::no_virtual_goal: return "no-virtual-goal";
    }
    return "?";
}

std::int64_t warmup_ticks(std::int64_t ticks) {
    return static_cast<std::int64_t>(std::ceil(kWarmupFraction * static_cast<double>(ticks)));
}

std::string RunTrace::header(std::size_t knob_count) {
    std::string h =
        "tick,conf_value,deputy_value,metric,goal,virtual_goal,effective_pole,violation,throughput_cum";
    for (std::size_t k = 1; k < knob_count; ++k) {
        const auto n = std::to_string(k + 1);
        h += ",conf_value_" + n + ",deputy_value_" + n + ",effective_pole_" + n;
    }
    return h;
}

std::string RunTrace::to_csv() const {
    std::string out = header(knob_count) + "\n";
    const auto pole = [](const KnobColumns& k) {
        return k.effective_pole ? csv_real(*k.effective_pole) : std::string();
    };
    for (const auto& r : rows) {
        const auto& k0 = r.knobs.at(0);
        out += std::to_string(r.tick) + "," + csv_real(k0.conf) + "," + csv_real(k0.deputy) + "," +
               csv_real(r.metric) + "," + csv_real(r.goal) + "," + csv_real(r.virtual_goal) + "," +
               pole(k0) + "," + (r.violation ? "1" : "0") + "," + csv_real(r.throughput_cum);
        for (std::size_t k = 1; k < r.knobs.size(); ++k) {
            out += "," + csv_real(r.knobs[k].conf) + "," + csv_real(r.knobs[k].deputy) + "," +
                   pole(r.knobs[k]);
        }
        out += "\n";
    }
    return out;
}

std::vector<ProfileSample> profile_knob(const Scenario& scenario, std::size_t knob_index,
                                        std::span<const double> settings, int reps, int settle,
                                        std::uint64_t seed) {
    if (knob_index >= scenario.knobs.size()) throw InvalidArgument("no such knob");
    if (settings.empty() || reps < 1 || settle < 0) {
        throw InvalidArgument("profiling needs settings, reps >= 1 and settle >= 0");
    }
    auto plant = scenario.make_profile_plant(seed);
    const bool indirect = scenario.knobs[knob_index].deputy.has_value();
    std::vector<double> values(scenario.knobs.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = scenario.knobs[k].profile_other;

    std::vector<ProfileSample> samples;
    samples.reserve(settings.size() * static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        for (double setting : settings) {
            values[knob_index] = setting;
            MetricReading reading;
            for (int t = 0; t <= settle; ++t) reading = plant->step(values);
            const double x = indirect ? reading.deputies.at(knob_index) : setting;
            samples.push_back({x, reading.metric});
        }
    }
    return samples;
}

std::vector<SynthesisReport> synthesize_scenario(const Scenario& scenario) {
    scenario.validate();
    std::vector<SynthesisReport> out;
    for (std::size_t k = 0; k < scenario.knobs.size(); ++k) {
        const auto& spec = scenario.knobs[k];
        const auto samples = profile_knob(scenario, k, spec.profile_settings, scenario.profile_reps,
                                          scenario.profile_settle, scenario.profile_seed + k);
        out.push_back(synthesize(samples, scenario.goal.goal, scenario.goal.hard));
    }
    return out;
}

RunResult run_scenario(const Scenario& scenario, const Mode& mode, std::uint64_t seed) {
    if (mode.kind == ModeKind::static_value) return run_scenario(scenario, mode, seed, {});
    const auto controllers = synthesize_scenario(scenario);
    return run_scenario(scenario, mode, seed, controllers);
}

RunResult run_scenario(const Scenario& scenario, const Mode& mode, std::uint64_t seed,
                       std::span<const SynthesisReport> controllers) {
    scenario.validate();
    const bool controlled = mode.kind != ModeKind::static_value;
    const std::size_t n = scenario.knobs.size();
    if (controlled && controllers.size() != n) {
        throw InvalidArgument("one synthesized controller per knob required");
    }

    GoalRegistry registry;
    registry.set_goal_entry(scenario.metric, scenario.goal);
    std::vector<std::unique_ptr<Knob>> knobs;
    std::vector<IndirectKnob*> indirect(n, nullptr);
    if (controlled) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto& spec = scenario.knobs[k];
            KnobModel model{scenario.metric, spec.initial, controllers[k]};
            const auto options = options_for(spec, mode, scenario);
            if (spec.deputy) {
                auto knob = std::make_unique<IndirectKnob>(spec.name, *spec.deputy, registry,
                                                           std::move(model), options);
                indirect[k] = knob.get();
                knobs.push_back(std::move(knob));
            } else {
                knobs.push_back(std::make_unique<Knob>(spec.name, registry, std::move(model), options));
            }
        }
    }

    std::vector<KnobColumns> current(n);
    for (std::size_t k = 0; k < n; ++k) {
        current[k].conf = controlled ? scenario.knobs[k].initial : mode.static_value;
    }
    const KnobHook hook = [&](std::size_t k, const Sense& sense) {
        if (!controlled) return mode.static_value;
        if (indirect[k]) {
            indirect[k]->set_perf(sense.metric, sense.deputy);
        } else {
            knobs[k]->set_perf(sense.metric);
        }
        current[k].conf = knobs[k]->get_conf();
        current[k].effective_pole = knobs[k]->last_effective_pole();
        return current[k].conf;
    };

    auto plant = scenario.make_plant(seed);
    const bool hard_limit = std::isfinite(plant->limit());
    const std::int64_t warmup = warmup_ticks(scenario.ticks);

    RunResult result;
    result.trace.knob_count = n;
    result.trace.rows.reserve(static_cast<std::size_t>(scenario.ticks));
    auto& summary = result.summary;
    summary.scenario = scenario.name;
    summary.mode = mode;
    summary.seed = seed;
    double error_sum = 0.0;
    std::int64_t error_count = 0;

    for (std::int64_t t = 0; t < scenario.ticks; ++t) {
        for (const auto& shift : scenario.goal_shifts) {
            if (shift.tick == t) {
                for (auto& knob : knobs) knob->set_goal(shift.goal);
            }
        }
        const auto reading = plant->step(hook);

        TraceRow row;
        row.tick = t;
        row.knobs = current;
        for (std::size_t k = 0; k < n; ++k) row.knobs[k].deputy = reading.deputies.at(k);
        row.metric = reading.metric;
        row.goal = scenario.goal_at(t);
        row.virtual_goal = controlled ? knobs.front()->params().virtual_goal : row.goal;
        row.violation = hard_limit ? reading.violation : reading.metric > row.goal;
        row.throughput_cum = reading.throughput_cum;

        if (row.violation) {
            ++summary.violations;
            if (!summary.first_violation_tick) summary.first_violation_tick = t;
        }
        if (t >= warmup) {
            error_sum += std::abs(row.virtual_goal - row.metric);
            ++error_count;
        }
        summary.throughput_cum = row.throughput_cum;
        result.trace.rows.push_back(std::move(row));
    }
    summary.mean_abs_error = error_count ? error_sum / static_cast<double>(error_count) : 0.0;
    return result;
}

SweepRange SweepRange::parse(std::string_view text) {
    const auto first = text.find(':');
    const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
    if (second == std::string_view::npos) {
        throw InvalidArgument("range must look like a:b:step, got '" + std::string(text) + "'");
    }
    SweepRange r{parse_real(text.substr(0, first)),
                 parse_real(text.substr(first + 1, second - first - 1)),
                 parse_real(text.substr(second + 1))};
    if (!(r.step > 0.0) || r.stop < r.start) {
        throw InvalidArgument("range needs step > 0 and a <= b");
    }
    return r;
}

std::vector<double> SweepRange::values() const {
    std::vector<double> out;
    const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
    for (std::int64_t i = 0; i <= count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
}

std::string SweepResult::to_csv() const {
    std::string out = "value,violations,throughput_cum\n";
    for (const auto& p : points) {
        out += csv_real(p.value) + "," + std::to_string(p.violations) + "," +
               csv_real(p.throughput_cum) + "\n";
    }
    out += "# best_static," + (best_static ? csv_real(*best_static) : std::string("none")) + "," +
           csv_real(best_throughput) + "\n";
    return out;
}

SweepResult sweep_static(const Scenario& scenario, const SweepRange& range, std::uint64_t seed,
                         unsigned workers) {
    const auto values = range.values();
    SweepResult result;
    result.points.resize(values.size());
    parallel_for(values.size(), workers, [&](std::size_t i) {
        const auto run = run_scenario(scenario, {ModeKind::static_value, values[i]}, seed, {});
        result.points[i] = {values[i], run.summary.violations, run.summary.throughput_cum};
    });
    for (const auto& p : result.points) {
        if (p.violations == 0 && (!result.best_static || p.throughput_cum > result.best_throughput)) {
            result.best_static = p.value;
            result.best_throughput = p.throughput_cum;
        }
    }
    return result;
}

CompareResult compare_modes(const Scenario& scenario, std::span<const std::uint64_t> seeds,
                            std::span<const Mode> modes, unsigned workers) {
    std::vector<SynthesisReport> controllers;
    const bool any_controlled = std::any_of(modes.begin(), modes.end(), [](const Mode& m) {
        return m.kind != ModeKind::static_value;
    });
    if (any_controlled) controllers = synthesize_scenario(scenario);

    CompareResult result;
    result.runs.resize(modes.size() * seeds.size());
    parallel_for(result.runs.size(), workers, [&](std::size_t i) {
        const auto& mode = modes[i / seeds.size()];
        const auto seed = seeds[i % seeds.size()];
        result.runs[i] = run_scenario(scenario, mode, seed, controllers).summary;
    });
    for (std::size_t m = 0; m < modes.size(); ++m) {
        ModeAggregate agg;
        agg.mode = modes[m];
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const auto& run = result.runs[m * seeds.size() + s];
            ++agg.runs;
            if (run.violations > 0) ++agg.violating_seeds;
            agg.mean_throughput += run.throughput_cum;
            agg.mean_abs_error += run.mean_abs_error;
        }
        if (agg.runs) {
            agg.mean_throughput /= static_cast<double>(agg.runs);
            agg.mean_abs_error /= static_cast<double>(agg.runs);
        }
        result.aggregates.push_back(agg);
    }
    return result;
}

std::string CompareResult::to_csv() const {
    std::string out = "row,mode,seed,violations,violating_seeds,throughput_cum,mean_abs_error\n";
    for (const auto& r : runs) {
        out += "run," + r.mode.str() + "," + std::to_string(r.seed) + "," +
               std::to_string(r.violations) + "," + (r.violations > 0 ? "1" : "0") + "," +
               csv_real(r.throughput_cum) + "," + csv_real(r.mean_abs_error) + "\n";
    }
    for (const auto& a : aggregates) {
        out += "aggregate," + a.mode.str() + ",all,," + std::to_string(a.violating_seeds) + "," +
               csv_real(a.mean_throughput) + "," + csv_real(a.mean_abs_error) + "\n";
    }
    return out;
}

} // namespace smartconf
