#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "smartconf/errors.hpp"
#include "smartconf/harness.hpp"
#include "smartconf/knob.hpp"
#include "smartconf/scenario.hpp"

using namespace smartconf;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::size_t columns(const std::string& line) {
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

} // namespace

TEST_CASE("scenario presets") {
    const auto names = scenario_names();
    CHECK(names.size() == 4);
    for (const auto& n : names) {
        const auto s = make_scenario(n);
        CHECK(s.name == n);
        CHECK_NOTHROW(s.validate());
    }
    const auto two = make_scenario("hb3813-two-phase");
    CHECK(two.ticks == 400);
    REQUIRE(two.schedule.phases.size() == 2);
    CHECK(two.schedule.phases[0].duration == 200);
    CHECK(two.schedule.phases[1].request_size_mb == 2 * two.schedule.phases[0].request_size_mb);
    CHECK(two.bounded_queue.mem_limit == 495.0);
    CHECK(two.knobs[0].initial == 0.0);

    const auto dq = make_scenario("dualqueue-readwrite");
    CHECK(dq.schedule.phases[0].duration == 50);
    CHECK(dq.schedule.phases[0].read_fraction == 0.0);
    CHECK(dq.schedule.phases[1].read_fraction > 0.0);
    CHECK(dq.goal.super_hard);

    const auto shift = make_scenario("hb2149-goal-shift");
    REQUIRE(shift.goal_shifts.size() == 1);
    CHECK(shift.goal_shifts[0].goal == shift.goal.goal / 2);
    CHECK(shift.goal_at(shift.goal_shifts[0].tick - 1) == shift.goal.goal);
    CHECK(shift.goal_at(shift.goal_shifts[0].tick) == shift.goal.goal / 2);

    CHECK_THROWS_WITH_AS(make_scenario("hb9999"), doctest::Contains("hb3813-two-phase"), ConfigError);
}

TEST_CASE("scenario overrides") {
    SUBCASE("describe then apply is the identity") {
        for (const auto& n : scenario_names()) {
            const auto s = make_scenario(n);
            const auto text = describe_scenario(s);
            CHECK(describe_scenario(apply_scenario_overrides(make_scenario("hb3813-two-phase"),
                                                             "scenario = " + n + "\n" + text)) == text);
        }
    }
    SUBCASE("individual keys") {
        auto s = apply_scenario_overrides(make_scenario("hb3813-two-phase"),
                                          "ticks = 50\nbq.mem_limit = 600\nknob.1.profile_settings = 5:15:25\n"
                                          "phase.3.duration = 10\nphase.3.arrival_rate = 5\n");
        CHECK(s.ticks == 50);
        CHECK(s.bounded_queue.mem_limit == 600);
        CHECK(s.knobs[0].profile_settings == std::vector<double>{5, 15, 25});
        CHECK(s.schedule.phases.size() == 3);
    }
    SUBCASE("errors carry the line") {
        CHECK_THROWS_WITH_AS(apply_scenario_overrides(make_scenario("hb3813-two-phase"), "ticks = 5\nwat = 1\n"),
                             doctest::Contains("line 2"), ParseError);
        CHECK_THROWS_AS(apply_scenario_overrides(make_scenario("hb3813-two-phase"), "ticks = many\n"), ParseError);
        CHECK_THROWS_AS(apply_scenario_overrides(make_scenario("hb3813-two-phase"), "ticks = 0\n"), ConfigError);
    }
}

TEST_CASE("modes") {
    CHECK(Mode::parse("smartconf").kind == ModeKind::smartconf);
    CHECK(Mode::parse("single-pole").kind == ModeKind::single_pole);
    CHECK(Mode::parse("no-virtual-goal").kind == ModeKind::no_virtual_goal);
    const auto st = Mode::parse("static:1000");
    CHECK(st.kind == ModeKind::static_value);
    CHECK(st.static_value == 1000);
    for (const char* text : {"smartconf", "single-pole", "no-virtual-goal", "static:1000", "static:0.35"}) {
        CHECK(Mode::parse(text).str() == text);
    }
    CHECK_THROWS_AS(Mode::parse("pid"), InvalidArgument);
    CHECK_THROWS_AS(Mode::parse("static:"), InvalidArgument);
}

TEST_CASE("warmup") {
    CHECK(warmup_ticks(400) == 40);
    CHECK(warmup_ticks(10) == 1);
}

TEST_CASE("profiling a scenario knob") {
    const auto s = make_scenario("hb3813-two-phase");
    const std::vector<double> settings{10, 30, 50, 70, 90};
    const auto samples = profile_knob(s, 0, settings, 20, s.profile_settle, s.profile_seed);
    CHECK(samples.size() == 100);
    CHECK(samples == profile_knob(s, 0, settings, 20, s.profile_settle, s.profile_seed));
    CHECK_THROWS_AS(profile_knob(s, 1, settings, 20, 10, 7), InvalidArgument);
    CHECK_THROWS_AS(profile_knob(s, 0, settings, 0, 10, 7), InvalidArgument);

    SUBCASE("default profile lands lambda near 0.1") {
        const auto rep = synthesize_scenario(s).at(0);
        CHECK(rep.lambda >= 0.05);
        CHECK(rep.lambda <= 0.2);
        // Frozen regression value for the default seed.
        CHECK(rep.lambda == doctest::Approx(0.08978078733196089).epsilon(1e-9));
        CHECK(rep.alpha > 0.0);
    }
    SUBCASE("a noiseless plant synthesizes pole 0") {
        auto quiet = apply_scenario_overrides(s, "bq.base_amplitude = 0\nbq.base_jitter = 0\n"
                                                 "profile.phase.1.read_fraction = 0\n");
        const auto rep = synthesize_scenario(quiet).at(0);
        CHECK(rep.delta == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.pole == 0.0);
        CHECK(rep.lambda == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("run traces") {
    const auto s = make_scenario("hb3813-two-phase");
    const auto controllers = synthesize_scenario(s);

    SUBCASE("shape and summary consistency") {
        const auto r = run_scenario(s, Mode::parse("smartconf"), 3, controllers);
        const auto csv = lines(r.trace.to_csv());
        REQUIRE(csv.size() == 401);
        CHECK(csv[0] == "tick,conf_value,deputy_value,metric,goal,virtual_goal,effective_pole,violation,throughput_cum");
        for (std::size_t i = 1; i < csv.size(); ++i) CHECK(columns(csv[i]) == 9);
        std::int64_t violations = 0;
        for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
            CHECK(r.trace.rows[i].tick == static_cast<std::int64_t>(i));
            violations += r.trace.rows[i].violation ? 1 : 0;
        }
        CHECK(violations == r.summary.violations);
        CHECK(r.summary.throughput_cum == r.trace.rows.back().throughput_cum);
    }
    SUBCASE("static mode never moves the knob") {
        const auto r = run_scenario(s, Mode::parse("static:120"), 3, {});
        for (const auto& row : r.trace.rows) {
            CHECK(row.knobs[0].conf == 120.0);
            CHECK_FALSE(row.knobs[0].effective_pole);
        }
        CHECK(lines(r.trace.to_csv())[1].find(",,") != std::string::npos);
    }
    SUBCASE("identical inputs give identical bytes") {
        const auto a = run_scenario(s, Mode::parse("smartconf"), 11, controllers).trace.to_csv();
        const auto b = run_scenario(s, Mode::parse("smartconf"), 11, controllers).trace.to_csv();
        CHECK(a == b);
        CHECK(a != run_scenario(s, Mode::parse("smartconf"), 12, controllers).trace.to_csv());
    }
    SUBCASE("one controller per knob") {
        CHECK_THROWS_AS(run_scenario(s, Mode::parse("smartconf"), 1, {}), InvalidArgument);
    }
    SUBCASE("smartconf never overflows where static 1000 does") {
        CHECK(run_scenario(s, Mode::parse("smartconf"), 5, controllers).summary.violations == 0);
        CHECK(run_scenario(s, Mode::parse("static:1000"), 5, {}).summary.violations > 0);
        CHECK(run_scenario(s, Mode::parse("no-virtual-goal"), 5, controllers).summary.violations > 0);
    }
    SUBCASE("ablation modes") {
        const auto single = run_scenario(s, Mode::parse("single-pole"), 5, controllers);
        for (const auto& row : single.trace.rows) {
            if (row.knobs[0].effective_pole) CHECK(*row.knobs[0].effective_pole == controllers[0].pole);
        }
        const auto novg = run_scenario(s, Mode::parse("no-virtual-goal"), 5, controllers);
        CHECK(novg.trace.rows[0].virtual_goal == 495.0);
    }
}

TEST_CASE("multi-knob traces append per-knob columns") {
    const auto s = make_scenario("dualqueue-readwrite");
    const auto r = run_scenario(s, Mode::parse("static:40"), 2, {});
    const auto csv = lines(r.trace.to_csv());
    CHECK(csv[0] == RunTrace::header(2));
    CHECK(csv[0].find(",conf_value_2,deputy_value_2,effective_pole_2") != std::string::npos);
    CHECK(columns(csv[1]) == 12);
}

TEST_CASE("replay: the queue limit falls while memory climbs past the virtual goal") {
    // Saturated queue: the deputy sits at the limit and memory keeps rising.
    const auto s = make_scenario("hb3813-two-phase");
    const auto rep = synthesize_scenario(s).at(0);
    GoalRegistry reg;
    reg.set_goal_entry(s.metric, s.goal);
    KnobOptions opts;
    opts.integer_valued = true;
    opts.conf_max = 1e6;
    IndirectKnob knob("max.queue.size", "queue.size", reg, {s.metric, 150.0, rep}, opts);
    const double vg = knob.params().virtual_goal;
    double limit = 150.0;
    double memory = vg + 1.0;
    for (int i = 0; i < 30; ++i) {
        knob.set_perf(memory, limit);
        const double next = knob.get_conf();
        CHECK(next < limit);
        CHECK(*knob.last_effective_pole() == 0.0);
        limit = next;
        memory += 0.5;
        if (limit <= 0.0) break;
    }
}

TEST_CASE("sweep") {
    CHECK(SweepRange::parse("0:10:5").values() == std::vector<double>{0, 5, 10});
    CHECK(SweepRange::parse("0:9:5").values() == std::vector<double>{0, 5});
    CHECK(SweepRange::parse("1:1:1").values() == std::vector<double>{1});
    CHECK_THROWS_AS(SweepRange::parse("0:10"), InvalidArgument);
    CHECK_THROWS_AS(SweepRange::parse("10:0:1"), InvalidArgument);
    CHECK_THROWS_AS(SweepRange::parse("0:10:0"), InvalidArgument);

    const auto s = make_scenario("hb3813-two-phase");
    const auto r = sweep_static(s, SweepRange::parse("0:200:20"), 1, 2);
    REQUIRE(r.points.size() == 11);
    REQUIRE(r.best_static);
    for (const auto& p : r.points) {
        if (p.violations == 0) CHECK(p.throughput_cum <= r.best_throughput);
    }
    CHECK(r.points.back().violations > 0);
    // Worker count never changes the answer.
    const auto serial = sweep_static(s, SweepRange::parse("0:200:20"), 1, 1);
    CHECK(serial.to_csv() == r.to_csv());

    const auto smart = run_scenario(s, Mode::parse("smartconf"), 1);
    CHECK(r.best_throughput < smart.summary.throughput_cum);
}

TEST_CASE("compare") {
    const auto s = apply_scenario_overrides(make_scenario("hb3813-two-phase"), "ticks = 60\n");
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const std::vector<Mode> modes{Mode::parse("smartconf"), Mode::parse("static:1000")};
    const auto r = compare_modes(s, seeds, modes, 3);
    REQUIRE(r.runs.size() == 6);
    CHECK(r.runs[0].mode == modes[0]);
    CHECK(r.runs[2].seed == 2);
    CHECK(r.runs[3].mode == modes[1]);
    REQUIRE(r.aggregates.size() == 2);
    CHECK(r.aggregates[1].violating_seeds == 3);
    const auto csv = lines(r.to_csv());
    CHECK(csv.size() == 1 + 6 + 2);
    CHECK(csv[0] == "row,mode,seed,violations,violating_seeds,throughput_cum,mean_abs_error");
    CHECK(compare_modes(s, seeds, modes, 1).to_csv() == r.to_csv());
}
