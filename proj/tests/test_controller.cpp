#include <doctest.h>

#include <cmath>
#include <limits>

#include "smartconf/controller.hpp"
#include "smartconf/errors.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace smartconf;

namespace {

ControllerParams base_params() {
    ControllerParams p;
    p.alpha = 2.0;
    p.pole = 0.9;
    p.goal = 100.0;
    p.virtual_goal = 100.0;
    p.hard = true;
    p.conf_min = -1e9;
    p.conf_max = 1e9;
    return p;
}

} // namespace

TEST_CASE("compute_pole boundaries") {
    CHECK(compute_pole(2.0) == 0.0);
    CHECK(compute_pole(4.0) == 0.5);
    CHECK(compute_pole(1.0) == 0.0);
    CHECK(compute_pole(1.5) == 0.0);
    CHECK(compute_pole(2.0000001) > 0.0);
    CHECK_THROWS_AS(compute_pole(0.5), InvalidArgument);
    CHECK_THROWS_AS(compute_pole(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    CHECK_THROWS_AS(compute_pole(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("compute_pole stays in [0, 1)") {
    gen::Gen g(11);
    for (int i = 0; i < 2000; ++i) {
        const double delta = 1.0 + g.magnitude(-6, 12);
        const double p = compute_pole(delta);
        CHECK(p >= 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("compute_virtual_goal") {
    CHECK(compute_virtual_goal(495.0, 0.0, true) == 495.0);
    CHECK(compute_virtual_goal(495.0, 0.101, true) == doctest::Approx(445.005).epsilon(1e-12));
    CHECK(std::round(compute_virtual_goal(495.0, 0.101, true)) == 445.0);
    CHECK(compute_virtual_goal(10.0, 0.3, false) == 10.0);
    CHECK(compute_virtual_goal(10.0, 5.0, false) == 10.0);

    SUBCASE("lambda >= 1 on a hard goal cannot be synthesized") {
        CHECK_THROWS_AS(compute_virtual_goal(100.0, 1.0, true), SynthesisError);
        CHECK_THROWS_WITH(compute_virtual_goal(100.0, 1.5, true),
                          doctest::Contains("system too unstable for a virtual goal"));
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS_AS(compute_virtual_goal(0.0, 0.1, true), InvalidArgument);
        CHECK_THROWS_AS(compute_virtual_goal(-5.0, 0.1, false), InvalidArgument);
        CHECK_THROWS_AS(compute_virtual_goal(10.0, -0.1, true), InvalidArgument);
    }
}

TEST_CASE("control_step worked examples") {
    auto p = base_params();
    ControllerState s{10.0, 0};

    SUBCASE("below the virtual goal uses the regular pole") {
        const auto r = control_step(s, p, 92.0);
        CHECK(r.next_value == doctest::Approx(10.4).epsilon(1e-15));
        CHECK(r.effective_pole == 0.9);
        CHECK(s.last_value == r.next_value);
        CHECK(s.step_index == 1);
    }
    SUBCASE("past the virtual goal of a hard goal switches to pole 0") {
        const auto r = control_step(s, p, 108.0);
        CHECK(r.effective_pole == 0.0);
        CHECK(r.next_value == 6.0);
    }
    SUBCASE("soft goals never switch") {
        p.hard = false;
        const auto r = control_step(s, p, 108.0);
        CHECK(r.effective_pole == 0.9);
        CHECK(r.next_value == doctest::Approx(9.6).epsilon(1e-15));
    }
    SUBCASE("fixed switching keeps the regular pole") {
        p.switching = PoleSwitching::fixed;
        CHECK(control_step(s, p, 108.0).effective_pole == 0.9);
    }
    SUBCASE("N = 2 halves the step") {
        p.interaction_n = 2;
        const auto r = control_step(s, p, 92.0);
        CHECK(r.next_value == doctest::Approx(10.2).epsilon(1e-15));
    }
    SUBCASE("measured exactly at the virtual goal keeps the regular pole and the value") {
        const auto r = control_step(s, p, 100.0);
        CHECK(r.effective_pole == 0.9);
        CHECK(r.next_value == 10.0);
    }
}

TEST_CASE("control_step clamps and counts") {
    auto p = base_params();
    p.conf_min = 0.0;
    p.conf_max = 12.0;
    ControllerState s{10.0, 41};
    CHECK(control_step(s, p, 0.0).next_value == 12.0);
    CHECK(s.step_index == 42);
    CHECK(control_step(s, p, 1e6).next_value == 0.0);
    CHECK(s.step_index == 43);
}

TEST_CASE("ControllerParams validation") {
    auto p = base_params();
    CHECK_NOTHROW(p.validate());
    auto bad = p;
    bad.pole = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = p;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = p;
    bad.interaction_n = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = p;
    bad.conf_min = 5;
    bad.conf_max = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = p;
    bad.hard = false;
    bad.virtual_goal = 90;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("property: switching, interaction, clamp and scale laws") {
    gen::Gen g(2024);
    for (int i = 0; i < 1000; ++i) {
        ControllerParams p;
        p.alpha = (g.coin() ? 1 : -1) * g.magnitude(-3, 3);
        p.pole = g.real(0.0, 0.999);
        p.goal = g.magnitude(-2, 4);
        p.hard = g.coin();
        p.virtual_goal = p.hard ? p.goal * (1.0 - g.real(0.0, 0.5)) : p.goal;
        p.conf_min = g.real(-100, 0);
        p.conf_max = g.real(0, 100);
        p.interaction_n = static_cast<std::uint32_t>(g.integer(1, 8));
        const double measured = p.goal * g.real(0.0, 2.0);
        ControllerState s{g.real(p.conf_min, p.conf_max), 0};

        const double expected_pole = (p.hard && measured > p.virtual_goal) ? 0.0 : p.pole;
        CHECK(effective_pole(p, measured) == expected_pole);

        auto one = p;
        one.interaction_n = 1;
        const double n = static_cast<double>(p.interaction_n);
        CHECK(oracle::close(unclamped_adjustment(p, measured), unclamped_adjustment(one, measured) / n, 1e-14));

        auto scaled = p;
        const double t = g.magnitude(-2, 2);
        scaled.alpha *= t;
        CHECK(oracle::close(unclamped_adjustment(scaled, measured), unclamped_adjustment(p, measured) / t, 1e-12));

        const auto r = control_step(s, p, measured);
        CHECK(r.next_value >= p.conf_min);
        CHECK(r.next_value <= p.conf_max);
    }
}

TEST_CASE("property: geometric convergence on the nominal plant") {
    gen::Gen g(99);
    for (int i = 0; i < 200; ++i) {
        ControllerParams p;
        const double alpha = (g.coin() ? 1 : -1) * g.magnitude(-2, 2);
        p.alpha = alpha;
        p.pole = g.coin(0.2) ? 0.0 : g.real(0.0, 0.95);
        p.goal = g.magnitude(0, 4);
        p.virtual_goal = p.goal;
        p.conf_min = -std::numeric_limits<double>::max();
        ControllerState s{0.0, 0};
        const int bound = p.pole > 0.0
                              ? static_cast<int>(std::ceil(std::log(1e-6) / std::log(p.pole))) + 1
                              : 1;
        double sensed = alpha * s.last_value;
        for (int k = 0; k < bound; ++k) {
            control_step(s, p, sensed);
            sensed = alpha * s.last_value;
        }
        CHECK(std::fabs(p.virtual_goal - sensed) < 1e-6 * p.virtual_goal);
    }
}
