#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "chainstab/dynamics.hpp"
#include "chainstab/errors.hpp"
#include "chainstab/scenarios.hpp"

using namespace chainstab;
using Catch::Matchers::WithinAbs;

namespace {

const ControlSystem& jet() {
    static const auto s = build_jet_engine(0.001);
    return *s.system;
}

}  // namespace

TEST_CASE("jet engine vector field by substitution", "[dynamics]") {
    const auto& sys = jet();
    CHECK(sys.eval_rhs(Vec{0, 0}, Vec{0, 0}, Vec{0}) == Vec{0, 0});
    // 1.5 * 1 * 1 - 0.5 + 0
    CHECK(sys.eval_rhs(Vec{0, 1}, Vec{1, 0}, Vec{0}) == Vec{1, 0});
    // 1 + 1.5 - 0.5 + 1, u
    CHECK(sys.eval_rhs(Vec{1, 1}, Vec{1, 1}, Vec{-2}) == Vec{3, -2});
    CHECK(sys.origin_equilibrium());
    CHECK(origin_equilibrium_residual(sys, 5) == 0.0);
}

TEST_CASE("eval_rhs rejects bad inputs", "[dynamics]") {
    const auto& sys = jet();
    CHECK_THROWS_AS(sys.eval_rhs(Vec{0, 0}, Vec{0}, Vec{0}), DimensionMismatch);
    CHECK_THROWS_AS(sys.eval_rhs(Vec{0, 0}, Vec{0, 0}, Vec{0, 0}), DimensionMismatch);
    CHECK_THROWS_AS(sys.eval_rhs(Vec{1.5, 0}, Vec{0, 0}, Vec{0}), DisturbanceOutOfBox);

    const auto sc = build_scalar("x_squared", drift_by_name("x_squared"));
    CHECK(sc.system->eval_rhs(Vec{}, Vec{2}, Vec{-1}) == Vec{3});
    CHECK_THROWS_AS(sc.system->eval_rhs(Vec{}, Vec{2}, Vec{1}), ControlOutOfSet);
}

TEST_CASE("boxes and control sets", "[dynamics]") {
    const Box b = Box::symmetric(2, 1.0);
    CHECK(b.contains(Vec{1, -1}));
    CHECK_FALSE(b.contains(Vec{1.01, 0}));
    Vec p{3, -0.5};
    b.clamp(p);
    CHECK(p == Vec{1, -0.5});
    CHECK_THAT(b.max_norm(), WithinAbs(std::sqrt(2.0), 1e-15));
    CHECK_FALSE(Box::unbounded(1).bounded());

    const auto neg = ControlSet::nonpositive(1);
    CHECK(neg.contains(Vec{0}));
    CHECK(neg.contains(Vec{-1e9}));
    CHECK_FALSE(neg.contains(Vec{1e-12}));
}

TEST_CASE("disturbance signals", "[dynamics]") {
    const Box D = Box::symmetric(2, 1.0);
    CHECK(DisturbanceSignal::constant(D, Vec{0, 1}).sample(7.3) == Vec{0, 1});

    const auto s = DisturbanceSignal::sinusoidal(D, Vec{1, 0}, 1, 1.0, 1.0, 0.0);
    const Vec v = s.sample(std::numbers::pi / 2);
    CHECK(v[0] == 1.0);
    CHECK_THAT(v[1], WithinAbs(1.0, 1e-15));
    CHECK_THAT(s.sample(1.0)[1], WithinAbs(std::sin(1.0), 1e-15));

    const auto r1 = DisturbanceSignal::random_piecewise(D, 0.1, 42);
    const auto r2 = DisturbanceSignal::random_piecewise(D, 0.1, 42);
    const auto r3 = DisturbanceSignal::random_piecewise(D, 0.1, 43);
    bool differs = false;
    for (int k = 0; k < 200; ++k) {
        const double t = 0.037 * k;
        CHECK(r1.sample(t) == r2.sample(t));
        CHECK(D.contains(r1.sample(t)));
        differs = differs || r1.sample(t) != r3.sample(t);
    }
    CHECK(differs);
    // held on each mesh interval
    CHECK(r1.sample(0.31) == r1.sample(0.39));
    const auto bp = r1.breakpoints(0.05, 0.35);
    REQUIRE(bp.size() == 3);
    CHECK_THAT(bp[0], WithinAbs(0.1, 1e-12));
    CHECK_THAT(bp[2], WithinAbs(0.3, 1e-12));

    const DisturbanceSignal tab(Box::symmetric(1, 1.0), {axis::Tabulated{{1.0, 2.0}, {0.5, -0.5}}});
    CHECK(tab.sample(0.0)[0] == 0.5);
    CHECK(tab.sample(1.5)[0] == 0.5);
    CHECK(tab.sample(2.0)[0] == -0.5);
    Vec left(1);
    tab.sample_left_into(2.0, left);
    CHECK(left[0] == 0.5);
}

TEST_CASE("out-of-box disturbance values are clamped", "[dynamics]") {
    const DisturbanceSignal s(Box::symmetric(1, 1.0), {axis::Constant{3.0}}, true);
    CHECK(s.may_leave_box());
    CHECK(s.sample(0.0)[0] == 1.0);
}

TEST_CASE("schedule perturbations", "[dynamics]") {
    CHECK(SchedulePerturbation::zero().value(3.0) == 0.0);
    CHECK(SchedulePerturbation::abs_sin().value(-std::numbers::pi / 2) == 1.0);
    CHECK(SchedulePerturbation::constant(0.25).value(10.0) == 0.25);
    const auto r = SchedulePerturbation::random_tabulated(0.5, 1.0, 10.0, 9);
    for (int k = 0; k < 40; ++k) {
        const double v = r.value(0.25 * k);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("hypothesis estimators on the jet engine", "[dynamics]") {
    const auto& sys = jet();
    const Box x_box = Box::symmetric(2, 2.0);
    const Box u_box = Box::symmetric(1, 1.0);
    const auto est = estimate_one_sided_lipschitz(sys, x_box, u_box, 2000, 3);
    CHECK(est.pairs == 2000);
    CHECK(std::isfinite(est.max_quotient));
    const auto g = fit_growth_envelope(sys, x_box, u_box, 500, 4);
    CHECK(g.samples == 500);
    CHECK(g.scale > 0.0);
    CHECK(g(0.0) == 0.0);
    for (int k = 1; k < 50; ++k) CHECK(g(0.1 * k) >= g(0.1 * (k - 1)));
}
