#include <catch_amalgamated.hpp>

#include <cmath>

#include "chainstab/hybrid.hpp"
#include "chainstab/scenarios.hpp"

using namespace chainstab;
using Catch::Matchers::WithinAbs;

namespace {

const JetEngineScenario& jet() {
    static const auto s = build_jet_engine(0.001);
    return s;
}

}  // namespace

TEST_CASE("realized sampling instants", "[hybrid]") {
    CHECK(realized_instants(1.0, SchedulePerturbation::zero(), 3.5) == std::vector<double>{0, 1, 2, 3});
    const auto half = realized_instants(1.0, SchedulePerturbation::constant(std::log(2.0)), 2.0);
    REQUIRE(half.size() == 5);
    for (std::size_t k = 0; k < half.size(); ++k) CHECK_THAT(half[k], WithinAbs(0.5 * static_cast<double>(k), 1e-15));

    const auto fig3 = realized_instants(0.001, SchedulePerturbation::abs_sin(), 20.0);
    for (std::size_t k = 1; k < fig3.size(); ++k) {
        const double gap = fig3[k] - fig3[k - 1];
        CHECK(gap > 0.000367);
        CHECK(gap <= 0.001);
    }
    CHECK(fig3.back() <= 20.0);
}

TEST_CASE("scalar closed loop between two instants", "[hybrid]") {
    const auto s = build_scalar("x_squared", drift_by_name("x_squared"));
    const auto traj = simulate_closed_loop(*s.system, s.feedback(), Vec{1}, DisturbanceSignal::none(),
                                           SchedulePerturbation::zero(), 1.0 / 3.0);
    REQUIRE(traj.termination == Termination::reached_t_end);
    CHECK(traj.ends_on_instant);
    const double x1 = traj.final_state()[0];
    CHECK(x1 <= 2.0 / 3.0);
    CHECK(x1 >= 0.0);
    // (1 - 3t) x0 <= x(t) <= (1 - t) x0 on the first interval
    for (const auto& seg : traj.segments)
        for (std::size_t k = 0; k < seg.size(); ++k) {
            const double t = seg.time(k), x = seg.state(k)[0];
            CHECK(x <= 1.0 - t + 1e-12);
            CHECK(x >= 1.0 - 3.0 * t - 1e-12);
        }
}

TEST_CASE("origin stays at rest", "[hybrid]") {
    const auto& j = jet();
    const auto d = DisturbanceSignal::constant(j.system->disturbance_box(), Vec{1, -1});
    const auto traj = simulate_closed_loop(*j.system, j.simulation_feedback(0.01), Vec{0, 0}, d,
                                           SchedulePerturbation::zero(), 2.0);
    for (const auto& seg : traj.segments)
        for (std::size_t k = 0; k < seg.size(); ++k) {
            CHECK(seg.state(k)[0] == 0.0);
            CHECK(seg.state(k)[1] == 0.0);
        }
}

TEST_CASE("figure 1 starts in cell 4 and descends with slope -1", "[hybrid]") {
    const auto& j = jet();
    const auto f = j.figure(1);
    const auto traj = simulate_closed_loop(*j.system, j.simulation_feedback(f.h), f.x0, f.disturbance, f.schedule,
                                           f.t_end);
    REQUIRE(traj.termination == Termination::reached_t_end);
    CHECK(traj.cells.front() == 4);
    CHECK(traj.controls.front() == Vec{-1.0});
    std::size_t k = 0;
    while (traj.cells[k] != 1) {
        CHECK(traj.cells[k] == 4);
        const auto& seg = traj.segments[k];
        for (std::size_t i = 0; i < seg.size(); ++i) CHECK_THAT(seg.state(i)[1], WithinAbs(2.0 - seg.time(i), 1e-10));
        ++k;
    }
    CHECK(k > 0);
    CHECK(traj.final_time() == 20.0);
    CHECK(norm(traj.final_state()) < 1e-2);
    CHECK_THAT(traj.state_at(traj.instants[5])[1], WithinAbs(2.0 - traj.instants[5], 1e-10));
    CHECK(traj.max_norm() >= norm(f.x0));
}

TEST_CASE("finite escape ends the run and keeps the partial solution", "[hybrid]") {
    const ControlSystem sys("blowup", 1, 1, Box{}, ControlSet::all(1),
                            [](ConstSpan, ConstSpan x, ConstSpan u, MutSpan dx) { dx[0] = x[0] * x[0] + u[0]; }, false);
    const auto chain = SetChain::finite({Region::everything()}, {});
    const PiecewiseFeedback fb([](ConstSpan, MutSpan u) { u[0] = 0.0; }, chain, ControlSet::all(1), 0.25, 1.0);
    const auto traj = simulate_closed_loop(sys, fb, Vec{1}, DisturbanceSignal::none(), SchedulePerturbation::zero(), 3.0);
    CHECK(traj.termination == Termination::finite_escape);
    CHECK_THAT(traj.termination_time, WithinAbs(1.0, 1e-6));
    CHECK(traj.instants.size() == 4);
    CHECK(traj.final_time() < 1.0);
    CHECK_FALSE(traj.ends_on_instant);
}

TEST_CASE("schedule perturbation shortens the gaps", "[hybrid]") {
    const auto& j = jet();
    const auto f = j.figure(3);
    const auto traj = simulate_closed_loop(*j.system, j.simulation_feedback(f.h), f.x0, f.disturbance, f.schedule, 1.0);
    const auto expected = realized_instants(f.h, f.schedule, 1.0);
    REQUIRE(traj.instants.size() >= expected.size() - 1);
    for (std::size_t k = 0; k < traj.instants.size(); ++k) CHECK(traj.instants[k] == expected[k]);
}
