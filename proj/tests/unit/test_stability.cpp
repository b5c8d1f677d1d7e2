#include <catch_amalgamated.hpp>

#include <cmath>

#include "chainstab/scenarios.hpp"
#include "chainstab/stability.hpp"

using namespace chainstab;

namespace {

const JetEngineScenario& jet() {
    static const auto s = build_jet_engine(0.001);
    return s;
}

}  // namespace

TEST_CASE("scalar suite with the exponential envelope", "[stability]") {
    const auto s = build_scalar("x_squared", drift_by_name("x_squared"));
    SuiteOptions opt;
    opt.radii = {0.5, 1.5, 5.0};
    opt.trials = 10;
    opt.lyapunov_trials = 4;
    opt.t_end = 150.0;
    opt.schedule_max = 0.0;
    opt.envelope_label = "exp";
    opt.envelope = [](ConstSpan x0, double t) {
        return (x0[0] > 0.0 && x0[0] < 2.0) ? std::exp(-t) * x0[0] : std::numeric_limits<double>::infinity();
    };
    const auto rep = run_stability_suite(*s.system, s.feedback(), opt);
    CHECK(rep.pass());
    CHECK(rep.envelope_checked);
    CHECK(rep.trials.size() == 3 * 10 + 3 * 4);
    // settling is nondecreasing in the radius and in 1 / epsilon
    for (const auto& row : rep.settling)
        for (std::size_t k = 1; k < row.size(); ++k) CHECK(row[k] >= row[k - 1]);
    for (std::size_t k = 0; k < rep.radii_sorted.size(); ++k) CHECK(rep.settling[1][k] >= rep.settling[0][k]);
}

TEST_CASE("trials from the origin stay at zero", "[stability]") {
    const auto& j = jet();
    SuiteOptions opt;
    opt.radii = {0.0};
    opt.trials = 3;
    opt.lyapunov_trials = 1;
    opt.deltas = {1e-3};
    opt.t_end = 2.0;
    const auto rep = run_stability_suite(*j.system, j.simulation_feedback(0.001), opt);
    for (const auto& t : rep.trials)
        if (t.group == "radius") {
            CHECK(t.sup_norm == 0.0);
            for (double st : t.settling) CHECK(st == 0.0);
        }
    CHECK(rep.lagrange_table.front() == 0.0);
}

TEST_CASE("flipped control on Omega_4 breaks attractivity", "[stability]") {
    const auto& j = jet();
    const auto fb = j.simulation_feedback(0.001).with_chain(j.feedback().chain().with_control(4, Vec{1.0}));
    SuiteOptions opt;
    opt.radii = {15.0};
    opt.trials = 8;
    opt.lyapunov_trials = 2;
    opt.deltas = {1e-3};
    opt.t_end = 5.0;
    const auto rep = run_stability_suite(*j.system, fb, opt);
    CHECK_FALSE(rep.pass());
    CHECK_FALSE(rep.attractivity.pass);
    CHECK_FALSE(rep.attractivity.witness.empty());
}

TEST_CASE("suite results do not depend on the worker count", "[stability]") {
    const auto& j = jet();
    SuiteOptions opt;
    opt.radii = {5.0};
    opt.trials = 6;
    opt.lyapunov_trials = 2;
    opt.deltas = {1e-2};
    opt.t_end = 5.0;
    opt.seed = 77;
    const auto fb = j.simulation_feedback(0.001);
    opt.workers = 1;
    const auto a = run_stability_suite(*j.system, fb, opt).to_json();
    opt.workers = 3;
    const auto b = run_stability_suite(*j.system, fb, opt).to_json();
    CHECK(a.dump() == b.dump());
}

TEST_CASE("set descent along figure trajectories", "[stability]") {
    const auto& j = jet();
    const auto bounds = j.descent_bounds();
    CHECK(bounds.chain_length == 4);
    for (int fig = 1; fig <= 3; ++fig) {
        const auto f = j.figure(fig);
        const auto traj =
            simulate_closed_loop(*j.system, j.simulation_feedback(f.h), f.x0, f.disturbance, f.schedule, f.t_end);
        const auto rep = check_set_descent(traj, bounds, 1e-6, &j.theta);
        INFO("figure " << fig);
        CHECK(rep.pass());
        REQUIRE_FALSE(rep.transitions.empty());
        CHECK(rep.transitions.back().second == 1);
        CHECK(rep.theta_entry_time <= rep.theta_entry_bound);
    }
}

TEST_CASE("descent from cell 4 within x20 - 1 plus one gap", "[stability]") {
    const auto& j = jet();
    const Vec x0{0.0, 25.0};  // V = 312.5, outside Theta, x2 > 1
    const auto d = DisturbanceSignal::constant(j.system->disturbance_box(), Vec{0, 0});
    const double h = 0.001;
    const auto traj =
        simulate_closed_loop(*j.system, j.simulation_feedback(h), x0, d, SchedulePerturbation::zero(), 30.0);
    REQUIRE(traj.cells.front() == 4);
    double left_cell4 = -1.0;
    for (std::size_t k = 0; k < traj.cells.size(); ++k)
        if (traj.cells[k] != 4) {
            left_cell4 = traj.instants[k];
            break;
        }
    REQUIRE(left_cell4 >= 0.0);
    CHECK(left_cell4 <= x0[1] - 1.0 + h + 1e-9);
    CHECK(check_set_descent(traj, j.descent_bounds(), 1e-6, &j.theta).pass());
}

TEST_CASE("trajectory inside Theta passes vacuously", "[stability]") {
    const auto& j = jet();
    const auto d = DisturbanceSignal::constant(j.system->disturbance_box(), Vec{0, 0});
    const auto traj = simulate_closed_loop(*j.system, j.simulation_feedback(0.001), Vec{0.5, -0.5}, d,
                                           SchedulePerturbation::zero(), 2.0);
    const auto rep = check_set_descent(traj, j.descent_bounds(), 1e-6, &j.theta);
    CHECK(rep.pass());
    CHECK(rep.theta_entry_time == 0.0);
}
