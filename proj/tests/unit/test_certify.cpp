#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "chainstab/certify.hpp"
#include "chainstab/errors.hpp"
#include "chainstab/random.hpp"
#include "chainstab/scenarios.hpp"

using namespace chainstab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using big = boost::multiprecision::cpp_dec_float_50;

namespace {

const JetEngineScenario& jet() {
    static const auto s = build_jet_engine(0.001);
    return s;
}

big bound_50(const big& L, const big& gamma, const big& M) {
    const big q = 1 / ((1 + M) * (1 + M));
    if (L == 0) return q / (2 * gamma);
    return log(1 + L / gamma * q) / (2 * L);
}

double rel_err(double got, const big& want) {
    return static_cast<double>(abs((big(got) - want) / want));
}

}  // namespace

TEST_CASE("sampling period bound against 50-digit arithmetic", "[certify]") {
    CHECK(max_sampling_period(0.0, 0.5, 0.0) == 1.0);

    const big eps("0.001");
    const big R = big(457) / 2 + eps;
    const big L = big(7) / 2 + sqrt(2 * R);
    const big gamma = 9 * R / 4 + (R * R + 1) / 2 + (5 * R - 332) * (5 * R - 332) / 2;
    const big M = sqrt(big(80) / 3 * (big(421) * 421 + 225 * R * R));
    const big want = bound_50(L, gamma, M);
    const auto& j = jet();
    CHECK(rel_err(j.L, L) < 1e-15);
    CHECK(rel_err(j.gamma, gamma) < 1e-15);
    CHECK(rel_err(j.M, M) < 1e-15);
    CHECK(rel_err(j.h_bound, want) < 1e-12);
    CHECK(j.h_bound > 1e-16);
    CHECK(j.h_bound < 1e-14);
    CHECK(j.h_tilde == 0.99 * j.h_bound);

    Rng rng(2024);
    for (int i = 0; i < 100; ++i) {
        const double Li = i % 10 == 0 ? 0.0 : std::pow(10.0, rng.uniform(-6, 3));
        const double gi = std::pow(10.0, rng.uniform(-3, 7));
        const double Mi = i % 7 == 0 ? 0.0 : std::pow(10.0, rng.uniform(-2, 5));
        INFO("L=" << Li << " gamma=" << gi << " M=" << Mi);
        CHECK(rel_err(max_sampling_period(Li, gi, Mi), bound_50(big(Li), big(gi), big(Mi))) < 1e-12);
    }

    const double at_zero = max_sampling_period(0.0, 3.0, 2.0);
    CHECK_THAT(max_sampling_period(1e-8, 3.0, 2.0), WithinRel(at_zero, 1e-9));
}

TEST_CASE("sampling period bound shape and errors", "[certify]") {
    double prev = max_sampling_period(2.0, 5.0, 0.0);
    for (int k = 1; k < 30; ++k) {
        const double h = max_sampling_period(2.0, 5.0, std::pow(2.0, k));
        CHECK(h < prev);
        prev = h;
    }
    CHECK_THROWS_AS(max_sampling_period(1.0, 0.0, 1.0), NonpositiveGamma);
    CHECK_THROWS_AS(max_sampling_period(1.0, -2.0, 1.0), NonpositiveGamma);
    CHECK_THROWS_AS(max_sampling_period(-1.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(max_sampling_period(1.0, 1.0, -1.0), InvalidArgument);
}

TEST_CASE("jet-engine constants", "[certify]") {
    const auto& j = jet();
    CHECK_THAT(j.R, WithinAbs(228.501, 1e-12));
    CHECK_THAT(j.L, WithinAbs(3.5 + std::sqrt(457.002), 1e-12));
    CHECK(j.r == 1.0);
    CHECK_THROWS_AS(build_jet_engine(0.0), NonpositiveEpsilon);
    CHECK_THROWS_AS(build_jet_engine(-1.0), NonpositiveEpsilon);
}

TEST_CASE("monotone envelopes", "[certify]") {
    const auto t = MonotoneEnvelope::tabulated("t", {0, 1, 2}, {0, 3, 2});
    CHECK(t(0.0) == 0.0);
    CHECK(t(0.5) == 1.5);
    CHECK(t(1.5) == 3.0);
    CHECK(t(2.0) == 3.0);
    CHECK(std::isinf(t(2.5)));
    const auto a = MonotoneEnvelope::analytic("s", [](double s) { return s; });
    const auto m = MonotoneEnvelope::pointwise_max("m", {a, t});
    CHECK(m(0.5) == 1.5);
    CHECK(m(1.9) == 3.0);
    CHECK(std::isinf(m(3.0)));
}

TEST_CASE("inversion of increasing functions", "[certify]") {
    CHECK_THAT(invert_increasing([](double s) { return s * s * s; }, 27.0), WithinRel(3.0, 1e-12));
    CHECK(invert_increasing([](double s) { return s; }, 0.0) == 0.0);
    CHECK_THAT(invert_increasing([](double s) { return s; }, 1e308), WithinRel(1e308, 1e-12));
    CHECK(std::isinf(invert_increasing([](double s) { return s; }, std::numeric_limits<double>::infinity())));
    CHECK(std::isinf(invert_increasing([](double s) { return s / (1.0 + s); }, 2.0)));
    CHECK_THROWS_AS(invert_increasing([](double s) { return s; }, std::nan("")), InversionFailure);
}

TEST_CASE("cube directions", "[certify]") {
    CHECK(cube_directions(2, 3).size() == 8);
    CHECK(cube_directions(2, 41).size() == 160);
    for (const auto& d : cube_directions(3, 5)) CHECK_THAT(norm(d), WithinAbs(1.0, 1e-15));
}

TEST_CASE("decrease certificate for x1^2 on the band", "[certify]") {
    const auto& j = jet();
    const auto V = LyapunovRegistry::builtin().find("x1_squared");
    DecreaseGrid grid;
    grid.truncation = Box{{-20, -1}, {20, 1}};
    grid.nodes_per_axis = {201, 41};
    grid.disturbance_nodes_per_axis = 9;
    const auto res = certify_decrease(*j.system, j.omegas[1], *V, Vec{0}, 16.0, 7.0, grid);
    CHECK(res.pass);
    CHECK(res.worst <= -7.0 + 1e-9);
    CHECK(res.state_nodes == 201 * 41);
    CHECK(res.evaluated_nodes > 0);

    // oracle: dV/dt = 2 x1 (d1 x1 + 1.5 d2 x1^2 - 0.5 x1^3 + x2) on a 10x finer
    // local grid around the reported maximizer, with V >= 16 and |x2| <= 1
    const auto lfv = [](double x1, double x2, double d1, double d2) {
        return 2.0 * x1 * (d1 * x1 + 1.5 * d2 * x1 * x1 - 0.5 * x1 * x1 * x1 + x2);
    };
    double local = -std::numeric_limits<double>::infinity();
    const double w1 = res.spacing[0], w2 = res.spacing[1];
    for (int a = -10; a <= 10; ++a)
        for (int b = -10; b <= 10; ++b) {
            const double x1 = res.witness_x[0] + 0.1 * a * w1, x2 = res.witness_x[1] + 0.1 * b * w2;
            if (x1 * x1 < 16.0 || std::abs(x2) > 1.0) continue;
            for (int p = 0; p <= 20; ++p)
                for (int q = 0; q <= 20; ++q) local = std::max(local, lfv(x1, x2, -1 + 0.1 * p, -1 + 0.1 * q));
        }
    CHECK(std::abs(local - res.worst) <= 0.05 * std::abs(res.worst));

    const auto bad = certify_decrease(*j.system, j.omegas[1], *V, Vec{0}, 16.0, 1e6, grid);
    CHECK_FALSE(bad.pass);
    CHECK(bad.witness_x.size() == 2);
    CHECK(bad.witness_d.size() == 2);

    DecreaseGrid empty = grid;
    empty.nodes_per_axis = {0, 41};
    CHECK_THROWS_AS(certify_decrease(*j.system, j.omegas[1], *V, Vec{0}, 16.0, 7.0, empty), EmptyGrid);
}

TEST_CASE("explicit bounds from the decrease certificate", "[certify]") {
    const auto in = jet().omega2_bounds_input();
    const auto bounds = reach_bounds(in);
    CHECK(bounds.c == 0.0);
    CHECK_THAT(bounds.b(5.0), WithinAbs(9.0 / 7.0, 1e-12));
    CHECK(bounds.b(4.0) == 0.0);
    CHECK(bounds.b(1.0) == 0.0);
    CHECK_THAT(bounds.t_bound(Vec{5, 0}), WithinAbs(9.0 / 7.0, 1e-12));
    CHECK(bounds.t_bound(Vec{3, 0.5}) == 0.0);
    CHECK_THAT(bounds.a(4.0), WithinRel(8.0 * std::exp(4.0), 1e-9));
    CHECK_THAT(bounds.a(0.0), WithinAbs(0.0, 1e-300));
    // the table is nondecreasing
    for (int k = 1; k <= 800; ++k) CHECK(bounds.a(0.05 * k) >= bounds.a(0.05 * (k - 1)));

    ReachBoundsInput bad = in;
    bad.delta = 0.0;
    CHECK_THROWS_AS(reach_bounds(bad), InvalidArgument);
    bad = in;
    bad.radii.clear();
    CHECK_THROWS_AS(reach_bounds(bad), EmptyGrid);
}

TEST_CASE("reachability under constant control", "[certify]") {
    const auto& j = jet();
    SECTION("Omega_4 to Omega_2 with the closed-form hitting time") {
        const auto cert = j.omega4_to_omega2();
        PropertyQOptions opt;
        opt.trials = 50;
        opt.seed = 3;
        opt.sample_box = Box{{-10, 1}, {10, 10}};
        opt.max_initial_norm = 10.0;
        const auto res = check_property_Q(*j.system, cert, opt);
        CHECK(res.pass());
        CHECK(res.trials.size() == 50);
        CHECK(res.worst_hit_error <= 1e-6);
        for (const auto& t : res.trials) CHECK_THAT(t.t_hit, WithinAbs(t.x0[1] - 1.0, 1e-6));
    }
    SECTION("Omega_3 to Omega_2") {
        PropertyQOptions opt;
        opt.trials = 30;
        opt.sample_box = Box{{-10, -10}, {10, -1}};
        opt.max_initial_norm = 10.0;
        const auto res = check_property_Q(*j.system, j.omega3_to_omega2(), opt);
        CHECK(res.pass());
        for (const auto& t : res.trials) CHECK_THAT(t.t_hit, WithinAbs(-1.0 - t.x0[1], 1e-6));
    }
    SECTION("Omega_2 to the target with derived bounds") {
        PropertyQOptions opt;
        opt.trials = 40;
        opt.seed = 9;
        opt.sample_box = Box{{-20, -1}, {20, 1}};
        const auto res = check_property_Q(*j.system, j.omega2_to_target(), opt);
        CHECK(res.pass());
    }
    SECTION("a start already in the target hits at 0") {
        PropertyQOptions opt;
        opt.trials = 10;
        opt.sample_box = Box{{-4, -1}, {4, 1}};
        const auto res = check_property_Q(*j.system, j.omega2_to_target(), opt);
        CHECK(res.pass());
        for (const auto& t : res.trials) CHECK(t.t_hit == 0.0);
    }
    SECTION("wrong control is caught") {
        auto cert = j.omega4_to_omega2();
        cert.v = {1.0};
        PropertyQOptions opt;
        opt.trials = 5;
        opt.sample_box = Box{{-5, 2}, {5, 5}};
        const auto res = check_property_Q(*j.system, cert, opt);
        CHECK_FALSE(res.pass());
    }
}

TEST_CASE("inner feedback inequalities on a grid in Theta", "[certify]") {
    const auto& j = jet();
    InequalityGrid grid;
    const auto rho = [](double s) { return s; };
    const auto rep = check_inner_inequalities(*j.system, j.inner, *j.V, j.theta, j.L, j.gamma, j.M, rho, grid);
    CHECK(rep.pass());
    CHECK(rep.theta_nodes > 0);
    CHECK(rep.one_sided.checked > 0);
    CHECK(rep.decrease.checked > 0);

    // a far smaller L is violated and reported with a witness
    const auto low = check_inner_inequalities(*j.system, j.inner, *j.V, j.theta, j.L * 1e-3, j.gamma, j.M, rho, grid);
    CHECK_FALSE(low.one_sided.pass);
    CHECK(low.one_sided.witness_z.size() == 2);
    CHECK(low.one_sided.worst > 0.0);
}

TEST_CASE("attractor reach for x' = -x", "[certify]") {
    const ControlSystem sys("decay", 1, 1, Box{}, ControlSet::all(1),
                            [](ConstSpan, ConstSpan x, ConstSpan, MutSpan dx) { dx[0] = -x[0]; }, true);
    AttractorReachOptions opt;
    opt.epsilons = {0.1};
    opt.radii = {0.05, 0.5, 1.0, 2.0, 4.0};
    const auto res = estimate_attractor_reach(sys, Vec{0}, DisturbanceSignal::none(), opt);
    CHECK(res.pass);
    REQUIRE(res.reach.size() == 1);
    CHECK(res.reach[0][0] == 0.0);
    CHECK_THAT(res.reach[0][2], WithinRel(std::log(10.0), 0.05));
    for (std::size_t k = 1; k < res.radii.size(); ++k) CHECK(res.reach[0][k] >= res.reach[0][k - 1]);

    const auto& j = jet();
    CHECK_THROWS_AS(estimate_attractor_reach(*j.system, Vec{0},
                                             DisturbanceSignal::random_piecewise(j.system->disturbance_box(), 0.1, 1), opt),
                    InvalidArgument);
}
