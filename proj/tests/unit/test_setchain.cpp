#include <catch_amalgamated.hpp>

#include <cmath>

#include "chainstab/errors.hpp"
#include "chainstab/random.hpp"
#include "chainstab/scenarios.hpp"
#include "chainstab/setchain.hpp"

using namespace chainstab;
using Catch::Matchers::WithinAbs;

namespace {

const JetEngineScenario& jet() {
    static const auto s = build_jet_engine(0.001);
    return s;
}

const ScalarScenario& scalar() {
    static const auto s = build_scalar("x_squared", drift_by_name("x_squared"));
    return s;
}

double V(const Vec& x) { return 0.5 * x[0] * x[0] + 0.5 * (x[1] + 5 * x[0]) * (x[1] + 5 * x[0]); }

}  // namespace

TEST_CASE("jet-engine cells on probe points", "[setchain]") {
    const auto dec = decompose(jet().omegas);
    REQUIRE(dec.cells.size() == 4);
    const double R = 457.0 / 2.0 + 0.001;
    Rng rng(5);
    for (int i = 0; i < 5000; ++i) {
        const Vec x{rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const bool outside = V(x) >= R;
        CHECK(dec.cells[0].contains(x) == !outside);
        CHECK(dec.cells[1].contains(x) == (std::abs(x[1]) <= 1 && outside));
        CHECK(dec.cells[2].contains(x) == (x[1] < -1 && outside));
        CHECK(dec.cells[3].contains(x) == (x[1] > 1 && outside));
    }
}

TEST_CASE("single region chain", "[setchain]") {
    const auto r = Region::band(0, 2.0);
    const auto dec = decompose({r});
    REQUIRE(dec.cells.size() == 1);
    CHECK(dec.cells[0].same_descriptor(r));
    CHECK(dec.unions[0].same_descriptor(r));
    CHECK_THROWS_AS(decompose({}), EmptyChain);
}

TEST_CASE("cells are disjoint and cover the union", "[setchain]") {
    const auto dec = decompose(jet().omegas);
    Rng rng(17);
    for (int i = 0; i < 100000; ++i) {
        const double r = 50.0 * std::sqrt(rng.uniform());
        const double th = 2.0 * M_PI * rng.uniform();
        const Vec x{r * std::cos(th), r * std::sin(th)};
        int claims = 0;
        for (const auto& c : dec.cells) claims += c.contains(x) ? 1 : 0;
        bool in_union = false;
        for (const auto& o : jet().omegas) in_union = in_union || o.contains(x);
        REQUIRE(claims == (in_union ? 1 : 0));
    }
}

TEST_CASE("classification", "[setchain]") {
    const auto& chain = jet().feedback().chain();
    CHECK(chain.classify(Vec{10, 2}) == 4);
    CHECK(chain.classify(Vec{0, 0}) == 1);
    CHECK(chain.classify(Vec{10, 0}) == 2);
    CHECK(chain.classify(Vec{10, -3}) == 3);

    const auto partial = SetChain::finite({Region::band(0, 1.0), Region::band(1, 1.0)}, {Vec{0}});
    CHECK(partial->classify(Vec{5, 0.5}) == 2);
    CHECK_THROWS_AS(partial->classify(Vec{5, 5}), NotCovered);

    const auto& sc = scalar().feedback().chain();
    CHECK(sc.mode() == SetChain::Mode::locally_finite);
    CHECK(sc.classify(Vec{2.5}) == 3);
    CHECK(sc.classify(Vec{1.5}) == 1);
    CHECK(sc.classify(Vec{-100}) == 1);
    CHECK(sc.classify(Vec{2.0}) == 2);
    CHECK(sc.classify(Vec{3.0}) == 3);
    CHECK(sc.classify(Vec{3.0000001}) == 4);
    CHECK(sc.classify(Vec{1000.5}) == 1001);
}

TEST_CASE("jet-engine feedback branches", "[setchain]") {
    const auto& fb = jet().feedback();
    auto u = fb.evaluate(Vec{1, 0});
    CHECK(u.cell == 1);
    CHECK(u.u[0] == -418.5);
    CHECK(fb.evaluate(Vec{10, 2}).u[0] == -1.0);
    CHECK(fb.evaluate(Vec{10, -3}).u[0] == 1.0);
    CHECK(fb.evaluate(Vec{10, 0}).u[0] == 0.0);
    CHECK(fb.period() == fb.certified_period());
    CHECK(fb.certified_period() == jet().h_tilde);
    const auto sim = jet().simulation_feedback(0.001);
    CHECK(sim.period() == 0.001);
    CHECK(sim.period_overridden());
}

TEST_CASE("period is min of h~ and r", "[setchain]") {
    const auto chain = SetChain::finite({Region::everything()}, {});
    const PiecewiseFeedback fb([](ConstSpan, MutSpan u) { u[0] = 0; }, chain, ControlSet::all(1), 2.0, 1.0);
    CHECK(fb.period() == 1.0);
    CHECK_THROWS(fb.with_period(-1.0));
}

TEST_CASE("scalar chain controls and inner law", "[setchain]") {
    const auto& s = scalar();
    CHECK(s.L == 2.0);
    CHECK(s.h_tilde == 1.0 / 3.0);
    CHECK(s.feedback().period() == 1.0 / 3.0);
    CHECK(s.chain_control(2) == -5.0);
    CHECK(s.chain_control(3) == -10.0);
    const auto& fb = s.feedback();
    CHECK(fb.evaluate(Vec{2}).u[0] == -5.0);
    CHECK(fb.evaluate(Vec{2.5}).u[0] == -10.0);
    CHECK(fb.evaluate(Vec{1}).u[0] == -3.0);
    CHECK(fb.evaluate(Vec{-1}).u[0] == 0.0);
    for (std::size_t j = 3; j < 40; ++j) {
        // a(s) = s^2 is increasing on [j-1, j]
        CHECK(s.chain_control(j) == -1.0 - static_cast<double>(j * j));
    }
}

TEST_CASE("other drifts give their own constants", "[setchain]") {
    const auto four = build_scalar("x_fourth", drift_by_name("x_fourth"));
    CHECK(four.L == 8.0);  // x^4 <= 8x on [0, 2]
    const auto abs = build_scalar("abs_x", drift_by_name("abs_x"));
    CHECK(abs.L == 1.0);
    CHECK_THROWS_AS(build_scalar("neg", [](double x) { return -x * x; }), NotPositiveDrift);
    CHECK_THROWS_AS(build_scalar("shift", [](double x) { return x * x + 1; }), NotPositiveDrift);
}

TEST_CASE("synthesis checks", "[setchain]") {
    const auto& j = jet();
    std::vector<Region> bad = j.omegas;
    bad[0] = Region::band(0, 1.0);
    CHECK_THROWS_AS(synthesize(j.inner, j.theta, j.h_tilde, bad, j.controls, 1.0, ControlSet::all(1)),
                    ChainHeadMismatch);
    CHECK_THROWS_AS(synthesize(j.inner, j.theta, j.h_tilde, j.omegas, {{0.0}, {1.0}, {-1.0}}, 1.0,
                               ControlSet::nonpositive(1)),
                    ControlOutOfSet);
    CHECK_THROWS_AS(synthesize(j.inner, j.theta, j.h_tilde, {}, {}, 1.0, ControlSet::all(1)), EmptyChain);

    const auto flipped = j.feedback().chain().with_control(4, Vec{1.0});
    CHECK(flipped->control(4) == Vec{1.0});
    CHECK(j.feedback().chain().control(4) == Vec{-1.0});
    CHECK(j.feedback().with_chain(flipped).evaluate(Vec{10, 2}).u[0] == 1.0);
}
