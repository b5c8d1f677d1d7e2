#include <catch_amalgamated.hpp>

#include "chainstab/errors.hpp"
#include "chainstab/lyapunov.hpp"
#include "chainstab/random.hpp"
#include "chainstab/region.hpp"

using namespace chainstab;
using json = nlohmann::json;

TEST_CASE("primitive regions", "[region]") {
    const auto h = Region::half_space({0, 1}, -1.0);
    CHECK(h.contains(Vec{5, -1}));
    CHECK_FALSE(h.contains(Vec{5, -0.5}));
    const auto hs = Region::half_space({0, 1}, -1.0, true);
    CHECK_FALSE(hs.contains(Vec{5, -1}));
    CHECK(hs.contains(Vec{5, -1.5}));

    const auto b = Region::band(1, 1.0);
    CHECK(b.contains(Vec{100, 1}));
    CHECK(b.contains(Vec{100, -1}));
    CHECK_FALSE(b.contains(Vec{0, 1.0001}));

    const auto bx = Region::box(Box{{-1, -2}, {1, 2}});
    CHECK(bx.contains(Vec{1, 2}));
    CHECK_FALSE(bx.contains(Vec{1, 2.1}));

    CHECK(Region::everything().contains(Vec{1e300}));
    CHECK_FALSE(Region::nothing().contains(Vec{0}));
}

TEST_CASE("sublevel sets of the jet-engine function", "[region]") {
    const auto V = LyapunovRegistry::builtin().find("jet_engine_quadratic");
    REQUIRE(V);
    // V(10, 2) = 50 + 52^2 / 2
    CHECK((*V)(Vec{10, 2}) == 1402.0);
    const double R = 457.0 / 2.0 + 0.001;
    const auto theta = Region::sublevel(V, R, true);
    CHECK(theta.contains(Vec{0, 0}));
    CHECK_FALSE(theta.contains(Vec{10, 2}));
    // on the boundary: V = R exactly is outside the strict set
    const auto closed = Region::sublevel(V, 8.0);
    const auto open = Region::sublevel(V, 8.0, true);
    const Vec edge{4, -20};  // 8 + 0
    CHECK(closed.contains(edge));
    CHECK_FALSE(open.contains(edge));
}

TEST_CASE("gradients match finite differences", "[region]") {
    for (const auto& [name, v] : LyapunovRegistry::builtin().entries()) {
        INFO(name);
        CHECK(gradient_consistency(*v, 2, 5.0, 200, 7) <= 1.0);
    }
}

TEST_CASE("set algebra", "[region]") {
    const auto a = Region::band(0, 1.0);
    const auto b = Region::band(1, 1.0);
    const Vec in_both{0.5, 0.5}, in_a{0.5, 3}, in_none{3, 3};
    CHECK((a & b).contains(in_both));
    CHECK_FALSE((a & b).contains(in_a));
    CHECK((a | b).contains(in_a));
    CHECK_FALSE((a | b).contains(in_none));
    CHECK((~a).contains(in_none));
    CHECK(Region::difference(a, b).contains(in_a));
    CHECK_FALSE(Region::difference(a, b).contains(in_both));
}

TEST_CASE("descriptors round trip", "[region]") {
    const auto& reg = LyapunovRegistry::builtin();
    const auto V = reg.find("jet_engine_quadratic");
    const auto r = Region::intersection({Region::sublevel(V, 10.0, true), ~Region::band(1, 1.0),
                                         Region::union_of({Region::half_space({1, 0}, 2.0), Region::box(Box{{0, 0}, {1, 1}})})})
                       .with_bounds(Box{{-3, -3}, {3, 3}})
                       .with_label("test");
    const auto back = Region::from_json(r.to_json(), reg);
    CHECK(back.same_descriptor(r));
    CHECK(back.to_json() == r.to_json());
    REQUIRE(back.bounds().has_value());
    CHECK(back.bounds()->hi == Vec{3, 3});
    CHECK(back.label() == "test");

    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const Vec x{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        CHECK(back.contains(x) == r.contains(x));
    }
}

TEST_CASE("predicate comparison ignores bounds and labels", "[region]") {
    const auto a = Region::intersection({Region::band(0, 1.0).with_label("p"), Region::band(1, 2.0)});
    const auto b = Region::intersection({Region::band(0, 1.0), Region::band(1, 2.0)}).with_bounds(Box{{-1, -2}, {1, 2}});
    CHECK(a.same_predicate(b));
    CHECK_FALSE(a.same_descriptor(b));
    CHECK_FALSE(a.same_predicate(Region::intersection({Region::band(0, 1.0), Region::band(1, 3.0)})));
}

TEST_CASE("malformed descriptors are config errors", "[region]") {
    const auto& reg = LyapunovRegistry::builtin();
    CHECK_THROWS_AS(Region::from_json(json{{"type", "band"}, {"axis", 0}, {"half_width", 1}, {"colour", "red"}}, reg),
                    ConfigError);
    CHECK_THROWS_AS(Region::from_json(json{{"type", "ellipse"}}, reg), ConfigError);
    CHECK_THROWS_AS(Region::from_json(json{{"type", "sublevel"}, {"function", "nope"}, {"level", 1}}, reg), ConfigError);
    CHECK_THROWS_AS(Region::from_json(json{{"type", "half_space"}, {"a", "x"}, {"b", 1}}, reg), ConfigError);
}
