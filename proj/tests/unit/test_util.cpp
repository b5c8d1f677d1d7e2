#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "chainstab/errors.hpp"
#include "chainstab/json_util.hpp"
#include "chainstab/parallel.hpp"
#include "chainstab/random.hpp"

using namespace chainstab;
using json = nlohmann::json;

TEST_CASE("counter-based random numbers", "[util]") {
    // reference SplitMix64 sequence from seed 0 is e220a839..., 6e789e6a...,
    // 06c45d18..., f88bb8a8...; mix64 adds the increment itself, so Rng(0)
    // starts at the second term
    CHECK(mix64(0) == 0xe220a8397b1dcdafULL);
    Rng r(0);
    CHECK(r.next() == 0x6e789e6aa1b965f4ULL);
    CHECK(r.next() == 0x06c45d188009454fULL);
    CHECK(r.next() == 0xf88bb8a8724c81ecULL);
    CHECK(stream_seed(5, 1) == stream_seed(5, 1));
    CHECK(stream_seed(5, 1) != stream_seed(5, 2));
    CHECK(stream_seed(5, 1) != stream_seed(6, 1));

    Rng u(123);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = u.uniform();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
    CHECK(std::abs(sq / n - 1.0 / 3.0) < 0.01);

    Rng g(9);
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = g.normal();
        m += v;
        m2 += v * v;
    }
    CHECK(std::abs(m / n) < 0.02);
    CHECK(std::abs(m2 / n - 1.0) < 0.02);
}

TEST_CASE("json helpers", "[util]") {
    using namespace json_util;
    CHECK(number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::isinf(to_number(json("inf"), "x")));
    CHECK(to_number(json(2.5), "x") == 2.5);
    CHECK_THROWS_AS(to_number(json("two"), "x"), ConfigError);
    const Box b{{-1, -std::numeric_limits<double>::infinity()}, {1, 2}};
    const Box back = to_box(box(b), "b");
    CHECK(back.lo == b.lo);
    CHECK(back.hi == b.hi);
    CHECK_THROWS_AS(to_box(json{{"lo", {0}}, {"hi", {1, 2}}}, "b"), ConfigError);
    CHECK_THROWS_AS(require_keys(json{{"a", 1}, {"z", 2}}, {"a"}, "w"), ConfigError);
    CHECK_NOTHROW(require_keys(json{{"a", 1}}, {"a", "b"}, "w"));
}

TEST_CASE("parallel_for visits each index once", "[util]") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);

    std::atomic<int> count{0};
    try {
        parallel_for(100, 4, [&](std::size_t i) {
            ++count;
            if (i == 17 || i == 63) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "17");
    }
    CHECK(count == 100);
}
