#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "siphi/rng.hpp"

using namespace siphi;

TEST_SUITE("rng") {

TEST_CASE("same seed, same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("uniform stays in range and has the right mean") {
    Rng r(1);
    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform(5, 95);
        REQUIRE(u >= 5);
        REQUIRE(u < 95);
        sum += u;
    }
    CHECK(sum / 20000 == doctest::Approx(50).epsilon(0.02));
}

TEST_CASE("normal moments") {
    Rng r(2);
    double s = 0, s2 = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    CHECK(std::fabs(s / n) < 0.03);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("index covers [0, n) and shuffle permutes") {
    Rng r(3);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) ++hits[r.index(7)];
    for (int h : hits) CHECK(h > 800);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    r.shuffle(w);
    CHECK(w != v);
    std::sort(w.begin(), w.end());
    CHECK(w == v);
}

TEST_CASE("derived seeds differ by label and index") {
    CHECK(derive_seed(17, "a") != derive_seed(17, "b"));
    CHECK(derive_seed(17, "a") == derive_seed(17, "a"));
    CHECK(derive_seed(17, std::uint64_t{0}) != derive_seed(17, std::uint64_t{1}));
    CHECK(derive_seed(17, std::uint64_t{0}) != derive_seed(18, std::uint64_t{0}));
}

}
