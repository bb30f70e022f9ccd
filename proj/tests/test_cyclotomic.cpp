#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "charcalc/cyclotomic.hpp"

using namespace charcalc;

namespace {

CycNumber random_cyc(long conductor, std::mt19937& rng) {
    std::uniform_int_distribution<int> num(-5, 5);
    std::uniform_int_distribution<int> den(1, 4);
    CycNumber a(conductor);
    CycNumber out(conductor);
    long phi = euler_phi(conductor);
    for (long i = 0; i < phi; ++i) {
        CycNumber mono = CycNumber::root_of_unity(conductor, conductor, i);
        Rat r(num(rng), den(rng));
        r.canonicalize();
        out += mono * r;
    }
    return out;
}

} // namespace

TEST_CASE("euler phi") {
    CHECK(euler_phi(1) == 1);
    CHECK(euler_phi(4) == 2);
    CHECK(euler_phi(12) == 4);
    CHECK(euler_phi(100) == 40);
}

TEST_CASE("roots of unity embed") {
    CHECK(cyc_embed(12, 1, 0) == CycNumber::from_rational(12, 1));
    CHECK(cyc_embed(4, 4, 2) == CycNumber::from_rational(4, -1));
    // zeta_3 + zeta_3^2 = -1 (minimal polynomial x^2 + x + 1).
    CHECK(cyc_embed(3, 3, 1) + cyc_embed(3, 3, 2) == CycNumber::from_rational(3, -1));
    CHECK_THROWS_AS(cyc_embed(4, 3, 1), ConductorMismatch);
}

TEST_CASE("zeta_N^N is one") {
    for (long n : {3L, 4L, 8L, 12L, 20L}) {
        CycNumber z = CycNumber::root_of_unity(n, n, 1);
        CycNumber pow = CycNumber::from_rational(n, 1);
        for (long i = 0; i < n; ++i) pow *= z;
        CHECK(pow == CycNumber::from_rational(n, 1));
    }
}

TEST_CASE("quadratic subfield of Q(zeta_8)") {
    // (zeta_8 + zeta_8^-1)^2 = 2.
    CycNumber s = cyc_embed(8, 8, 1) + cyc_embed(8, 8, 7);
    CHECK(s * s == CycNumber::from_rational(8, 2));
}

TEST_CASE("distinct basis elements differ") {
    CHECK(cyc_embed(3, 3, 1) != cyc_embed(3, 3, 2));
}

TEST_CASE("ring axioms on random samples") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        long n = std::vector<long>{3, 4, 5, 8, 12}[trial % 5];
        CycNumber a = random_cyc(n, rng), b = random_cyc(n, rng), c = random_cyc(n, rng);
        CHECK((a + b) + c == a + (b + c));
        CHECK(a * b == b * a);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
    }
}

TEST_CASE("conjugation is an involution and inverts roots of unity") {
    std::mt19937 rng(99);
    for (long n : {3L, 4L, 8L, 12L}) {
        CycNumber a = random_cyc(n, rng);
        CHECK(a.conj().conj() == a);
        for (long k = 0; k < n; ++k) {
            CycNumber u = CycNumber::root_of_unity(n, n, k);
            CHECK(u * u.conj() == CycNumber::from_rational(n, 1));
        }
    }
}

TEST_CASE("inverse") {
    std::mt19937 rng(7);
    for (long n : {3L, 4L, 8L, 12L}) {
        for (int trial = 0; trial < 5; ++trial) {
            CycNumber a = random_cyc(n, rng);
            if (a.is_zero()) continue;
            CHECK(a * a.inverse() == CycNumber::from_rational(n, 1));
        }
    }
    CHECK_THROWS_AS(CycNumber(4).inverse(), DomainError);
}

TEST_CASE("promotion to larger conductor preserves equality") {
    CycNumber z3 = cyc_embed(3, 3, 1);
    CycNumber z3in12 = cyc_embed(12, 3, 1);
    CHECK(z3.promote(12) == z3in12);
    CHECK(z3 == z3in12); // mixed-conductor equality via lcm
    CHECK(z3.promote(12) * z3in12 * z3in12 == CycNumber::from_rational(12, 1));
}

TEST_CASE("zeta sum accumulator") {
    ZetaSum s(5);
    for (long t = 0; t < 5; ++t) s.add(t);
    CHECK(s.to_cyc() == CycNumber(5)); // full sum of 5th roots vanishes
    ZetaSum s2(5);
    s2.add(0, 3);
    s2.add(7); // wraps to 2
    CHECK(s2.to_cyc() == CycNumber::from_rational(5, 3) + cyc_embed(5, 5, 2));
}

TEST_CASE("symbolic q-power square roots") {
    CycNumber one = CycNumber::from_rational(4, 1);
    QPowerSqrt a(5, 3, one);            // 5^{3/2}
    QPowerSqrt b(5, 1, one * Rat(2));   // 2 * 5^{1/2}
    QPowerSqrt p = a * b;               // 2 * 5^2
    CHECK(p.half_exponent() == 4);
    CHECK(p.square_times_qk() == CycNumber::from_rational(4, 2500));
    // (scalar * q^{k/2})^2 == scalar^2 * q^k
    CHECK(a.square_times_qk() == CycNumber::from_rational(4, 125));
    // Even halves fold into the scalar for equality testing.
    CHECK(QPowerSqrt(5, 2, one) == QPowerSqrt(5, 0, one * Rat(5)));
    CHECK(QPowerSqrt(5, 1, one) != QPowerSqrt(5, 0, one));
}
