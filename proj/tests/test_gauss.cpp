#include <catch2/catch_amalgamated.hpp>

#include "charcalc/gauss.hpp"

using namespace charcalc;

namespace {

SesquiForm diag_form(const FqField& F, const std::vector<long>& entries) {
    long d = long(entries.size());
    FqMatrix g(&F, d, d);
    for (long i = 0; i < d; ++i) g.at(i, i) = F.from_prime(entries[i]);
    return SesquiForm(&F, g, 0, +1);
}

} // namespace

TEST_CASE("prime gauss sums") {
    // sum over GF(3) of zeta_3^{t^2} = 1 + 2 zeta_3
    CycNumber s3 = CycNumber::from_rational(12, 1) + cyc_embed(12, 3, 1) * Rat(2);
    SesquiForm b3 = diag_form(GF(3, 1), {1});
    CHECK(gauss_bruteforce(b3, 12).value == s3);
    // sqrt(p)^2 = p
    for (long p : {3L, 5L, 7L, 13L}) {
        CycNumber r = sqrt_p_exact(p, 4 * p);
        CHECK(r * r == CycNumber::from_rational(4 * p, p));
    }
}

TEST_CASE("g_lambda values and square") {
    CHECK(g_lambda(GF(5, 1), 20).value == CycNumber::from_rational(20, 1));
    // GF(3): a primitive 4th root of unity
    CycNumber g3 = g_lambda(GF(3, 1), 12).value;
    CHECK(g3 * g3 == CycNumber::from_rational(12, -1));
    // G_Lambda^2 = sgn(-1) in general
    for (auto [p, n] : {std::pair<long, long>{3, 1}, {3, 2}, {5, 1}, {5, 2}, {7, 1}, {13, 1}}) {
        const FqField& F = GF(p, n);
        CycNumber g = g_lambda(F, 4 * p).value;
        int s = F.sgn(-F.one());
        CHECK(g * g == CycNumber::from_rational(4 * p, s));
    }
}

TEST_CASE("closed form equals brute force") {
    // Sample of diagonal forms across fields, dims 1..3.
    for (auto [p, n] : {std::pair<long, long>{3, 1}, {3, 2}, {5, 1}, {7, 1}, {13, 1}}) {
        const FqField& F = GF(p, n);
        CHECK(gauss_agree(diag_form(F, {1}), 4 * p));
        CHECK(gauss_agree(diag_form(F, {1, 2}), 4 * p));
        CHECK(gauss_agree(diag_form(F, {2, 1, 2}), 4 * p));
    }
    // Hyperbolic plane: value +1 (det class -1, G^2 = sgn(-1)).
    for (long p : {3L, 5L, 7L}) {
        const FqField& F = GF(p, 1);
        FqMatrix g(&F, 2, 2);
        g.at(0, 1) = F.one();
        g.at(1, 0) = F.one();
        SesquiForm hyp(&F, g, 0, +1);
        CHECK(gauss_closed(hyp, 4 * p).value == CycNumber::from_rational(4 * p, 1));
        CHECK(gauss_agree(hyp, 4 * p));
    }
}

TEST_CASE("multiplicative over orthogonal sums") {
    for (long p : {3L, 5L}) {
        const FqField& F = GF(p, 1);
        for (long a = 1; a < p; ++a)
            for (long b = 1; b < p; ++b) {
                CycNumber lhs = gauss_closed(diag_form(F, {a, b}), 4 * p).value;
                CycNumber rhs = gauss_closed(diag_form(F, {a}), 4 * p).value *
                                gauss_closed(diag_form(F, {b}), 4 * p).value;
                CHECK(lhs == rhs);
            }
    }
}

TEST_CASE("brute force handles degenerate and zero forms") {
    const FqField& F3 = GF(3, 1);
    // diag(1, 0): still a legal oracle input (sgn(0)=1 convention in spirit).
    FqMatrix g(&F3, 2, 2);
    g.at(0, 0) = F3.one();
    SesquiForm B(&F3, g, 0, +1);
    // sum = (sum_t zeta^{t^2}) * 3
    CycNumber expect = gauss_bruteforce(diag_form(F3, {1}), 12).value * Rat(3);
    CHECK(gauss_bruteforce(B, 12).value == expect);
    CHECK_THROWS_AS(gauss_closed(B, 12), DomainError);
}

TEST_CASE("closed-form errors") {
    const FqField& F9 = GF(3, 2);
    FqMatrix g(&F9, 1, 1);
    g.at(0, 0) = F9.one();
    SesquiForm herm(&F9, g, 1, +1);
    CHECK_THROWS_AS(gauss_closed(herm, 12), DomainError);
}
