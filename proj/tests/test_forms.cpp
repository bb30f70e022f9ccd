#include <catch2/catch_amalgamated.hpp>

#include "charcalc/forms.hpp"

using namespace charcalc;

namespace {

SesquiForm diag_form(const FqField& F, const std::vector<long>& entries) {
    long d = long(entries.size());
    FqMatrix g(&F, d, d);
    for (long i = 0; i < d; ++i) g.at(i, i) = F.from_prime(entries[i]);
    return SesquiForm(&F, g, 0, +1);
}

SesquiForm hyperbolic_plane(const FqField& F) {
    FqMatrix g(&F, 2, 2);
    g.at(0, 1) = F.one();
    g.at(1, 0) = F.one();
    return SesquiForm(&F, g, 0, +1);
}

SesquiForm symplectic_plane(const FqField& F) {
    FqMatrix g(&F, 2, 2);
    g.at(0, 1) = F.one();
    g.at(1, 0) = -F.one();
    return SesquiForm(&F, g, 0, -1);
}

} // namespace

TEST_CASE("hermitian condition validated") {
    const FqField& F3 = GF(3, 1);
    FqMatrix bad(&F3, 2, 2);
    bad.at(0, 1) = F3.one(); // asymmetric without the matching transpose entry
    CHECK_THROWS_AS(SesquiForm(&F3, bad, 0, +1), DomainError);
    CHECK_NOTHROW(symplectic_plane(F3));
}

TEST_CASE("determinant square class") {
    const FqField& F5 = GF(5, 1);
    CHECK(diag_form(F5, {1, 1, 1}).det_square_class() == +1);
    CHECK(diag_form(F5, {1, 2}).det_square_class() == -1);
    const FqField& F3 = GF(3, 1);
    CHECK(hyperbolic_plane(F3).det_square_class() == -1); // det = -1 = 2, nonsquare mod 3
    CHECK_THROWS_AS(diag_form(F5, {1, 0}).det_square_class(), DomainError);
}

TEST_CASE("witt decomposition of small forms") {
    const FqField& F3 = GF(3, 1);
    const FqField& F5 = GF(5, 1);

    auto h = witt_decompose(hyperbolic_plane(F3));
    CHECK(h.witt_index == 1);
    CHECK(witt_verify(hyperbolic_plane(F3), h));

    // x^2 + y^2 = 0 has only the origin mod 3.
    auto a = witt_decompose(diag_form(F3, {1, 1}));
    CHECK(a.witt_index == 0);
    CHECK(witt_verify(diag_form(F3, {1, 1}), a));

    auto b = witt_decompose(diag_form(F5, {1, 1, 1}));
    CHECK(b.witt_index == 1);
    CHECK(witt_verify(diag_form(F5, {1, 1, 1}), b));

    auto s = witt_decompose(symplectic_plane(F5));
    CHECK(s.witt_index == 1);
    CHECK(witt_verify(symplectic_plane(F5), s));
}

TEST_CASE("witt index closed form agrees with search") {
    for (long p : {3L, 5L}) {
        const FqField& F = GF(p, 1);
        // All diagonal symmetric forms up to dim 3 with unit entries.
        for (long d = 1; d <= 3; ++d) {
            std::vector<long> entries(d, 1);
            long total = 1;
            for (long i = 0; i < d; ++i) total *= (p - 1);
            for (long code = 0; code < total; ++code) {
                long rem = code;
                for (long i = 0; i < d; ++i) {
                    entries[i] = 1 + rem % (p - 1);
                    rem /= (p - 1);
                }
                SesquiForm B = diag_form(F, entries);
                auto wd = witt_decompose(B);
                CHECK(wd.witt_index == witt_index_formula(B));
                CHECK(witt_verify(B, wd));
            }
        }
    }
}

TEST_CASE("hermitian forms over GF(9)") {
    const FqField& F9 = GF(3, 2);
    // tau = Frobenius, eps = +1: diagonal Gram entries must be tau-fixed.
    FqMatrix g(&F9, 2, 2);
    g.at(0, 0) = F9.one();
    g.at(1, 1) = F9.from_prime(2);
    SesquiForm B(&F9, g, 1, +1);
    auto wd = witt_decompose(B);
    CHECK(witt_verify(B, wd));
    CHECK(wd.witt_index == witt_index_formula(B)); // Hermitian: floor(d/2) = 1
    CHECK(wd.witt_index == 1);
}

TEST_CASE("trace form determinant") {
    const FqField& F3 = GF(3, 1);
    CHECK(trace_form_det(2, false, F3) == -1);
    CHECK(trace_form_det(2, true, F3) == +1);
    CHECK(trace_form_det(1, false, F3) == +1);
    CHECK(trace_form_det(1, false, GF(7, 1)) == +1);
    CHECK_THROWS_AS(trace_form_det(3, true, F3), DomainError); // tau^2 != 1
}
