#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "charcalc/weil.hpp"

using namespace charcalc;

namespace {

std::vector<FqMatrix> sp2_elements(const FqField& F) {
    std::vector<FqMatrix> out;
    long q = F.order();
    for (long a = 0; a < q; ++a)
        for (long b = 0; b < q; ++b)
            for (long c = 0; c < q; ++c)
                for (long d = 0; d < q; ++d) {
                    FqMatrix g(&F, 2, 2);
                    g.at(0, 0) = F.from_code(a);
                    g.at(0, 1) = F.from_code(b);
                    g.at(1, 0) = F.from_code(c);
                    g.at(1, 1) = F.from_code(d);
                    if (g.det() == F.one()) out.push_back(g);
                }
    return out;
}

FqMatrix minus_one(const FqField& F, long d) {
    FqMatrix g(&F, d, d);
    for (long i = 0; i < d; ++i) g.at(i, i) = -F.one();
    return g;
}

} // namespace

TEST_CASE("model basics") {
    const FqField& F3 = GF(3, 1);
    auto sp = SymplecticSpace::standard(F3, 1);
    WeilModel model = weil_build(sp, 12);
    CHECK(model.model_dim() == 3);

    // W(identity) is the identity matrix.
    CycMatrix id = model.dense(FqMatrix::identity(&F3, 2));
    CHECK(id == CycMatrix::identity(3, 12));
    CHECK(weil_char_bruteforce(model, FqMatrix::identity(&F3, 2)) ==
          CycNumber::from_rational(12, 3));

    // w^2 realizes m(-1): scalar-free relation of the genuine model.
    FqMatrix w = SymplecticSpace::standard_J(F3, 1);
    CycMatrix Ww = model.dense(w);
    CHECK(Ww * Ww == model.dense(minus_one(F3, 2)));
    // w^4 = identity in the group and in the model.
    CHECK(Ww * Ww * Ww * Ww == CycMatrix::identity(3, 12));
}

TEST_CASE("multiplicativity on random products") {
    std::mt19937_64 rng(20240817);
    for (auto [p, n] : {std::pair<long, long>{3, 1}, {5, 1}, {3, 2}}) {
        const FqField& F = GF(p, 1);
        auto sp = SymplecticSpace::standard(F, n);
        WeilModel model = weil_build(sp, 4 * p);
        for (int probe = 0; probe < 8; ++probe) {
            FqMatrix g = random_symplectic(F, n, rng);
            FqMatrix h = random_symplectic(F, n, rng);
            CHECK(model.dense(g) * model.dense(h) == model.dense(g * h));
        }
    }
}

TEST_CASE("kernel-sum trace matches dense trace") {
    std::mt19937_64 rng(7);
    for (auto [p, n] : {std::pair<long, long>{3, 1}, {5, 1}, {3, 2}}) {
        const FqField& F = GF(p, 1);
        auto sp = SymplecticSpace::standard(F, n);
        WeilModel model = weil_build(sp, 4 * p);
        for (int probe = 0; probe < 6; ++probe) {
            FqMatrix g = random_symplectic(F, n, rng);
            CHECK(model.trace_standard(g) == model.dense(g).trace());
        }
    }
}

TEST_CASE("closed form matches model on all semisimple elements of Sp(2,q)") {
    for (long q : {3L, 5L}) {
        const FqField& F = GF(q, 1);
        auto sp = SymplecticSpace::standard(F, 1);
        WeilModel model = weil_build(sp, 4 * q);
        long checked = 0;
        for (const auto& g : sp2_elements(F)) {
            if (!is_semisimple(g)) continue;
            CHECK(weil_char_formula(sp, g, 4 * q) == weil_char_bruteforce(model, g));
            ++checked;
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("minus one in Sp(2,5)") {
    const FqField& F5 = GF(5, 1);
    auto sp = SymplecticSpace::standard(F5, 1);
    WeilModel model = weil_build(sp, 20);
    CycNumber t = weil_char_bruteforce(model, minus_one(F5, 2));
    CHECK(t * t == CycNumber::from_rational(20, 1)); // square is sgn_5(-1) = +1
    CHECK(t == weil_char_formula(sp, minus_one(F5, 2), 20));
    CHECK(t == CycNumber::from_rational(20, F5.sgn(-F5.one())));
}

TEST_CASE("non-semisimple input rejected by the closed form") {
    const FqField& F3 = GF(3, 1);
    auto sp = SymplecticSpace::standard(F3, 1);
    FqMatrix u(&F3, 2, 2);
    u.at(0, 0) = F3.one();
    u.at(0, 1) = F3.one();
    u.at(1, 1) = F3.one();
    CHECK_THROWS_AS(weil_char_formula(sp, u, 12), DomainError);
}

TEST_CASE("epsilon sign basics") {
    const FqField& F5 = GF(5, 1);
    XiData empty{&F5, {}, 0};
    CHECK(epsilon_sign(empty) == +1);
    CHECK(epsilon_cardinality(empty, 20).half_exponent() == 0);

    // Single symmetric orbit over GF(25) with an order-6 eigenvalue:
    // epsilon = sgn_5(-1)^1 * sgn_25(1 - lambda).
    const FqField& F25 = GF(5, 2);
    FqElement lam = F25.generator().pow(Int((25 - 1) / 6));
    REQUIRE(lam.pow(Int(6)) == F25.one());
    REQUIRE(lam.pow(Int(3)) != F25.one());
    XiData one_orbit{&F5, {{XiClass::SymmOther, &F25, 2, lam}}, 0};
    int expect = F5.sgn(-F5.one()) * F25.sgn(F25.one() - lam);
    CHECK(epsilon_sign(one_orbit) == expect);
    CHECK(epsilon_sign(one_orbit) * epsilon_sign(one_orbit) == 1);

    // Single asymmetric pair with a nonsquare eigenvalue.
    const FqField& F3 = GF(3, 1);
    XiData pair{&F3, {{XiClass::NonSymm, &F3, 1, F3.from_prime(2)}}, 0};
    CHECK(epsilon_sign(pair) == F3.sgn(F3.from_prime(2)));
    CHECK(epsilon_sign(pair) == -1);

    // Malformed records are rejected.
    XiData bad{&F3, {{XiClass::SymmOther, &F3, 1, F3.from_prime(2)}}, 0};
    CHECK_THROWS_AS(epsilon_sign(bad), DomainError);
}

TEST_CASE("epsilon against the model trace") {
    // Realize XiData as a concrete symplectic gamma-module and compare
    // epsilon * p^{fixed/2} with the model trace of the realized element.
    auto check_instance = [](const XiData& xi) {
        const FqField& Fp = GF(xi.base->p(), 1);
        long cond = 4 * Fp.p();
        auto real = xi_realize(xi);
        auto sp = SymplecticSpace::from_gram(Fp, real.gram);
        WeilModel model = weil_build(sp, cond);
        CycNumber expect = CycNumber::from_rational(cond, epsilon_sign(xi));
        for (long i = 0; i < xi.fixed_dim / 2; ++i) expect = expect * Rat(Fp.p());
        CHECK(weil_char_bruteforce(model, real.g) == expect);
    };

    const FqField& F3 = GF(3, 1);
    const FqField& F9 = GF(3, 2);
    const FqField& F5 = GF(5, 1);
    const FqField& F25 = GF(5, 2);

    // Symmetric orbit with eigenvalue -1 over GF(9).
    check_instance(XiData{&F3, {{XiClass::SymmMinus1, &F9, 2, -F9.one()}}, 0});
    // Asymmetric pair over the prime field.
    check_instance(XiData{&F3, {{XiClass::NonSymm, &F3, 1, F3.from_prime(2)}}, 0});
    // Symmetric orbit over GF(25), eigenvalue of order 6 (norm 1 over GF(5)).
    FqElement lam = F25.generator().pow(Int((25 - 1) / 6));
    REQUIRE(lam * lam.frobenius(1) == F25.one());
    check_instance(XiData{&F5, {{XiClass::SymmOther, &F25, 2, lam}}, 0});
    // Mixed instance with a fixed block.
    check_instance(XiData{
        &F3,
        {{XiClass::SymmMinus1, &F9, 2, -F9.one()}, {XiClass::NonSymm, &F3, 1, F3.from_prime(2)}},
        2});
}
