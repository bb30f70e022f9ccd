#pragma once

// Quadratic Gauss sums over finite fields: the constant G_Lambda(f), the
// closed form sgn(det B) * G_Lambda^dim for a non-degenerate symmetric form,
// and an independent brute-force oracle summing Lambda(B(v,v)) over V.
//
// The closed-form constant depends on which square root of -1 underlies
// Lambda.  We fix sqrt(-1) := zeta_4 and calibrate empirically: the
// one-dimensional brute-force sum over the prime field decides whether the
// case formula needs zeta_4 or its conjugate.  The chosen orientation is
// recorded and reused for the whole computation.

#include <map>
#include <optional>

#include "cyclotomic.hpp"
#include "errors.hpp"
#include "ffield.hpp"
#include "forms.hpp"

namespace charcalc {

struct GaussValue {
    CycNumber value;                    // a 4th root of unity for closed forms
    std::optional<QPowerSqrt> magnitude; // card(V)^{1/2} bookkeeping
};

namespace detail {

// Raw one-dimensional sum over the prime field: sum_t zeta_p^{t^2}.
inline const CycNumber& prime_gauss_sum(long p, long conductor) {
    static std::map<std::pair<long, long>, CycNumber> cache;
    auto key = std::make_pair(p, conductor);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    ZetaSum s(conductor);
    long step = conductor / p;
    for (long t = 0; t < p; ++t) s.add((t * t % p) * step);
    return cache.emplace(key, s.to_cyc()).first->second;
}

} // namespace detail

// The positive square root of p inside Q(zeta_{4p}) (positive under the
// standard embedding zeta_N -> exp(2 pi i / N)): the classical evaluation of
// the prime Gauss sum gives sqrt(p) directly for p = 1 (mod 4) and i*sqrt(p)
// for p = 3 (mod 4).
inline CycNumber sqrt_p_exact(long p, long conductor) {
    if (conductor % (4 * p) != 0)
        throw ConductorMismatch("sqrt_p_exact: conductor must be divisible by 4p");
    CycNumber s = detail::prime_gauss_sum(p, conductor);
    if (p % 4 == 1) return s;
    return -cyc_embed(conductor, 4, 1) * s; // (-i) * (i sqrt p)
}

// Exact sqrt(p^k) in Q(zeta_conductor).
inline CycNumber sqrt_q_exact(long p, long k, long conductor) {
    CycNumber out = CycNumber::from_rational(conductor, 1);
    Rat integer_part(1);
    for (long i = 0; i < k / 2; ++i) integer_part *= p;
    out = out * integer_part;
    if (k % 2 != 0) out = out * sqrt_p_exact(p, conductor);
    return out;
}

// Empirical orientation: +1 if the prime-field constant equals +zeta_4,
// -1 if it equals the conjugate (only meaningful for p = 3 mod 4, where the
// constant is a primitive 4th root of unity).  Decided once per prime by the
// one-dimensional brute-force sum; recorded so the convention behind the
// closed forms is pinned empirically rather than guessed.
inline int glambda_orientation(long p) {
    static std::map<long, int> cache;
    auto it = cache.find(p);
    if (it != cache.end()) return it->second;
    int orient = +1;
    if (p % 4 == 3) {
        long conductor = 4 * p;
        // G_1 = S_p / sqrt(p) = S_p * sqrt(p) / p, exactly.
        CycNumber s = detail::prime_gauss_sum(p, conductor);
        CycNumber g1 = s * sqrt_p_exact(p, conductor) * Rat(1, p);
        if (g1 == cyc_embed(conductor, 4, 1))
            orient = +1;
        else if (g1 == cyc_embed(conductor, 4, 3))
            orient = -1;
        else
            throw DomainError("glambda_orientation: calibration failed");
    }
    return cache.emplace(p, orient).first->second;
}

// G_Lambda(f) for f = GF(p^n).  For the prime field this is the normalized
// quadratic sum: -(-1) = +1 when p = 1 (mod 4), the calibrated primitive 4th
// root of unity when p = 3 (mod 4).  Extension fields are reached through the
// multiplicative lift G(f) = -(-G(F_p))^n, which the brute-force oracle
// confirms degree by degree (for n = 1 it is the stated case formula).
inline GaussValue g_lambda(const FqField& F, long conductor) {
    long p = F.p(), n = F.degree();
    if (conductor % 4 != 0 || conductor % p != 0)
        throw ConductorMismatch("g_lambda: conductor must be divisible by 4 and p");
    CycNumber g1(conductor);
    if (p % 4 == 1) {
        g1 = CycNumber::from_rational(conductor, 1);
    } else {
        int orient = glambda_orientation(p);
        g1 = cyc_embed(conductor, 4, orient == 1 ? 1 : 3);
    }
    CycNumber acc = CycNumber::from_rational(conductor, 1);
    for (long i = 0; i < n; ++i) acc *= -g1;
    return GaussValue{-acc, std::nullopt};
}

// Closed form sgn(det B) * G_Lambda(f)^{dim V}, magnitude card(V)^{1/2}.
inline GaussValue gauss_closed(const SesquiForm& B, long conductor) {
    if (B.tau_k() != 0 || B.eps() != +1)
        throw DomainError("gauss_closed: form must be symmetric bilinear");
    if (!B.non_degenerate()) throw DomainError("gauss_closed: degenerate form");
    const FqField& F = B.field();
    CycNumber g = g_lambda(F, conductor).value;
    CycNumber value = CycNumber::from_rational(conductor, B.det_square_class());
    for (long i = 0; i < B.dim(); ++i) value *= g;
    return GaussValue{value, QPowerSqrt(F.order(), B.dim(),
                                        CycNumber::from_rational(conductor, 1))};
}

// Brute-force oracle: the raw sum over all of V of Lambda(B(v, v)), with the
// card(V)^{1/2} normalization carried symbolically.  Defined for any B.
inline GaussValue gauss_bruteforce(const SesquiForm& B, long conductor) {
    const FqField& F = B.field();
    long d = B.dim();
    double size = 1;
    for (long i = 0; i < d; ++i) size *= F.order();
    if (size > 2e6)
        throw DomainError("gauss_bruteforce: space too large; restrict to <= ~10^6 vectors");
    if (conductor % F.p() != 0)
        throw ConductorMismatch("gauss_bruteforce: conductor must be divisible by p");

    ZetaSum sum(conductor);
    long step = conductor / F.p();
    long total = 1;
    for (long i = 0; i < d; ++i) total *= F.order();
    FqVector v(d, F.zero());
    for (long code = 0; code < total; ++code) {
        long rem = code;
        for (long i = 0; i < d; ++i) {
            v[i] = F.from_code(rem % F.order());
            rem /= F.order();
        }
        sum.add(F.absolute_trace(B.quad(v)) * step);
    }
    return GaussValue{sum.to_cyc(), QPowerSqrt(F.order(), d,
                                               CycNumber::from_rational(conductor, 1))};
}

// Oracle equivalence: brute-force sum == closed form * sqrt(card V), exactly.
inline bool gauss_agree(const SesquiForm& B, long conductor) {
    GaussValue closed = gauss_closed(B, conductor);
    GaussValue brute = gauss_bruteforce(B, conductor);
    CycNumber magnitude = sqrt_q_exact(B.field().p(), B.field().degree() * B.dim(), conductor);
    return brute.value == closed.value * magnitude;
}

} // namespace charcalc
