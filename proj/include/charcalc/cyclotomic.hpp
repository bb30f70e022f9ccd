#pragma once

// Exact arithmetic in cyclotomic fields Q(zeta_N), in the power basis
// 1, zeta, ..., zeta^{phi(N)-1} reduced modulo the N-th cyclotomic polynomial.
// All coefficients are exact rationals (GMP); no floating point anywhere.

#include <gmpxx.h>

#include <map>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace charcalc {

using Rat = mpq_class;
using Int = mpz_class;

inline long euler_phi(long n) {
    long result = n;
    long m = n;
    for (long p = 2; p * p <= m; ++p) {
        if (m % p == 0) {
            result -= result / p;
            while (m % p == 0) m /= p;
        }
    }
    if (m > 1) result -= result / m;
    return result;
}

namespace detail {

// Polynomials over Q, little-endian coefficient vectors.
using Poly = std::vector<Rat>;

inline void poly_trim(Poly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly c(a.size() + b.size() - 1, Rat(0));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    poly_trim(c);
    return c;
}

// Exact division, remainder must vanish (used to build cyclotomic polynomials).
inline Poly poly_divexact(Poly a, const Poly& b) {
    poly_trim(a);
    if (b.empty() || b.back() == 0) throw DomainError("poly_divexact: zero divisor");
    Poly q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Rat(0));
    while (a.size() >= b.size() && !a.empty()) {
        Rat coef = a.back() / b.back();
        size_t shift = a.size() - b.size();
        q[shift] = coef;
        for (size_t i = 0; i < b.size(); ++i) a[shift + i] -= coef * b[i];
        poly_trim(a);
    }
    if (!a.empty()) throw DomainError("poly_divexact: nonzero remainder");
    return q;
}

// Remainder of a modulo monic b.
inline Poly poly_mod(Poly a, const Poly& b) {
    poly_trim(a);
    while (a.size() >= b.size()) {
        Rat coef = a.back() / b.back();
        size_t shift = a.size() - b.size();
        for (size_t i = 0; i < b.size(); ++i) a[shift + i] -= coef * b[i];
        poly_trim(a);
    }
    return a;
}

// N-th cyclotomic polynomial Phi_N = (x^N - 1) / prod_{d | N, d < N} Phi_d, cached.
inline const Poly& cyclotomic_poly(long n) {
    static std::map<long, Poly> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Poly num(n + 1, Rat(0));
    num[0] = -1;
    num[n] = 1;
    for (long d = 1; d < n; ++d) {
        if (n % d == 0) num = poly_divexact(num, cyclotomic_poly(d));
    }
    return cache.emplace(n, std::move(num)).first->second;
}

} // namespace detail

class CycNumber {
  public:
    // Zero element of Q(zeta_N).
    explicit CycNumber(long conductor) : n_(conductor), c_(euler_phi(conductor), Rat(0)) {
        if (conductor < 1) throw DomainError("CycNumber: conductor must be positive");
    }

    static CycNumber from_rational(long conductor, const Rat& r) {
        CycNumber a(conductor);
        a.c_[0] = r;
        return a;
    }

    // zeta_m^k inside Q(zeta_N); requires m | N.
    static CycNumber root_of_unity(long conductor, long m, long k) {
        if (m < 1 || conductor % m != 0)
            throw ConductorMismatch("root_of_unity: order does not divide the conductor");
        long e = ((k % m) + m) % m * (conductor / m);
        CycNumber a(conductor);
        a.assign_monomial(e);
        return a;
    }

    long conductor() const { return n_; }
    const std::vector<Rat>& coeffs() const { return c_; }

    bool is_zero() const {
        for (const auto& x : c_)
            if (x != 0) return false;
        return true;
    }

    bool is_rational() const {
        for (size_t i = 1; i < c_.size(); ++i)
            if (c_[i] != 0) return false;
        return true;
    }

    // Value as a rational; only valid if is_rational().
    Rat rational_value() const {
        if (!is_rational()) throw DomainError("rational_value: element is irrational");
        return c_[0];
    }

    CycNumber operator-() const {
        CycNumber r = *this;
        for (auto& x : r.c_) x = -x;
        return r;
    }

    CycNumber& operator+=(const CycNumber& o) {
        check_same(o);
        for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    CycNumber& operator-=(const CycNumber& o) {
        check_same(o);
        for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    CycNumber operator+(const CycNumber& o) const {
        CycNumber r = *this;
        return r += o;
    }
    CycNumber operator-(const CycNumber& o) const {
        CycNumber r = *this;
        return r -= o;
    }

    CycNumber operator*(const CycNumber& o) const {
        check_same(o);
        detail::Poly prod = detail::poly_mul(as_poly(), o.as_poly());
        return from_poly(n_, std::move(prod));
    }
    CycNumber& operator*=(const CycNumber& o) { return *this = *this * o; }

    CycNumber operator*(const Rat& r) const {
        CycNumber out = *this;
        for (auto& x : out.c_) x *= r;
        return out;
    }

    bool operator==(const CycNumber& o) const {
        if (n_ == o.n_) return c_ == o.c_;
        long l = std::lcm(n_, o.n_);
        return promote(l).c_ == o.promote(l).c_;
    }
    bool operator!=(const CycNumber& o) const { return !(*this == o); }

    // Galois action zeta_N -> zeta_N^j, gcd(j, N) = 1.
    CycNumber galois(long j) const {
        j = ((j % n_) + n_) % n_;
        if (std::gcd(j, n_) != 1) throw DomainError("galois: exponent not coprime to conductor");
        detail::Poly img;
        CycNumber out(n_);
        for (size_t i = 0; i < c_.size(); ++i) {
            if (c_[i] == 0) continue;
            CycNumber mono(n_);
            mono.assign_monomial((long(i) * j) % n_);
            out += mono * c_[i];
        }
        return out;
    }

    // Complex conjugation zeta_N -> zeta_N^{N-1}.
    CycNumber conj() const { return n_ == 1 ? *this : galois(n_ - 1); }

    // Multiplicative inverse via the extended Euclidean algorithm mod Phi_N.
    CycNumber inverse() const {
        if (is_zero()) throw DomainError("inverse: division by zero");
        // Invariant: r0 = s0 * a mod Phi, r1 = s1 * a mod Phi.
        detail::Poly r0 = detail::cyclotomic_poly(n_), r1 = as_poly();
        detail::Poly s0 = {}, s1 = {Rat(1)};
        while (true) {
            detail::poly_trim(r1);
            if (r1.empty()) throw DomainError("inverse: element not invertible");
            if (r1.size() == 1) {
                CycNumber out(n_);
                for (size_t i = 0; i < s1.size() && i < out.c_.size(); ++i)
                    out.c_[i] = s1[i] / r1[0];
                return out;
            }
            // r0 = q*r1 + rem; replace (r0, s0) <- (r1, s1), (r1, s1) <- (rem, s0 - q*s1).
            detail::Poly q(r0.size() >= r1.size() ? r0.size() - r1.size() + 1 : 0, Rat(0));
            detail::Poly rem = r0;
            detail::poly_trim(rem);
            while (rem.size() >= r1.size() && !rem.empty()) {
                Rat coef = rem.back() / r1.back();
                size_t shift = rem.size() - r1.size();
                q[shift] = coef;
                for (size_t i = 0; i < r1.size(); ++i) rem[shift + i] -= coef * r1[i];
                detail::poly_trim(rem);
            }
            detail::Poly s2 = s0;
            detail::Poly qs = detail::poly_mul(q, s1);
            if (s2.size() < qs.size()) s2.resize(qs.size(), Rat(0));
            for (size_t i = 0; i < qs.size(); ++i) s2[i] -= qs[i];
            detail::poly_trim(s2);
            r0 = std::move(r1);
            r1 = std::move(rem);
            s0 = std::move(s1);
            s1 = detail::poly_mod(std::move(s2), detail::cyclotomic_poly(n_));
        }
    }

    CycNumber operator/(const CycNumber& o) const { return *this * o.inverse(); }

    // Re-express in Q(zeta_M) for N | M.
    CycNumber promote(long m) const {
        if (m == n_) return *this;
        if (m % n_ != 0) throw ConductorMismatch("promote: target conductor not a multiple");
        CycNumber out(m);
        long scale = m / n_;
        for (size_t i = 0; i < c_.size(); ++i) {
            if (c_[i] == 0) continue;
            CycNumber mono(m);
            mono.assign_monomial(long(i) * scale % m);
            out += mono * c_[i];
        }
        return out;
    }

  private:
    void check_same(const CycNumber& o) const {
        if (n_ != o.n_) throw ConductorMismatch("CycNumber: mixed conductors");
    }

    detail::Poly as_poly() const {
        detail::Poly p(c_.begin(), c_.end());
        detail::poly_trim(p);
        return p;
    }

    static CycNumber from_poly(long n, detail::Poly p) {
        p = detail::poly_mod(std::move(p), detail::cyclotomic_poly(n));
        CycNumber a(n);
        for (size_t i = 0; i < p.size(); ++i) a.c_[i] = p[i];
        return a;
    }

    // Set this to zeta_N^e (0 <= e < N) reduced to the power basis.
    void assign_monomial(long e) {
        detail::Poly p(e + 1, Rat(0));
        p[e] = 1;
        *this = from_poly(n_, std::move(p));
    }

    long n_;
    std::vector<Rat> c_;
};

inline CycNumber operator*(const Rat& r, const CycNumber& a) { return a * r; }

// cyc_embed per the library interface: zeta_m^k inside Q(zeta_N).
inline CycNumber cyc_embed(long conductor, long m, long k) {
    return CycNumber::root_of_unity(conductor, m, k);
}

inline bool cyc_equal(const CycNumber& a, const CycNumber& b) { return a == b; }

// Integer histogram over {zeta_N^k}: a fast exact accumulator for
// character sums whose summands are single roots of unity.
class ZetaSum {
  public:
    explicit ZetaSum(long conductor) : n_(conductor), counts_(conductor, Int(0)) {}

    void add(long exponent, const Int& count = 1) {
        counts_[((exponent % n_) + n_) % n_] += count;
    }

    CycNumber to_cyc() const {
        CycNumber out(n_);
        for (long k = 0; k < n_; ++k) {
            if (counts_[k] == 0) continue;
            CycNumber mono = CycNumber::root_of_unity(n_, n_, k);
            out += mono * Rat(counts_[k]);
        }
        return out;
    }

    long conductor() const { return n_; }

  private:
    long n_;
    std::vector<Int> counts_;
};

// A value scalar * q^{k/2} with the square root kept symbolic: q is a prime
// power, k an integer, scalar an exact cyclotomic number.
class QPowerSqrt {
  public:
    QPowerSqrt(long base, long half_exponent, CycNumber scalar)
        : base_(base), k_(half_exponent), scalar_(std::move(scalar)) {}

    static QPowerSqrt one(long base, long conductor) {
        return QPowerSqrt(base, 0, CycNumber::from_rational(conductor, 1));
    }

    long base() const { return base_; }
    long half_exponent() const { return k_; }
    const CycNumber& scalar() const { return scalar_; }

    QPowerSqrt operator*(const QPowerSqrt& o) const {
        if (base_ != o.base_ && !scalar_.is_zero() && !o.scalar_.is_zero() && k_ != 0 &&
            o.k_ != 0)
            throw DomainError("QPowerSqrt: mixed bases");
        long b = (k_ != 0) ? base_ : o.base_;
        return QPowerSqrt(b, k_ + o.k_, scalar_ * o.scalar_);
    }

    // Formal square: scalar^2 * q^k is an honest CycNumber when k is even,
    // otherwise scalar^2 * q^k with the integer part folded in.
    CycNumber square_times_qk() const {
        CycNumber s2 = scalar_ * scalar_;
        Rat qk(1);
        long k = k_;
        while (k > 0) {
            qk *= base_;
            --k;
        }
        while (k < 0) {
            qk /= base_;
            ++k;
        }
        return s2 * qk;
    }

    bool operator==(const QPowerSqrt& o) const {
        if (scalar_.is_zero() && o.scalar_.is_zero()) return true;
        // Fold even exponent halves into the scalar before comparing.
        long ka = k_, kb = o.k_;
        CycNumber sa = scalar_, sb = o.scalar_;
        auto fold = [](long& k, CycNumber& s, long base) {
            while (k >= 2) {
                s = s * Rat(base);
                k -= 2;
            }
            while (k <= -2) {
                s = s * Rat(Rat(1) / base);
                k += 2;
            }
        };
        fold(ka, sa, base_);
        fold(kb, sb, o.base_);
        if (ka != kb) return false;
        if (ka != 0 && base_ != o.base_) return false;
        return sa == sb;
    }
    bool operator!=(const QPowerSqrt& o) const { return !(*this == o); }

  private:
    long base_;
    long k_;
    CycNumber scalar_;
};

} // namespace charcalc
