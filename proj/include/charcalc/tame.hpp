#pragma once

// Finite-precision arithmetic in tamely ramified extensions of Q_p, matrices
// over such extensions, filtration depths at standard apartment points, the
// mock exponential, normal approximations of tame semisimple elements, and
// orders of the filtration groups attached to an approximation.
//
// A tower E has residue degree f and ramification e with gcd(e, p) = 1; it is
// the unramified extension of degree f with a uniformizer varpi adjoined,
// varpi^e = p.  An element is varpi^shift * sum_{j<e} u_j varpi^j with each
// u_j in W = Z[y]/(m(y), p^K), where m is a monic lift of the defining
// polynomial of the residue field GF(p^f).  The absolute precision (in varpi
// units: the element is pinned modulo varpi^prec) is tracked per element, and
// every predicate is a congruence at that precision.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cyclotomic.hpp"
#include "errors.hpp"
#include "ffield.hpp"

namespace charcalc {

// ---------------------------------------------------------------------------
// Small rational helpers (depths live in (1/e)Z).

inline Rat make_rat(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

inline long rat_ceil(const Rat& r) {
    Int q;
    mpz_cdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q.get_si();
}

inline long rat_floor(const Rat& r) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q.get_si();
}

// A filtration depth r or r+ ("just above r").  Total order: r < r+ < s for
// r < s; a value v (never itself "plus") satisfies v >= r+ iff v > r.
struct DepthVal {
    Rat r;
    bool plus = false;

    DepthVal() : r(0), plus(false) {}
    DepthVal(Rat v, bool pl = false) : r(std::move(v)), plus(pl) {}
    static DepthVal just_above(Rat v) { return DepthVal(std::move(v), true); }

    bool operator==(const DepthVal& o) const { return r == o.r && plus == o.plus; }
    bool operator<(const DepthVal& o) const { return r < o.r || (r == o.r && !plus && o.plus); }
    bool operator<=(const DepthVal& o) const { return *this < o || *this == o; }

    DepthVal operator+(const Rat& s) const { return DepthVal(r + s, plus); }
    DepthVal operator-(const Rat& s) const { return DepthVal(r - s, plus); }
    DepthVal half() const { return DepthVal(r / 2, plus); }
};

// Does a plain rational value v meet the floor d (v >= d, with strictness
// when d carries a plus)?
inline bool meets_floor(const Rat& v, const DepthVal& d) {
    return d.plus ? v > d.r : v >= d.r;
}

// ---------------------------------------------------------------------------
// TameTower: registry of towers, plus W-arithmetic helpers.

class TameTower {
  public:
    TameTower(long p, long f, long e) : p_(p), f_(f), e_(e), residue_(&GF(p, f)) {
        if (e < 1) throw DomainError("TameTower: ramification index must be positive");
        if (e % p == 0) throw DomainError("TameTower: ramification must be prime to p (tame)");
        mpoly_ = residue_->defining_poly(); // x^f = -(mpoly_[0] + ... + mpoly_[f-1] x^{f-1})
    }

    long p() const { return p_; }
    long f() const { return f_; }
    long e() const { return e_; }
    const FqField& residue_field() const { return *residue_; }

    // ---- W = Z[y]/(m(y), p^K) arithmetic on little-endian coefficient
    // vectors of length f.  pk = p^K.
    using WElem = std::vector<Int>;

    WElem wzero() const { return WElem(f_, Int(0)); }

    void wreduce(WElem& a, const Int& pk) const {
        for (Int& c : a) {
            c %= pk;
            if (c < 0) c += pk;
        }
    }

    WElem wadd(const WElem& a, const WElem& b, const Int& pk) const {
        WElem c(f_);
        for (long i = 0; i < f_; ++i) c[i] = (a[i] + b[i]) % pk;
        return c;
    }

    WElem wsub(const WElem& a, const WElem& b, const Int& pk) const {
        WElem c(f_);
        for (long i = 0; i < f_; ++i) {
            c[i] = (a[i] - b[i]) % pk;
            if (c[i] < 0) c[i] += pk;
        }
        return c;
    }

    WElem wmul(const WElem& a, const WElem& b, const Int& pk) const {
        std::vector<Int> c(2 * f_ - 1, Int(0));
        for (long i = 0; i < f_; ++i) {
            if (a[i] == 0) continue;
            for (long j = 0; j < f_; ++j) c[i + j] += a[i] * b[j];
        }
        for (long d = 2 * f_ - 2; d >= f_; --d) {
            if (c[d] == 0) continue;
            for (long i = 0; i < f_; ++i) c[d - f_ + i] -= c[d] * mpoly_[i];
            c[d] = 0;
        }
        c.resize(f_);
        wreduce(c, pk);
        return c;
    }

    WElem wpow(WElem base, Int exp, const Int& pk) const {
        WElem acc = wzero();
        acc[0] = 1;
        while (exp > 0) {
            if (mpz_odd_p(exp.get_mpz_t())) acc = wmul(acc, base, pk);
            base = wmul(base, base, pk);
            exp >>= 1;
        }
        return acc;
    }

    // p-adic valuation of a W element, capped at K (returns K for zero mod p^K).
    long wval(const WElem& a, long K) const {
        long best = K;
        for (const Int& c : a) {
            if (c == 0) continue;
            long v = 0;
            Int t = c;
            while (v < best && mpz_divisible_ui_p(t.get_mpz_t(), (unsigned long)p_)) {
                t /= p_;
                ++v;
            }
            if (t != 0 && v < best) best = v;
        }
        return best;
    }

    // Residue of a W element in GF(p^f).
    FqElement wresidue(const WElem& a) const {
        std::vector<long> c(f_);
        for (long i = 0; i < f_; ++i) {
            Int r = a[i] % p_;
            if (r < 0) r += p_;
            c[i] = r.get_si();
        }
        return FqElement(residue_, c);
    }

    // Lift of a residue-field element into W (digits in [0, p)).
    WElem wlift(const FqElement& c) const {
        if (&c.field() != residue_) throw DomainError("TameTower: residue field mismatch");
        WElem a(f_);
        for (long i = 0; i < f_; ++i) a[i] = c.coeffs()[i];
        return a;
    }

    Int ppow(long K) const {
        Int r;
        mpz_ui_pow_ui(r.get_mpz_t(), (unsigned long)p_, (unsigned long)std::max(0L, K));
        return r;
    }

  private:
    long p_, f_, e_;
    const FqField* residue_;
    std::vector<long> mpoly_;
};

inline const TameTower& tame_tower(long p, long f, long e) {
    static std::map<std::tuple<long, long, long>, TameTower> registry;
    auto key = std::make_tuple(p, f, e);
    auto it = registry.find(key);
    if (it == registry.end()) it = registry.emplace(key, TameTower(p, f, e)).first;
    return it->second;
}

// ---------------------------------------------------------------------------
// TameElement.

class TameElement {
  public:
    TameElement() : tw_(nullptr), shift_(0), prec_(0) {}

    static TameElement zero(const TameTower& tw, long prec) {
        TameElement x;
        x.tw_ = &tw;
        x.shift_ = 0;
        x.prec_ = prec;
        x.comp_.assign(tw.e(), tw.wzero());
        return x;
    }

    static TameElement from_integer(const TameTower& tw, const Int& a, long prec) {
        TameElement x = zero(tw, prec);
        x.comp_[0][0] = a;
        x.reduce();
        return x;
    }

    static TameElement one(const TameTower& tw, long prec) {
        return from_integer(tw, Int(1), prec);
    }

    // a/b with b prime to p.
    static TameElement from_rational(const TameTower& tw, const Rat& a, long prec) {
        Int num = a.get_num(), den = a.get_den();
        long sh = 0;
        while (mpz_divisible_ui_p(num.get_mpz_t(), (unsigned long)tw.p()) && num != 0) {
            num /= tw.p();
            sh += tw.e();
        }
        while (mpz_divisible_ui_p(den.get_mpz_t(), (unsigned long)tw.p())) {
            den /= tw.p();
            sh -= tw.e();
        }
        long prec_u = std::max(1L, prec - sh);
        TameElement n = from_integer(tw, num, prec_u);
        TameElement d = from_integer(tw, den, prec_u);
        TameElement r = n * d.inverse();
        r.shift_ += sh;
        r.prec_ += sh;
        r.reduce();
        return r;
    }

    // varpi^k (k may be negative).
    static TameElement varpi_pow(const TameTower& tw, long k, long prec) {
        TameElement x = zero(tw, prec + k);
        long j = ((k % tw.e()) + tw.e()) % tw.e();
        long q = (k - j) / tw.e();
        x.comp_[j][0] = 1;
        x.shift_ = q * tw.e();
        x.reduce();
        return x;
    }

    // Teichmuller representative of a residue-field element.
    static TameElement teichmuller(const TameTower& tw, const FqElement& c, long prec) {
        TameElement x = zero(tw, prec);
        if (c.is_zero()) return x;
        long K = x.kcap();
        Int pk = tw.ppow(K);
        TameTower::WElem z = tw.wlift(c);
        Int pf(1);
        for (long i = 0; i < tw.f(); ++i) pf *= tw.p();
        for (long it = 0; it <= K + 1; ++it) z = tw.wpow(z, pf, pk);
        x.comp_[0] = z;
        return x;
    }

    // Element from a Teichmuller digit expansion: sum over (k -> c_k) of
    // teichmuller(c_k) * varpi^k.
    static TameElement from_digits(const TameTower& tw, const std::map<long, FqElement>& digits,
                                   long prec) {
        TameElement acc = zero(tw, prec);
        for (const auto& [k, c] : digits) {
            if (c.is_zero()) continue;
            long pad = prec + std::abs(k);
            acc = acc + teichmuller(tw, c, pad) * varpi_pow(tw, k, pad);
        }
        return acc;
    }

    const TameTower& tower() const { return *tw_; }
    long prec() const { return prec_; }
    Rat prec_ord() const { return make_rat(prec_, tw_->e()); }

    bool is_zero() const { return val_internal() >= prec_ - shift_; }

    // Valuation in units of ord(varpi) = 1/e; nullopt when zero at precision.
    std::optional<long> ord_num() const {
        long v = val_internal();
        if (shift_ + v >= prec_) return std::nullopt;
        return shift_ + v;
    }
    std::optional<Rat> ord() const {
        auto v = ord_num();
        if (!v) return std::nullopt;
        return make_rat(*v, tw_->e());
    }

    TameElement operator-() const {
        TameElement r = *this;
        long K = r.kcap();
        Int pk = tw_->ppow(K);
        for (auto& u : r.comp_) {
            for (Int& c : u) {
                c = -c % pk;
                if (c < 0) c += pk;
            }
        }
        return r;
    }

    TameElement operator+(const TameElement& o) const {
        check_same(o);
        long prec = std::min(prec_, o.prec_);
        long sh = std::min(shift_, o.shift_);
        TameElement a = realigned(sh, prec), b = o.realigned(sh, prec);
        Int pk = tw_->ppow(a.kcap());
        for (long j = 0; j < tw_->e(); ++j) a.comp_[j] = tw_->wadd(a.comp_[j], b.comp_[j], pk);
        return a;
    }

    TameElement operator-(const TameElement& o) const { return *this + (-o); }

    TameElement operator*(const TameElement& o) const {
        check_same(o);
        long e = tw_->e();
        TameElement r;
        r.tw_ = tw_;
        r.shift_ = shift_ + o.shift_;
        // Absolute precision of the product is governed by the actual
        // valuations, not the representation shifts (which may sit below the
        // valuation after rescaling and would leak precision per multiply).
        long va = shift_ + val_internal();
        long vb = o.shift_ + o.val_internal();
        r.prec_ = std::min(va + o.prec_, vb + prec_);
        r.comp_.assign(e, tw_->wzero());
        Int pk = tw_->ppow(r.kcap());
        for (long j = 0; j < e; ++j) {
            bool jz = true;
            for (const Int& c : comp_[j])
                if (c != 0) jz = false;
            if (jz) continue;
            for (long k = 0; k < e; ++k) {
                TameTower::WElem prod = tw_->wmul(comp_[j], o.comp_[k], pk);
                long idx = j + k;
                if (idx >= e) {
                    // varpi^e = p
                    for (Int& c : prod) c = c * tw_->p() % pk;
                    idx -= e;
                }
                r.comp_[idx] = tw_->wadd(r.comp_[idx], prod, pk);
            }
        }
        r.reduce();
        return r;
    }

    TameElement operator*(const Int& a) const {
        return *this * from_integer(*tw_, a, prec_ - shift_);
    }

    // Newton inversion; zero at precision raises IndeterminateAtPrecision.
    TameElement inverse() const {
        TameElement x = normalized();
        if (x.is_zero()) throw IndeterminateAtPrecision("TameElement: inverse of zero at precision");
        long s = x.shift_;
        x.shift_ = 0;
        x.prec_ -= s; // unit with relative precision prec_-s
        if (x.prec_ <= 0) throw IndeterminateAtPrecision("TameElement: no precision left to invert");
        FqElement r0 = tw_->wresidue(x.comp_[0]);
        TameElement w = zero(*tw_, x.prec_);
        w.comp_[0] = tw_->wlift(r0.inverse());
        TameElement two = from_integer(*tw_, Int(2), x.prec_);
        long iters = 2;
        for (long t = 1; t < x.prec_; t *= 2) ++iters;
        for (long i = 0; i < iters; ++i) w = w * (two - x * w);
        w.shift_ -= s;
        w.prec_ -= s;
        w.reduce();
        return w;
    }

    TameElement operator/(const TameElement& o) const { return *this * o.inverse(); }

    // Equality as congruence at the coarser of the two precisions.
    bool operator==(const TameElement& o) const { return (*this - o).is_zero(); }
    bool operator!=(const TameElement& o) const { return !(*this == o); }

    // Residue in GF(p^f) of x * varpi^{-ord(x)}; zero for the zero class.
    FqElement residue_unit() const {
        if (is_zero()) return tw_->residue_field().zero();
        TameElement x = normalized();
        return tw_->wresidue(x.comp_[0]);
    }

    // Residue of an integral element (ord >= 0) in GF(p^f); positive-ord
    // elements reduce to zero.
    FqElement residue() const {
        auto v = ord_num();
        if (v && *v < 0) throw DomainError("TameElement: residue of a non-integral element");
        if (!v || *v > 0) return tw_->residue_field().zero();
        return residue_unit();
    }

    // Leading Teichmuller digits: x = sum digits[k] * varpi^k + O(varpi^upto).
    std::map<long, FqElement> teich_digits(long upto) const {
        std::map<long, FqElement> out;
        TameElement y = *this;
        long cap = std::min(upto, prec_);
        long guard = tw_->e() * (cap + 8 - std::min(shift_, 0L)) + 16;
        while (guard-- > 0) {
            auto v = y.ord_num();
            if (!v || *v >= cap) break;
            FqElement c = y.residue_unit();
            out[*v] = c;
            y = y - teichmuller(*tw_, c, y.prec_ - std::min(0L, *v)) *
                        varpi_pow(*tw_, *v, y.prec_);
        }
        return out;
    }

    // Canonical sort/compare key from the digit expansion below the precision.
    std::string digit_key() const {
        std::string s;
        for (const auto& [k, c] : teich_digits(prec_)) {
            s += std::to_string(k);
            s += ':';
            s += std::to_string(c.code());
            s += ';';
        }
        return s;
    }

    TameElement reduced_to(long prec) const {
        TameElement r = *this;
        r.clamp_prec(prec);
        r.reduce();
        return r;
    }

    TameElement normalized() const {
        TameElement r = *this;
        long v = r.val_internal();
        if (v >= r.prec_ - r.shift_) return r; // zero class: leave as-is
        for (long step = 0; step < v; ++step) {
            // divide by varpi once: u_j <- u_{j+1}, last gets u_0 / p.
            TameTower::WElem first = r.comp_[0];
            for (long j = 0; j + 1 < tw_->e(); ++j) r.comp_[j] = r.comp_[j + 1];
            for (Int& c : first) {
                if (!mpz_divisible_ui_p(c.get_mpz_t(), (unsigned long)tw_->p()))
                    throw DomainError("TameElement: internal normalization failure");
                c /= tw_->p();
            }
            r.comp_[tw_->e() - 1] = first;
            r.shift_ += 1;
        }
        r.reduce();
        return r;
    }

  private:
    const TameTower* tw_;
    long shift_; // varpi-power factored out (may be negative)
    long prec_;  // absolute precision: the element is pinned mod varpi^prec
    std::vector<TameTower::WElem> comp_;

    long kcap() const { return std::max(0L, (prec_ - shift_ + tw_->e() - 1) / tw_->e()); }

    void clamp_prec(long prec) { prec_ = std::min(prec_, prec); }

    void reduce() {
        Int pk = tw_->ppow(kcap());
        for (auto& u : comp_) tw_->wreduce(u, pk);
    }

    // min_j (j + e * val_p(u_j)), capped at prec - shift.
    long val_internal() const {
        long K = kcap();
        long best = prec_ - shift_;
        for (long j = 0; j < tw_->e(); ++j) {
            long v = j + tw_->e() * tw_->wval(comp_[j], K);
            if (v < best) best = v;
        }
        return std::max(best, std::min(0L, prec_ - shift_));
    }

    TameElement realigned(long new_shift, long prec) const {
        TameElement r = *this;
        r.clamp_prec(prec);
        long d = r.shift_ - new_shift;
        if (d < 0) throw DomainError("TameElement: cannot realign upward");
        if (d > 0) {
            long e = tw_->e();
            std::vector<TameTower::WElem> nc(e, tw_->wzero());
            r.shift_ = new_shift;
            Int pk = tw_->ppow(r.kcap());
            for (long j = 0; j < e; ++j) {
                long idx = j + d;
                Int scale = tw_->ppow(idx / e);
                TameTower::WElem u = comp_[j];
                for (Int& c : u) c = c * scale % pk;
                nc[idx % e] = u;
            }
            r.comp_ = std::move(nc);
        }
        r.reduce();
        return r;
    }

    void check_same(const TameElement& o) const {
        if (tw_ != o.tw_) throw DomainError("TameElement: mixed towers");
    }

    friend class PadicMatrix;
};

// ---------------------------------------------------------------------------
// PadicMatrix: square matrices over a tower.

class PadicMatrix {
  public:
    PadicMatrix() : tw_(nullptr), n_(0) {}
    PadicMatrix(const TameTower& tw, long n, long prec)
        : tw_(&tw), n_(n), a_(n * n, TameElement::zero(tw, prec)) {}

    static PadicMatrix identity(const TameTower& tw, long n, long prec) {
        PadicMatrix m(tw, n, prec);
        for (long i = 0; i < n; ++i) m.at(i, i) = TameElement::one(tw, prec);
        return m;
    }

    const TameTower& tower() const { return *tw_; }
    long n() const { return n_; }
    TameElement& at(long i, long j) { return a_[i * n_ + j]; }
    const TameElement& at(long i, long j) const { return a_[i * n_ + j]; }

    PadicMatrix operator+(const PadicMatrix& o) const {
        PadicMatrix r = *this;
        for (long i = 0; i < n_ * n_; ++i) r.a_[i] = a_[i] + o.a_[i];
        return r;
    }
    PadicMatrix operator-(const PadicMatrix& o) const {
        PadicMatrix r = *this;
        for (long i = 0; i < n_ * n_; ++i) r.a_[i] = a_[i] - o.a_[i];
        return r;
    }
    PadicMatrix operator*(const PadicMatrix& o) const {
        PadicMatrix r(*tw_, n_, 1);
        for (long i = 0; i < n_; ++i)
            for (long j = 0; j < n_; ++j) {
                TameElement s = at(i, 0) * o.at(0, j);
                for (long k = 1; k < n_; ++k) s = s + at(i, k) * o.at(k, j);
                r.at(i, j) = s;
            }
        return r;
    }
    PadicMatrix operator*(const TameElement& c) const {
        PadicMatrix r = *this;
        for (auto& x : r.a_) x = x * c;
        return r;
    }

    bool operator==(const PadicMatrix& o) const {
        for (long i = 0; i < n_ * n_; ++i)
            if (a_[i] != o.a_[i]) return false;
        return true;
    }
    bool operator!=(const PadicMatrix& o) const { return !(*this == o); }

    bool is_zero() const {
        for (const auto& x : a_)
            if (!x.is_zero()) return false;
        return true;
    }

    long min_prec() const {
        long m = a_[0].prec();
        for (const auto& x : a_) m = std::min(m, x.prec());
        return m;
    }

    // Gauss-Jordan inverse with minimum-valuation pivoting.
    PadicMatrix inverse() const {
        long prec = min_prec();
        std::vector<TameElement> work = a_;
        PadicMatrix inv = identity(*tw_, n_, prec);
        std::vector<long> rowperm(n_);
        for (long i = 0; i < n_; ++i) rowperm[i] = i;
        auto W = [&](long i, long j) -> TameElement& { return work[rowperm[i] * n_ + j]; };
        auto V = [&](long i, long j) -> TameElement& { return inv.at(rowperm[i], j); };
        for (long col = 0; col < n_; ++col) {
            long best = -1;
            long bestv = 0;
            for (long row = col; row < n_; ++row) {
                auto v = W(row, col).ord_num();
                if (v && (best == -1 || *v < bestv)) {
                    best = row;
                    bestv = *v;
                }
            }
            if (best == -1)
                throw IndeterminateAtPrecision("PadicMatrix: singular at precision");
            std::swap(rowperm[col], rowperm[best]);
            TameElement piv = W(col, col).inverse();
            for (long j = 0; j < n_; ++j) {
                W(col, j) = W(col, j) * piv;
                V(col, j) = V(col, j) * piv;
            }
            for (long row = 0; row < n_; ++row) {
                if (row == col) continue;
                TameElement c = W(row, col);
                if (c.is_zero()) continue;
                for (long j = 0; j < n_; ++j) {
                    W(row, j) = W(row, j) - c * W(col, j);
                    V(row, j) = V(row, j) - c * V(col, j);
                }
            }
        }
        PadicMatrix out(*tw_, n_, prec);
        for (long i = 0; i < n_; ++i)
            for (long j = 0; j < n_; ++j) out.at(i, j) = inv.at(rowperm[i], j);
        return out;
    }

    // Characteristic polynomial (monic, little-endian, length n+1) by
    // cofactor expansion over the polynomial ring.
    std::vector<TameElement> char_poly() const {
        long prec = min_prec();
        using Poly = std::vector<TameElement>;
        TameElement zr = TameElement::zero(*tw_, prec);
        TameElement on = TameElement::one(*tw_, prec);
        auto pmul = [&](const Poly& a, const Poly& b) {
            Poly c(a.size() + b.size() - 1, zr);
            for (size_t i = 0; i < a.size(); ++i)
                for (size_t j = 0; j < b.size(); ++j) c[i + j] = c[i + j] + a[i] * b[j];
            return c;
        };
        auto padd = [&](Poly a, const Poly& b) {
            if (a.size() < b.size()) a.resize(b.size(), zr);
            for (size_t i = 0; i < b.size(); ++i) a[i] = a[i] + b[i];
            return a;
        };
        auto pneg = [&](Poly a) {
            for (auto& c : a) c = -c;
            return a;
        };
        // entries of xI - A
        std::vector<Poly> M(n_ * n_);
        for (long i = 0; i < n_; ++i)
            for (long j = 0; j < n_; ++j) {
                Poly p = {-at(i, j)};
                if (i == j) p.push_back(on);
                M[i * n_ + j] = p;
            }
        // recursive determinant over active column subsets
        std::vector<long> cols(n_);
        for (long j = 0; j < n_; ++j) cols[j] = j;
        std::function<Poly(long, std::vector<long>&)> det = [&](long row,
                                                                std::vector<long>& cs) -> Poly {
            if (cs.size() == 1) return M[row * n_ + cs[0]];
            Poly acc = {zr};
            for (size_t k = 0; k < cs.size(); ++k) {
                long c = cs[k];
                std::vector<long> rest;
                for (size_t t = 0; t < cs.size(); ++t)
                    if (t != k) rest.push_back(cs[t]);
                Poly term = pmul(M[row * n_ + c], det(row + 1, rest));
                acc = padd(acc, (k % 2 == 0) ? term : pneg(term));
            }
            return acc;
        };
        Poly cp = det(0, cols);
        cp.resize(n_ + 1, zr);
        return cp;
    }

    TameElement det() const {
        auto cp = char_poly();
        TameElement d = cp[0];
        if (n_ % 2 != 0) d = -d;
        return d;
    }

    TameElement trace() const {
        TameElement s = at(0, 0);
        for (long i = 1; i < n_; ++i) s = s + at(i, i);
        return s;
    }

    // All entries integral (ord >= 0)?
    bool is_integral() const {
        for (const auto& x : a_) {
            auto v = x.ord_num();
            if (v && *v < 0) return false;
        }
        return true;
    }

  private:
    const TameTower* tw_;
    long n_;
    std::vector<TameElement> a_;
};

// ---------------------------------------------------------------------------
// Roots of a monic polynomial over the tower (all roots assumed to lie in the
// tower; anything else is a domain error).  Coefficients little-endian.

namespace detail {

inline TameElement tame_poly_eval(const std::vector<TameElement>& fc, const TameElement& x) {
    TameElement acc = fc.back();
    for (long i = long(fc.size()) - 2; i >= 0; --i) acc = acc * x + fc[i];
    return acc;
}

inline std::vector<TameElement> tame_poly_derivative(const std::vector<TameElement>& fc) {
    std::vector<TameElement> d;
    for (size_t i = 1; i < fc.size(); ++i) d.push_back(fc[i] * Int(long(i)));
    if (d.empty()) d.push_back(TameElement::zero(fc[0].tower(), fc[0].prec()));
    return d;
}

// Taylor shift g(t) = f(a + t) via repeated synthetic division.
inline std::vector<TameElement> tame_taylor_shift(const std::vector<TameElement>& fc,
                                                  const TameElement& a) {
    std::vector<TameElement> work = fc, out;
    for (size_t k = 0; k < fc.size(); ++k) {
        // divide work by (x - a): remainder -> out[k]
        std::vector<TameElement> q(work.size() > 1 ? work.size() - 1 : 1,
                                   TameElement::zero(a.tower(), a.prec()));
        TameElement rem = work.back();
        if (work.size() == 1) {
            out.push_back(work[0]);
            break;
        }
        for (long i = long(work.size()) - 2; i >= 0; --i) {
            q[i] = rem;
            rem = work[i] + rem * a;
        }
        out.push_back(rem);
        work = q;
    }
    return out;
}

struct TameRoot {
    TameElement value;
    long mult;
};

std::vector<TameRoot> tame_poly_roots_impl(const std::vector<TameElement>& fc, bool unit_only,
                                           long depth_guard);

// Roots of positive varpi-valuation (plus the "zero at precision" class).
inline std::vector<TameRoot> tame_positive_roots(const std::vector<TameElement>& g,
                                                 long depth_guard) {
    const TameTower& tw = g[0].tower();
    long deg = long(g.size()) - 1;
    std::vector<TameRoot> out;
    // coefficient valuations in varpi units (nullopt = zero at precision)
    std::vector<std::optional<long>> v(deg + 1);
    for (long i = 0; i <= deg; ++i) v[i] = g[i].ord_num();
    long m0 = 0;
    while (m0 < deg && !v[m0]) ++m0;
    if (m0 > 0) {
        // the m0 small roots have ord >= (zp - v_{m0}) / m0
        long zp = g[0].prec();
        long vn = (m0 < deg && v[m0]) ? *v[m0] : 0;
        out.push_back({TameElement::zero(tw, std::max(1L, (zp - vn) / m0)), m0});
    }
    // lower Newton polygon on points (i, v_i), i in [m0, deg]
    std::vector<std::pair<long, long>> pts;
    for (long i = m0; i <= deg; ++i)
        if (v[i]) pts.push_back({i, *v[i]});
    std::vector<std::pair<long, long>> hull;
    for (auto& pt : pts) {
        while (hull.size() >= 2) {
            auto& a = hull[hull.size() - 2];
            auto& b = hull[hull.size() - 1];
            // keep hull lower-convex with strictly increasing slopes, merging
            // collinear points (a split segment would be processed twice)
            if ((b.second - a.second) * (pt.first - b.first) >=
                (pt.second - b.second) * (b.first - a.first))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    for (size_t s = 0; s + 1 < hull.size(); ++s) {
        auto [i1, w1] = hull[s];
        auto [i2, w2] = hull[s + 1];
        if (w2 >= w1) continue; // non-descending: roots of ord <= 0, not ours
        long dv = w1 - w2, di = i2 - i1;
        if (dv % di != 0) throw DomainError("tame roots: eigenvalue not in the given tower");
        long k = dv / di; // root valuation in varpi units, > 0
        // h(u) = g(varpi^k u) / varpi^mu, mu = min_i (v_i + k i)
        long mu = w1 + k * i1;
        for (long i = m0; i <= deg; ++i)
            if (v[i]) mu = std::min(mu, *v[i] + k * i);
        std::vector<TameElement> h(deg + 1, TameElement::zero(tw, 1));
        for (long i = 0; i <= deg; ++i)
            h[i] = g[i] * TameElement::varpi_pow(tw, k * i - mu, g[i].prec() + std::abs(k * i - mu) + 1);
        for (auto r : tame_poly_roots_impl(h, /*unit_only=*/true, depth_guard - 1)) {
            r.value = r.value * TameElement::varpi_pow(tw, k, r.value.prec() + k + 1);
            out.push_back(r);
        }
    }
    return out;
}

inline std::vector<TameRoot> tame_poly_roots_impl(const std::vector<TameElement>& fc,
                                                  bool unit_only, long depth_guard) {
    if (depth_guard <= 0)
        throw IndeterminateAtPrecision("tame roots: recursion guard exhausted");
    const TameTower& tw = fc[0].tower();
    const FqField& k = tw.residue_field();
    long deg = long(fc.size()) - 1;
    std::vector<TameRoot> out;
    if (deg == 0) return out;
    // residue polynomial
    std::vector<FqElement> fb(deg + 1), db(deg, k.zero());
    for (long i = 0; i <= deg; ++i) fb[i] = fc[i].residue();
    for (long i = 1; i <= deg; ++i) db[i - 1] = fb[i] * k.from_prime(i % k.p());
    auto eval_fq = [&](const std::vector<FqElement>& poly, const FqElement& c) {
        FqElement acc = poly.back();
        for (long i = long(poly.size()) - 2; i >= 0; --i) acc = acc * c + poly[i];
        return acc;
    };
    for (long code = unit_only ? 1 : 0; code < k.order(); ++code) {
        FqElement c = k.from_code(code);
        if (!eval_fq(fb, c).is_zero()) continue;
        if (code == 0) {
            for (auto& r : tame_positive_roots(fc, depth_guard)) out.push_back(r);
            continue;
        }
        TameElement x0 = TameElement::teichmuller(tw, c, fc[0].prec());
        if (!eval_fq(db, c).is_zero()) {
            // simple residue root: Newton iteration
            std::vector<TameElement> df = tame_poly_derivative(fc);
            TameElement x = x0;
            for (long it = 0; it < 64; ++it) {
                TameElement fx = tame_poly_eval(fc, x);
                if (fx.is_zero()) break;
                x = x - fx * tame_poly_eval(df, x).inverse();
            }
            out.push_back({x, 1});
        } else {
            // multiple residue root: shift and take the positive-ord part
            std::vector<TameElement> g = tame_taylor_shift(fc, x0);
            for (auto r : tame_positive_roots(g, depth_guard)) {
                r.value = r.value + x0.reduced_to(
                                        std::max(1L, std::min(x0.prec(), r.value.prec())));
                out.push_back(r);
            }
        }
    }
    return out;
}

} // namespace detail

// Roots (with multiplicity) of a monic polynomial over the tower whose roots
// all lie in the tower.  Throws DomainError when a root falls outside.
inline std::vector<detail::TameRoot> tame_poly_roots(const std::vector<TameElement>& fc) {
    long deg = long(fc.size()) - 1;
    auto raw = detail::tame_poly_roots_impl(fc, /*unit_only=*/false, 48);
    // merge roots that agree at the available precision (a repeated root can
    // surface as several approximate copies once precision runs out)
    std::vector<detail::TameRoot> roots;
    for (const auto& r : raw) {
        bool merged = false;
        for (auto& s : roots)
            if (s.value == r.value) {
                s.mult += r.mult;
                merged = true;
                break;
            }
        if (!merged) roots.push_back(r);
    }
    long total = 0;
    for (const auto& r : roots) total += r.mult;
    if (total != deg)
        throw DomainError("tame roots: polynomial does not split over the given tower");
    return roots;
}

// ---------------------------------------------------------------------------
// Depths at standard apartment points x = (x_1, ..., x_n).

struct DepthResult {
    std::optional<Rat> value; // nullopt: beyond precision everywhere
    bool exact;               // the minimizing entry had a pinned valuation
};

// depth_x of a group element (ord of g - 1, adjusted entry-wise by x_j - x_i)
// or of a Lie-algebra element (no subtraction).
inline DepthResult mp_depth(const PadicMatrix& g, const std::vector<Rat>& x, bool lie = false) {
    long n = g.n();
    if (long(x.size()) != n) throw DomainError("mp_depth: point size mismatch");
    PadicMatrix X = lie ? g
                        : g - PadicMatrix::identity(g.tower(), n, g.min_prec());
    std::optional<Rat> best;
    bool exact = false;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            auto v = X.at(i, j).ord();
            Rat d = (v ? *v : X.at(i, j).prec_ord()) + x[j] - x[i];
            if (!best || d < *best) {
                best = d;
                exact = bool(v);
            }
        }
    if (!exact) return {std::nullopt, true};
    return {best, exact};
}

// g in G_{x,0}: every entry of g and of g^{-1} satisfies ord + x_j - x_i >= 0.
inline bool in_parahoric(const PadicMatrix& g, const std::vector<Rat>& x) {
    auto entry_ok = [&](const PadicMatrix& m) {
        for (long i = 0; i < m.n(); ++i)
            for (long j = 0; j < m.n(); ++j) {
                auto v = m.at(i, j).ord();
                if (v && *v + x[j] - x[i] < 0) return false;
            }
        return true;
    };
    if (!entry_ok(g)) return false;
    try {
        return entry_ok(g.inverse());
    } catch (const IndeterminateAtPrecision&) {
        return false;
    }
}

// Mock exponential for GL_n: X -> 1 + X on the depth window (t, u],
// 0 < t <= u <= 2t, X in g_{x,t}.
inline PadicMatrix mock_exp(const PadicMatrix& X, const std::vector<Rat>& x, const Rat& t,
                            const Rat& u) {
    if (!(t > 0) || t > u || u > 2 * t) throw DomainError("mock_exp: need 0 < t <= u <= 2t");
    DepthResult d = mp_depth(X, x, /*lie=*/true);
    if (d.value && *d.value < t) throw DomainError("mock_exp: X too shallow for g_{x,t}");
    return PadicMatrix::identity(X.tower(), X.n(), X.min_prec()) + X;
}

// ---------------------------------------------------------------------------
// Normal approximations (the GL(V) recipe).

struct NormalApproximation {
    PadicMatrix gamma;
    std::vector<Rat> point;
    std::vector<std::pair<PadicMatrix, Rat>> terms; // (gamma_d, depth d), depths increasing
    PadicMatrix tail;                               // head^{-1} gamma
    std::vector<TameElement> eigenvalues;           // with multiplicity, deterministic order
    // per-eigenvalue digit path: (depth d, scalar s in Lambda_d acting there)
    std::vector<std::vector<std::pair<Rat, TameElement>>> paths;
    // centralizer chain: (threshold depth d, partition of eigenvalue indices
    // AFTER refining at depth d); partitions refine as depth increases
    std::vector<std::pair<Rat, std::vector<std::vector<int>>>> chain;

    // Partition of eigenvalue indices for C^{(t)} (or C^{(t+)} when plus):
    // indices are equivalent iff their digit paths agree at all depths < t
    // (<= t when plus).
    std::vector<std::vector<int>> partition_at(const DepthVal& t) const {
        long n = long(eigenvalues.size());
        std::vector<std::vector<int>> blocks;
        auto below = [&](const Rat& d) { return t.plus ? d <= t.r : d < t.r; };
        // Jumps are depth-sorted, so those below t form a prefix of each path.
        auto prefix_eq = [&](int i, int j) {
            const auto& P = paths[i];
            const auto& Q = paths[j];
            size_t a = 0, b = 0;
            while (a < P.size() && below(P[a].first)) ++a;
            while (b < Q.size() && below(Q[b].first)) ++b;
            if (a != b) return false;
            for (size_t k = 0; k < a; ++k) {
                if (P[k].first != Q[k].first) return false;
                if (P[k].second != Q[k].second) return false;
            }
            return true;
        };
        for (int i = 0; i < n; ++i) {
            bool placed = false;
            for (auto& blk : blocks)
                if (prefix_eq(i, blk[0])) {
                    blk.push_back(i);
                    placed = true;
                    break;
                }
            if (!placed) blocks.push_back({i});
        }
        return blocks;
    }

    // Separation threshold of two eigenvalue indices: the least depth where
    // their digit paths differ (nullopt = never separate).
    std::optional<Rat> separation(int i, int j) const {
        const auto& P = paths[i];
        const auto& Q = paths[j];
        size_t a = 0, b = 0;
        while (a < P.size() || b < Q.size()) {
            if (a >= P.size()) return Q[b].first;
            if (b >= Q.size()) return P[a].first;
            if (P[a].first != Q[b].first) return std::min(P[a].first, Q[b].first);
            if (P[a].second != Q[b].second) return P[a].first;
            ++a;
            ++b;
        }
        return std::nullopt;
    }
};

// Goodness of a single term: for the scalar list (one value per eigenvalue
// index), every ratio is either 1 or has ord exactly d.
inline bool term_is_good(const std::vector<TameElement>& svals, const Rat& d) {
    for (size_t i = 0; i < svals.size(); ++i)
        for (size_t j = 0; j < svals.size(); ++j) {
            if (i == j) continue;
            TameElement ratio = svals[i] / svals[j];
            TameElement dm = ratio - TameElement::one(ratio.tower(), ratio.prec());
            auto v = dm.ord();
            if (!v) continue; // ratio == 1 at precision
            if (*v != d) return false;
        }
    return true;
}

// The section-1.5 recipe.  gamma must be compact (integral with unit
// determinant), semisimple, with all eigenvalues in its own tower.  Depths
// are computed up to depth_cap (jumps at or beyond the cap go to the tail).
inline NormalApproximation normal_approx(const PadicMatrix& gamma, const std::vector<Rat>& x,
                                         const Rat& depth_cap) {
    const TameTower& tw = gamma.tower();
    long n = gamma.n();
    if (long(x.size()) != n) throw DomainError("normal_approx: point size mismatch");
    if (!gamma.is_integral()) throw DomainError("normal_approx: gamma is not integral");
    {
        auto dv = gamma.det().ord();
        if (!dv || *dv != 0) throw DomainError("normal_approx: gamma is not compact (det not a unit)");
    }

    NormalApproximation out;
    out.gamma = gamma;
    out.point = x;

    // Eigenvalues.
    auto roots = tame_poly_roots(gamma.char_poly());
    std::sort(roots.begin(), roots.end(), [](const detail::TameRoot& a, const detail::TameRoot& b) {
        return a.value.digit_key() < b.value.digit_key();
    });
    for (const auto& r : roots)
        for (long m = 0; m < r.mult; ++m) out.eigenvalues.push_back(r.value);

    // Semisimplicity: product of (gamma - lambda) over distinct eigenvalues
    // vanishes at precision.
    {
        PadicMatrix prod = PadicMatrix::identity(tw, n, gamma.min_prec());
        for (const auto& r : roots) {
            PadicMatrix lam(tw, n, r.value.prec());
            for (long i = 0; i < n; ++i) lam.at(i, i) = r.value;
            prod = prod * (gamma - lam);
        }
        if (!prod.is_zero()) throw DomainError("normal_approx: gamma is not semisimple");
    }

    // Digit paths per eigenvalue: peel Lambda_d representatives.
    long prec_cap = gamma.min_prec();
    Rat cap = std::min(depth_cap, make_rat(prec_cap, tw.e()));
    for (const auto& lam : out.eigenvalues) {
        std::vector<std::pair<Rat, TameElement>> path;
        FqElement c0 = lam.residue_unit();
        TameElement head = TameElement::teichmuller(tw, c0, lam.prec());
        path.push_back({make_rat(0), head});
        long guard = tw.e() * prec_cap + 8;
        while (guard-- > 0) {
            TameElement ratio = lam / head;
            TameElement dm = ratio - TameElement::one(tw, ratio.prec());
            auto v = dm.ord();
            if (!v || *v >= cap) break;
            FqElement c = dm.residue_unit();
            long kk = rat_ceil(*v * tw.e()); // varpi exponent (exact)
            TameElement s = TameElement::one(tw, dm.prec()) +
                            TameElement::teichmuller(tw, c, dm.prec()) *
                                TameElement::varpi_pow(tw, kk, dm.prec());
            path.push_back({*v, s});
            head = head * s;
        }
        out.paths.push_back(path);
    }

    // Jump depths across all eigenvalues; drop depths where every scalar is 1
    // (depth 0 with all-Teichmuller-1, i.e. gamma congruent to 1).
    std::set<Rat> depth_set;
    for (const auto& path : out.paths)
        for (const auto& [d, s] : path) depth_set.insert(d);

    // Distinct eigenvalue representatives and their Lagrange projectors.
    std::vector<TameElement> distinct;
    std::vector<std::vector<int>> members;
    for (size_t i = 0; i < out.eigenvalues.size(); ++i) {
        bool found = false;
        for (size_t k = 0; k < distinct.size(); ++k)
            if (distinct[k] == out.eigenvalues[i]) {
                members[k].push_back(int(i));
                found = true;
                break;
            }
        if (!found) {
            distinct.push_back(out.eigenvalues[i]);
            members.push_back({int(i)});
        }
    }
    std::vector<PadicMatrix> projectors;
    for (size_t k = 0; k < distinct.size(); ++k) {
        PadicMatrix P = PadicMatrix::identity(tw, n, prec_cap);
        for (size_t m = 0; m < distinct.size(); ++m) {
            if (m == k) continue;
            PadicMatrix lam(tw, n, distinct[m].prec());
            for (long i = 0; i < n; ++i) lam.at(i, i) = distinct[m];
            TameElement denom = distinct[k] - distinct[m];
            P = (P * (gamma - lam)) * denom.inverse();
        }
        projectors.push_back(P);
    }

    // Terms per depth.
    PadicMatrix head_prod = PadicMatrix::identity(tw, n, prec_cap);
    for (const Rat& d : depth_set) {
        std::vector<TameElement> svals(out.eigenvalues.size(), TameElement::one(tw, prec_cap));
        bool nontrivial = false;
        for (size_t i = 0; i < out.paths.size(); ++i)
            for (const auto& [pd, s] : out.paths[i])
                if (pd == d) {
                    svals[i] = s;
                    TameElement dm = s - TameElement::one(tw, s.prec());
                    if (!dm.is_zero()) nontrivial = true;
                }
        if (!nontrivial) continue;
        PadicMatrix term(tw, n, prec_cap);
        for (size_t k = 0; k < distinct.size(); ++k)
            term = term + projectors[k] * svals[members[k][0]];
        out.terms.push_back({term, d});
        head_prod = head_prod * term;
    }
    out.tail = head_prod.inverse() * gamma;

    // Centralizer chain: record the partition after each refining depth.
    std::vector<std::vector<int>> prev;
    for (const Rat& d : depth_set) {
        auto part = out.partition_at(DepthVal::just_above(d));
        if (part != prev) {
            out.chain.push_back({d, part});
            prev = part;
        }
    }
    return out;
}

// Head gamma_{<t} and tail gamma_{>=t}.
inline std::pair<PadicMatrix, PadicMatrix> head_tail(const NormalApproximation& approx,
                                                     const Rat& t) {
    const TameTower& tw = approx.gamma.tower();
    PadicMatrix head = PadicMatrix::identity(tw, approx.gamma.n(), approx.gamma.min_prec());
    for (const auto& [term, d] : approx.terms)
        if (d < t) head = head * term;
    return {head, head.inverse() * approx.gamma};
}

// ---------------------------------------------------------------------------
// Filtration group orders.
//
// A FiltrationGroupSpec describes a product of filtration pieces of GL_n(Q_p)
// at a standard apartment point as a lattice L in M_n(Q_p): the group is
// 1 + L, and L is spanned over Z_p by integer matrix generators, each carrying
// a depth floor (the generator enters scaled by the least p-power that pushes
// its depth at x to the floor).

struct FiltrationGroupSpec {
    long n = 0;
    long p = 0;
    std::vector<Rat> x;
    struct Gen {
        std::vector<long> flat; // n*n integer matrix, row-major
        DepthVal floor;
    };
    std::vector<Gen> gens;
};

struct QPower {
    long base = 0;
    long exponent = 0;
    Int value;
};

namespace detail {

// depth at x of an integer matrix: min over nonzero entries of
// ord_p(entry) + x_j - x_i.
inline std::optional<Rat> int_matrix_depth(const std::vector<long>& flat, long n, long p,
                                           const std::vector<Rat>& x) {
    std::optional<Rat> best;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            long v = flat[i * n + j];
            if (v == 0) continue;
            long ord = 0;
            while (v % p == 0) {
                v /= p;
                ++ord;
            }
            Rat d = make_rat(ord) + x[j] - x[i];
            if (!best || d < *best) best = d;
        }
    return best;
}

// least k >= 0 with k + base_depth >= floor (strict when floor is a plus)
inline long level_floor(const Rat& base_depth, const DepthVal& floor) {
    Rat need = floor.r - base_depth;
    long k = rat_ceil(need);
    if (floor.plus && make_rat(k) + base_depth == floor.r) ++k;
    return std::max(0L, k);
}

// Valuation of the lattice determinant of a full-rank span of Q-vectors in
// Q^dim, by p-adic Gaussian elimination (entries stay in Z localized at p).
inline long lattice_det_val(std::vector<std::vector<Rat>> rows, long p, long dim) {
    auto val = [&](const Rat& r) -> long {
        if (r == 0) return -1; // sentinel: zero
        long v = 0;
        Int num = r.get_num();
        Int den = r.get_den();
        while (mpz_divisible_ui_p(num.get_mpz_t(), (unsigned long)p)) {
            num /= p;
            ++v;
        }
        while (mpz_divisible_ui_p(den.get_mpz_t(), (unsigned long)p)) {
            den /= p;
            --v;
        }
        return v;
    };
    long total = 0;
    std::vector<bool> used(rows.size(), false);
    for (long col = 0; col < dim; ++col) {
        long best = -1, bestv = 0;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (used[r]) continue;
            long v = val(rows[r][col]);
            if (v < 0) continue;
            if (best == -1 || v < bestv) {
                best = long(r);
                bestv = v;
            }
        }
        if (best == -1) throw DomainError("lattice_det_val: span is not full rank");
        used[best] = true;
        total += bestv;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (used[r] || rows[r][col] == 0) continue;
            Rat c = rows[r][col] / rows[best][col];
            for (long j = col; j < dim; ++j) rows[r][j] -= c * rows[best][j];
        }
    }
    return total;
}

// modulus lattice M = g_{x, >= m}: entry-wise p-power floors.
inline std::vector<long> modulus_entry_levels(long n, long p, const std::vector<Rat>& x,
                                              const DepthVal& m) {
    (void)p;
    std::vector<long> out(n * n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) out[i * n + j] = level_floor(x[j] - x[i], m);
    return out;
}

} // namespace detail

// |(L + M) / M| where L is the spec lattice and M = g_{x, >= modulus}; the
// order of the spec group modulo the congruence subgroup 1 + M.
inline QPower dc_group_order(const FiltrationGroupSpec& spec, const DepthVal& modulus) {
    long n = spec.n, p = spec.p, dim = n * n;
    auto mlev = detail::modulus_entry_levels(n, p, spec.x, modulus);
    // v(det M)
    long vM = 0;
    for (long lv : mlev) vM += lv;
    // rows spanning L + M
    std::vector<std::vector<Rat>> rows;
    for (long idx = 0; idx < dim; ++idx) {
        std::vector<Rat> r(dim, make_rat(0));
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)mlev[idx]);
        r[idx] = Rat(pe);
        rows.push_back(r);
    }
    for (const auto& g : spec.gens) {
        auto bd = detail::int_matrix_depth(g.flat, n, p, spec.x);
        if (!bd) continue; // zero generator
        long k = detail::level_floor(*bd, g.floor);
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)k);
        std::vector<Rat> r(dim);
        for (long idx = 0; idx < dim; ++idx) r[idx] = Rat(pe * g.flat[idx]);
        rows.push_back(r);
    }
    long vLM = detail::lattice_det_val(std::move(rows), p, dim);
    QPower out;
    out.base = p;
    out.exponent = vM - vLM;
    mpz_ui_pow_ui(out.value.get_mpz_t(), (unsigned long)p, (unsigned long)out.exponent);
    return out;
}

// Full congruence group G_{x, from}: one generator per matrix position.
inline FiltrationGroupSpec congruence_spec(long n, long p, const std::vector<Rat>& x,
                                           const DepthVal& from) {
    FiltrationGroupSpec spec;
    spec.n = n;
    spec.p = p;
    spec.x = x;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            FiltrationGroupSpec::Gen g;
            g.flat.assign(n * n, 0);
            g.flat[i * n + j] = 1;
            g.floor = from;
            spec.gens.push_back(g);
        }
    return spec;
}

// The group [[gamma; x, r]] (and variants) for a centralizer chain whose
// blocks are coordinate partitions: entries (a,b) that separate at chain
// threshold T contribute at depth floor (r - T)/2 (with 0+ as the base for
// never-separating pairs).  trunc_j, when set, drops layers with i >= 2j;
// subgroup, when set, intersects every layer with the given block partition
// (the G'-version).
inline FiltrationGroupSpec dc_spec_from_thresholds(
    long n, long p, const std::vector<Rat>& x,
    const std::vector<std::vector<std::optional<Rat>>>& thresholds, const DepthVal& r,
    std::optional<Rat> trunc_j = std::nullopt,
    std::optional<std::vector<std::vector<int>>> subgroup = std::nullopt) {
    FiltrationGroupSpec spec;
    spec.n = n;
    spec.p = p;
    spec.x = x;
    std::vector<int> sub_block(n, 0);
    if (subgroup)
        for (size_t b = 0; b < subgroup->size(); ++b)
            for (int i : (*subgroup)[b]) sub_block[i] = int(b);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) {
            if (subgroup && sub_block[a] != sub_block[b]) continue;
            DepthVal floor;
            std::optional<Rat> T = (a == b) ? std::optional<Rat>{} : thresholds[a][b];
            if (a == b || !T || !(*T < r.r)) {
                floor = DepthVal(make_rat(0), true); // base layer C^{(r)}_{x,0+}
            } else {
                Rat i_min = r.r - *T; // the least i with (a,b) inside C^{(r-i)}
                if (trunc_j && !(i_min < 2 * *trunc_j)) continue; // layer dropped
                floor = DepthVal(i_min / 2, r.plus);
            }
            FiltrationGroupSpec::Gen g;
            g.flat.assign(n * n, 0);
            g.flat[a * n + b] = 1;
            g.floor = floor;
            spec.gens.push_back(g);
        }
    return spec;
}

// Coordinate-aligned separation thresholds for a diagonal gamma: entry (a,b)
// carries the depth at which the digit paths of gamma_aa and gamma_bb
// diverge (nullopt: never).
inline std::vector<std::vector<std::optional<Rat>>> coordinate_thresholds(
    const NormalApproximation& approx) {
    long n = approx.gamma.n();
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (i != j && !approx.gamma.at(i, j).is_zero())
                throw DomainError("coordinate_thresholds: gamma must be diagonal");
    std::vector<int> coord_eig(n, -1);
    for (long i = 0; i < n; ++i) {
        for (size_t k = 0; k < approx.eigenvalues.size(); ++k)
            if (approx.eigenvalues[k] == approx.gamma.at(i, i)) {
                coord_eig[i] = int(k);
                break;
            }
        if (coord_eig[i] < 0)
            throw DomainError("coordinate_thresholds: diagonal entry is not an eigenvalue");
    }
    std::vector<std::vector<std::optional<Rat>>> T(n, std::vector<std::optional<Rat>>(n));
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b)
            if (a != b) T[a][b] = approx.separation(coord_eig[a], coord_eig[b]);
    return T;
}

// [[gamma; x, r]] for a diagonal gamma over Q_p.
inline FiltrationGroupSpec dc_spec(const NormalApproximation& approx, const std::vector<Rat>& x,
                                   const DepthVal& r,
                                   std::optional<Rat> trunc_j = std::nullopt,
                                   std::optional<std::vector<std::vector<int>>> subgroup =
                                       std::nullopt) {
    const TameTower& tw = approx.gamma.tower();
    if (tw.f() != 1 || tw.e() != 1)
        throw DomainError("dc_spec: coordinate counting is over GL_n(Q_p) (trivial tower)");
    return dc_spec_from_thresholds(approx.gamma.n(), tw.p(), x, coordinate_thresholds(approx), r,
                                   trunc_j, subgroup);
}

// Merge the lattices of two specs (the group generated by both).
inline FiltrationGroupSpec spec_join(const FiltrationGroupSpec& a, const FiltrationGroupSpec& b) {
    if (a.n != b.n || a.p != b.p || a.x != b.x)
        throw DomainError("spec_join: incompatible specs");
    FiltrationGroupSpec out = a;
    for (const auto& g : b.gens) out.gens.push_back(g);
    return out;
}

// ---------------------------------------------------------------------------
// Independent oracle: enumerate the group by closure under multiplication of
// generator matrices modulo the congruence lattice M (entry-wise p-power
// reduction), counting cosets directly.

inline long dc_enumerate_cosets(const FiltrationGroupSpec& spec, const DepthVal& modulus,
                                long limit = 2'000'000) {
    long n = spec.n, p = spec.p;
    auto mlev = detail::modulus_entry_levels(n, p, spec.x, modulus);
    std::vector<Int> mpow(n * n);
    long kmax = 0;
    for (long i = 0; i < n * n; ++i) {
        mpz_ui_pow_ui(mpow[i].get_mpz_t(), (unsigned long)p, (unsigned long)mlev[i]);
        kmax = std::max(kmax, mlev[i]);
    }
    Int big;
    mpz_ui_pow_ui(big.get_mpz_t(), (unsigned long)p, (unsigned long)(kmax + 1));
    using Mat = std::vector<Int>;
    auto reduce = [&](Mat& m) {
        for (long i = 0; i < n * n; ++i) {
            long r = i / n, c = i % n;
            m[i] %= mpow[i];
            if (m[i] < 0) m[i] += mpow[i];
            if (r == c && m[i] == 0 && mlev[i] > 0) {
                // keep diagonal in [1, p^k]: representative of 1 mod p^k is 1
            }
        }
    };
    auto keyof = [&](const Mat& m) {
        std::string s;
        for (const auto& c : m) {
            s += c.get_str(36);
            s += ',';
        }
        return s;
    };
    auto mul = [&](const Mat& a, const Mat& b) {
        Mat c(n * n, Int(0));
        for (long i = 0; i < n; ++i)
            for (long k = 0; k < n; ++k) {
                if (a[i * n + k] == 0) continue;
                for (long j = 0; j < n; ++j) c[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        for (auto& x : c) x %= big;
        reduce(c);
        return c;
    };
    // generators: 1 + p^k * gen for the minimal admissible level
    std::vector<Mat> gens;
    for (const auto& g : spec.gens) {
        auto bd = detail::int_matrix_depth(g.flat, n, p, spec.x);
        if (!bd) continue;
        long k = detail::level_floor(*bd, g.floor);
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)k);
        Mat m(n * n, Int(0));
        for (long i = 0; i < n; ++i) m[i * n + i] = 1;
        for (long i = 0; i < n * n; ++i) m[i] += pe * g.flat[i];
        reduce(m);
        gens.push_back(m);
    }
    Mat id(n * n, Int(0));
    for (long i = 0; i < n; ++i) id[i * n + i] = 1;
    reduce(id);
    std::set<std::string> seen;
    std::vector<Mat> frontier;
    seen.insert(keyof(id));
    frontier.push_back(id);
    while (!frontier.empty()) {
        Mat cur = frontier.back();
        frontier.pop_back();
        for (const auto& g : gens) {
            Mat nx = mul(cur, g);
            auto key = keyof(nx);
            if (seen.insert(key).second) {
                if (long(seen.size()) > limit)
                    throw DomainError("dc_enumerate_cosets: group too large to enumerate");
                frontier.push_back(nx);
            }
        }
    }
    return long(seen.size());
}

} // namespace charcalc
