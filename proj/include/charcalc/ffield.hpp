#pragma once

// Finite fields GF(p^n) for odd p at desk scale: deterministic construction
// (lexicographically least irreducible defining polynomial), Galois action,
// relative trace/norm, quadratic character sgn, additive character Lambda.

#include <map>
#include <memory>
#include <vector>

#include "cyclotomic.hpp"
#include "errors.hpp"

namespace charcalc {

class FqField;
const FqField& GF(long p, long n);

class FqElement {
  public:
    FqElement() : field_(nullptr) {}
    FqElement(const FqField* field, std::vector<long> coeffs)
        : field_(field), c_(std::move(coeffs)) {}

    const FqField& field() const { return *field_; }
    const std::vector<long>& coeffs() const { return c_; }

    bool is_zero() const {
        for (long x : c_)
            if (x != 0) return false;
        return true;
    }

    long code() const; // base-p encoding, 0 <= code < q

    FqElement operator+(const FqElement& o) const;
    FqElement operator-(const FqElement& o) const;
    FqElement operator-() const;
    FqElement operator*(const FqElement& o) const;
    FqElement inverse() const;
    FqElement operator/(const FqElement& o) const { return *this * o.inverse(); }
    FqElement pow(Int e) const;
    FqElement frobenius(long k = 1) const; // t^(p^k)

    bool operator==(const FqElement& o) const { return field_ == o.field_ && c_ == o.c_; }
    bool operator!=(const FqElement& o) const { return !(*this == o); }

  private:
    const FqField* field_;
    std::vector<long> c_;
};

class FqField {
  public:
    FqField(long p, long n) : p_(p), n_(n) {
        if (p < 3 || !is_prime(p)) throw DomainError("FqField: characteristic must be an odd prime");
        if (n < 1) throw DomainError("FqField: degree must be positive");
        q_ = 1;
        for (long i = 0; i < n; ++i) {
            if (q_ > 2'000'000 / p) throw DomainError("FqField: field beyond desk scale");
            q_ *= p;
        }
        find_defining_poly();
        find_generator();
        build_sgn_table();
    }

    long p() const { return p_; }
    long degree() const { return n_; }
    long order() const { return q_; }
    const std::vector<long>& defining_poly() const { return poly_; }

    FqElement zero() const { return FqElement(this, std::vector<long>(n_, 0)); }
    FqElement one() const { return from_prime(1); }
    FqElement from_prime(long a) const {
        std::vector<long> c(n_, 0);
        c[0] = ((a % p_) + p_) % p_;
        return FqElement(this, c);
    }
    FqElement from_code(long code) const {
        std::vector<long> c(n_, 0);
        for (long i = 0; i < n_; ++i) {
            c[i] = code % p_;
            code /= p_;
        }
        return FqElement(this, c);
    }
    // x-class of the defining polynomial (degree >= 2), or 1 for the prime field.
    FqElement x_class() const { return n_ >= 2 ? from_code(p_) : one(); }
    FqElement generator() const { return from_code(gen_code_); }

    // Quadratic character: +1 on nonzero squares, -1 on nonsquares.
    // Zero input is a domain error unless zero_is_one (the convention sgn(0)=1
    // used when summing Gauss sums over possibly-degenerate values).
    int sgn(const FqElement& t, bool zero_is_one = false) const {
        if (t.is_zero()) {
            if (zero_is_one) return +1;
            throw DomainError("sgn: zero input outside the sgn(0)=1 convention");
        }
        return sgn_table_[t.code()];
    }

    // sgn computed in the subfield GF(p^m) for an element lying in it.
    int sgn_in_subfield(const FqElement& t, long m) const {
        if (n_ % m != 0) throw DomainError("sgn_in_subfield: degree does not divide");
        if (t.is_zero()) throw DomainError("sgn_in_subfield: zero input");
        long pm = 1;
        for (long i = 0; i < m; ++i) pm *= p_;
        FqElement s = t.pow(Int((pm - 1) / 2));
        if (s == one()) return +1;
        if (s == -one()) return -1;
        throw DomainError("sgn_in_subfield: element not in the subfield");
    }

    // Additive character Lambda(t) = zeta_p^{Tr(t)} in Q(zeta_conductor).
    CycNumber lambda(const FqElement& t, long conductor) const {
        return CycNumber::root_of_unity(conductor, p_, absolute_trace(t));
    }

    // Absolute trace down to the prime field, as an integer mod p.
    long absolute_trace(const FqElement& t) const {
        FqElement s = t;
        FqElement acc = t;
        for (long i = 1; i < n_; ++i) {
            s = s.frobenius();
            acc = acc + s;
        }
        for (long i = 1; i < n_; ++i)
            if (acc.coeffs()[i] != 0) throw DomainError("trace: not in prime field");
        return acc.coeffs()[0];
    }

    // Relative trace to the subfield of degree m | n.
    FqElement rel_trace(const FqElement& t, long m) const {
        if (n_ % m != 0) throw DomainError("rel_trace: degree does not divide");
        FqElement acc = t, s = t;
        for (long i = 1; i < n_ / m; ++i) {
            s = s.frobenius(m);
            acc = acc + s;
        }
        return acc;
    }

    // Relative norm to the subfield of degree m | n.
    FqElement rel_norm(const FqElement& t, long m) const {
        if (n_ % m != 0) throw DomainError("rel_norm: degree does not divide");
        FqElement acc = t, s = t;
        for (long i = 1; i < n_ / m; ++i) {
            s = s.frobenius(m);
            acc = acc * s;
        }
        return acc;
    }

    // Deterministic embedding GF(p^m) -> this field (m | n): the defining
    // polynomial of GF(p^m) gets its least root here.
    FqElement embed(const FqElement& a) const {
        const FqField& sub = a.field();
        if (sub.p() != p_ || n_ % sub.degree() != 0)
            throw DomainError("embed: not a subfield");
        if (sub.degree() == n_) return FqElement(this, a.coeffs());
        FqElement root = embedding_root(sub);
        FqElement acc = zero(), pw = one();
        for (long i = 0; i < sub.degree(); ++i) {
            acc = acc + pw * from_prime(a.coeffs()[i]);
            pw = pw * root;
        }
        return acc;
    }

    // Internal polynomial arithmetic mod (poly_, p), little-endian coefficients.
    std::vector<long> poly_mul_mod(const std::vector<long>& a, const std::vector<long>& b) const {
        std::vector<long> c(2 * n_ - 1, 0);
        for (long i = 0; i < n_; ++i) {
            if (a[i] == 0) continue;
            for (long j = 0; j < n_; ++j) c[i + j] = (c[i + j] + a[i] * b[j]) % p_;
        }
        for (long d = 2 * n_ - 2; d >= n_; --d) {
            long coef = c[d];
            if (coef == 0) continue;
            c[d] = 0;
            for (long i = 0; i < n_; ++i) {
                // x^n = -(poly_[0] + ... + poly_[n-1] x^{n-1})
                c[d - n_ + i] = ((c[d - n_ + i] - coef * poly_[i]) % p_ + p_) % p_;
            }
        }
        c.resize(n_);
        return c;
    }

  private:
    static bool is_prime(long m) {
        if (m < 2) return false;
        for (long d = 2; d * d <= m; ++d)
            if (m % d == 0) return false;
        return true;
    }

    // Polynomial arithmetic over GF(p) for irreducibility testing.
    static std::vector<long> gfp_poly_mod(std::vector<long> a, const std::vector<long>& f, long p) {
        long df = long(f.size()) - 1;
        while (long(a.size()) > df) {
            long coef = a.back();
            if (coef != 0) {
                long shift = long(a.size()) - 1 - df;
                for (long i = 0; i <= df; ++i)
                    a[shift + i] = ((a[shift + i] - coef * f[i]) % p + p) % p;
            }
            a.pop_back();
        }
        return a;
    }
    static std::vector<long> gfp_poly_mulmod(const std::vector<long>& a, const std::vector<long>& b,
                                             const std::vector<long>& f, long p) {
        std::vector<long> c(a.size() + b.size() - 1, 0);
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j) c[i + j] = (c[i + j] + a[i] * b[j]) % p;
        return gfp_poly_mod(std::move(c), f, p);
    }
    // x^(p^e) mod f
    static std::vector<long> gfp_frob_power(const std::vector<long>& f, long p, long e) {
        std::vector<long> x = {0, 1};
        std::vector<long> r = gfp_poly_mod({0, 1}, f, p);
        for (long step = 0; step < e; ++step) {
            // r <- r^p mod f by square-and-multiply on the exponent p
            std::vector<long> base = r;
            std::vector<long> acc = {1};
            long exp = p;
            while (exp > 0) {
                if (exp & 1) acc = gfp_poly_mulmod(acc, base, f, p);
                base = gfp_poly_mulmod(base, base, f, p);
                exp >>= 1;
            }
            r = acc;
        }
        return r;
    }
    static std::vector<long> gfp_poly_gcd(std::vector<long> a, std::vector<long> b, long p) {
        auto trim = [](std::vector<long>& v) {
            while (!v.empty() && v.back() == 0) v.pop_back();
        };
        trim(a);
        trim(b);
        while (!b.empty()) {
            // a mod b with b made monic
            long inv = 1;
            for (long t = 1; t < p; ++t)
                if (t * b.back() % p == 1) inv = t;
            std::vector<long> bm = b;
            for (auto& x : bm) x = x * inv % p;
            std::vector<long> f = bm;
            std::vector<long> r = gfp_poly_mod(a, f, p);
            trim(r);
            a = std::move(b);
            b = std::move(r);
        }
        return a;
    }

    static bool gfp_irreducible(const std::vector<long>& f, long p) {
        long n = long(f.size()) - 1;
        // x^(p^n) == x mod f
        std::vector<long> xpn = gfp_frob_power(f, p, n);
        std::vector<long> x = gfp_poly_mod({0, 1}, f, p);
        xpn.resize(std::max(xpn.size(), x.size()), 0);
        x.resize(xpn.size(), 0);
        if (xpn != x) return false;
        // gcd(x^(p^(n/l)) - x, f) must be trivial for every prime l | n.
        for (long l = 2; l <= n; ++l) {
            if (n % l != 0) continue;
            bool lp = true;
            for (long d = 2; d * d <= l; ++d)
                if (l % d == 0) lp = false;
            if (!lp) continue;
            std::vector<long> g = gfp_frob_power(f, p, n / l);
            g.resize(std::max<size_t>(g.size(), 2), 0);
            g[1] = ((g[1] - 1) % p + p) % p;
            std::vector<long> gc = gfp_poly_gcd(f, g, p);
            if (gc.size() != 1) return false;
        }
        return true;
    }

    void find_defining_poly() {
        // Least (c_{n-1}, ..., c_0) in lexicographic order with x^n + sum c_i x^i irreducible.
        for (long code = 0; code < q_; ++code) {
            std::vector<long> f(n_ + 1, 0);
            f[n_] = 1;
            long rem = code;
            for (long i = n_ - 1; i >= 0; --i) {
                long base = 1;
                for (long j = 0; j < i; ++j) base *= p_;
                f[i] = rem / base;
                rem %= base;
            }
            if (gfp_irreducible(f, p_)) {
                poly_ = std::vector<long>(f.begin(), f.end() - 1);
                return;
            }
        }
        throw DomainError("FqField: no irreducible polynomial found");
    }

    void find_generator() {
        std::vector<long> prime_factors;
        long m = q_ - 1;
        for (long d = 2; d * d <= m; ++d) {
            if (m % d == 0) {
                prime_factors.push_back(d);
                while (m % d == 0) m /= d;
            }
        }
        if (m > 1) prime_factors.push_back(m);
        for (long code = 1; code < q_; ++code) {
            FqElement t = from_code(code);
            bool ok = true;
            for (long l : prime_factors) {
                if (t.pow(Int((q_ - 1) / l)) == one()) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                gen_code_ = code;
                return;
            }
        }
        throw DomainError("FqField: no generator found");
    }

    void build_sgn_table() {
        sgn_table_.assign(q_, 0);
        FqElement g = from_code(gen_code_);
        FqElement t = one();
        for (long j = 0; j < q_ - 1; ++j) {
            sgn_table_[t.code()] = (j % 2 == 0) ? +1 : -1;
            t = t * g;
        }
    }

    FqElement embedding_root(const FqField& sub) const {
        auto it = embed_cache_.find(sub.degree());
        if (it != embed_cache_.end()) return from_code(it->second);
        // Find the least root of sub's defining polynomial in this field.
        const std::vector<long>& sp = sub.defining_poly();
        for (long code = 0; code < q_; ++code) {
            FqElement r = from_code(code);
            FqElement acc = zero(), pw = one();
            for (size_t i = 0; i < sp.size(); ++i) {
                acc = acc + pw * from_prime(sp[i]);
                pw = pw * r;
            }
            acc = acc + pw; // monic leading term
            if (acc.is_zero()) {
                embed_cache_[sub.degree()] = code;
                return r;
            }
        }
        throw DomainError("embed: no root of subfield polynomial (inconsistent fields)");
    }

    long p_, n_, q_;
    std::vector<long> poly_; // low n coefficients of the monic defining polynomial
    long gen_code_ = 0;
    std::vector<int> sgn_table_;
    mutable std::map<long, long> embed_cache_;
};

// Field registry: one canonical instance per (p, n).
inline const FqField& GF(long p, long n) {
    static std::map<std::pair<long, long>, std::unique_ptr<FqField>> cache;
    auto key = std::make_pair(p, n);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<FqField>(p, n)).first;
    return *it->second;
}

inline long FqElement::code() const {
    long c = 0;
    for (size_t i = c_.size(); i-- > 0;) c = c * field().p() + c_[i];
    return c;
}

inline FqElement FqElement::operator+(const FqElement& o) const {
    std::vector<long> c(c_.size());
    for (size_t i = 0; i < c_.size(); ++i) c[i] = (c_[i] + o.c_[i]) % field().p();
    return FqElement(field_, c);
}

inline FqElement FqElement::operator-(const FqElement& o) const {
    std::vector<long> c(c_.size());
    for (size_t i = 0; i < c_.size(); ++i)
        c[i] = ((c_[i] - o.c_[i]) % field().p() + field().p()) % field().p();
    return FqElement(field_, c);
}

inline FqElement FqElement::operator-() const { return field().zero() - *this; }

inline FqElement FqElement::operator*(const FqElement& o) const {
    return FqElement(field_, field().poly_mul_mod(c_, o.c_));
}

inline FqElement FqElement::pow(Int e) const {
    Int m = e % (field().order() - 1);
    if (m < 0) m += field().order() - 1;
    if (is_zero()) {
        if (e == 0) throw DomainError("pow: 0^0 in finite field");
        if (e < 0) throw DomainError("pow: inverse of zero");
        return *this;
    }
    FqElement base = *this, acc = field().one();
    while (m > 0) {
        if (mpz_odd_p(m.get_mpz_t())) acc = acc * base;
        base = base * base;
        m >>= 1;
    }
    return acc;
}

inline FqElement FqElement::inverse() const {
    if (is_zero()) throw DomainError("inverse: zero element");
    return pow(Int(field().order() - 2));
}

inline FqElement FqElement::frobenius(long k) const {
    long n = field().degree();
    k = ((k % n) + n) % n;
    if (k == 0 || is_zero()) return *this;
    Int e = 1;
    for (long i = 0; i < k; ++i) e *= field().p();
    return pow(e);
}

// --- Small dense matrices over GF(q) ------------------------------------

class FqMatrix {
  public:
    FqMatrix(const FqField* field, long rows, long cols)
        : field_(field), rows_(rows), cols_(cols), a_(rows * cols, field->zero()) {}

    static FqMatrix identity(const FqField* field, long n) {
        FqMatrix m(field, n, n);
        for (long i = 0; i < n; ++i) m.at(i, i) = field->one();
        return m;
    }

    long rows() const { return rows_; }
    long cols() const { return cols_; }
    const FqField& field() const { return *field_; }

    FqElement& at(long i, long j) { return a_[i * cols_ + j]; }
    const FqElement& at(long i, long j) const { return a_[i * cols_ + j]; }

    FqMatrix operator*(const FqMatrix& o) const {
        FqMatrix r(field_, rows_, o.cols_);
        for (long i = 0; i < rows_; ++i)
            for (long k = 0; k < cols_; ++k) {
                if (at(i, k).is_zero()) continue;
                for (long j = 0; j < o.cols_; ++j)
                    r.at(i, j) = r.at(i, j) + at(i, k) * o.at(k, j);
            }
        return r;
    }

    FqMatrix operator+(const FqMatrix& o) const {
        FqMatrix r(field_, rows_, cols_);
        for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] + o.a_[i];
        return r;
    }
    FqMatrix operator-(const FqMatrix& o) const {
        FqMatrix r(field_, rows_, cols_);
        for (size_t i = 0; i < a_.size(); ++i) r.a_[i] = a_[i] - o.a_[i];
        return r;
    }
    bool operator==(const FqMatrix& o) const { return a_ == o.a_; }
    bool operator!=(const FqMatrix& o) const { return !(*this == o); }

    FqMatrix transpose() const {
        FqMatrix r(field_, cols_, rows_);
        for (long i = 0; i < rows_; ++i)
            for (long j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
        return r;
    }

    std::vector<FqElement> apply(const std::vector<FqElement>& v) const {
        std::vector<FqElement> r(rows_, field_->zero());
        for (long i = 0; i < rows_; ++i)
            for (long j = 0; j < cols_; ++j) r[i] = r[i] + at(i, j) * v[j];
        return r;
    }

    FqElement det() const {
        if (rows_ != cols_) throw DomainError("det: not square");
        FqMatrix m = *this;
        FqElement d = field_->one();
        for (long col = 0, row = 0; col < cols_ && row < rows_; ++col, ++row) {
            long piv = -1;
            for (long i = row; i < rows_; ++i)
                if (!m.at(i, col).is_zero()) {
                    piv = i;
                    break;
                }
            if (piv < 0) return field_->zero();
            if (piv != row) {
                for (long j = 0; j < cols_; ++j) std::swap(m.at(piv, j), m.at(row, j));
                d = -d;
            }
            d = d * m.at(row, col);
            FqElement inv = m.at(row, col).inverse();
            for (long i = row + 1; i < rows_; ++i) {
                FqElement f = m.at(i, col) * inv;
                for (long j = col; j < cols_; ++j)
                    m.at(i, j) = m.at(i, j) - f * m.at(row, j);
            }
        }
        return d;
    }

    FqMatrix inverse() const {
        if (rows_ != cols_) throw DomainError("inverse: not square");
        FqMatrix m = *this;
        FqMatrix r = identity(field_, rows_);
        for (long col = 0; col < cols_; ++col) {
            long piv = -1;
            for (long i = col; i < rows_; ++i)
                if (!m.at(i, col).is_zero()) {
                    piv = i;
                    break;
                }
            if (piv < 0) throw DomainError("inverse: singular matrix");
            for (long j = 0; j < cols_; ++j) {
                std::swap(m.at(piv, j), m.at(col, j));
                std::swap(r.at(piv, j), r.at(col, j));
            }
            FqElement inv = m.at(col, col).inverse();
            for (long j = 0; j < cols_; ++j) {
                m.at(col, j) = m.at(col, j) * inv;
                r.at(col, j) = r.at(col, j) * inv;
            }
            for (long i = 0; i < rows_; ++i) {
                if (i == col || m.at(i, col).is_zero()) continue;
                FqElement f = m.at(i, col);
                for (long j = 0; j < cols_; ++j) {
                    m.at(i, j) = m.at(i, j) - f * m.at(col, j);
                    r.at(i, j) = r.at(i, j) - f * r.at(col, j);
                }
            }
        }
        return r;
    }

    // Basis of the kernel, as row vectors.
    std::vector<std::vector<FqElement>> kernel() const {
        FqMatrix m = *this;
        std::vector<long> pivot_col;
        long row = 0;
        for (long col = 0; col < cols_ && row < rows_; ++col) {
            long piv = -1;
            for (long i = row; i < rows_; ++i)
                if (!m.at(i, col).is_zero()) {
                    piv = i;
                    break;
                }
            if (piv < 0) continue;
            for (long j = 0; j < cols_; ++j) std::swap(m.at(piv, j), m.at(row, j));
            FqElement inv = m.at(row, col).inverse();
            for (long j = 0; j < cols_; ++j) m.at(row, j) = m.at(row, j) * inv;
            for (long i = 0; i < rows_; ++i) {
                if (i == row || m.at(i, col).is_zero()) continue;
                FqElement f = m.at(i, col);
                for (long j = 0; j < cols_; ++j) m.at(i, j) = m.at(i, j) - f * m.at(row, j);
            }
            pivot_col.push_back(col);
            ++row;
        }
        std::vector<std::vector<FqElement>> basis;
        std::vector<bool> is_pivot(cols_, false);
        for (long c : pivot_col) is_pivot[c] = true;
        for (long free = 0; free < cols_; ++free) {
            if (is_pivot[free]) continue;
            std::vector<FqElement> v(cols_, field_->zero());
            v[free] = field_->one();
            for (size_t r2 = 0; r2 < pivot_col.size(); ++r2)
                v[pivot_col[r2]] = -m.at(long(r2), free);
            basis.push_back(std::move(v));
        }
        return basis;
    }

    long rank() const { return cols_ - long(kernel().size()); }

  private:
    const FqField* field_;
    long rows_, cols_;
    std::vector<FqElement> a_;
};

} // namespace charcalc
