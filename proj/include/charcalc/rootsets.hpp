#pragma once

// Root data for maximal tame tori of GL_n over Q_p: Galois orbits of roots,
// their classification into the orbit types entering the depth-r character
// formulas, and the resulting quartic-root sign and magnitude of the group
// Gauss sum, together with a direct coset-sum oracle.

#include <algorithm>
#include <climits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "charcalc/gauss.hpp"
#include "charcalc/tame.hpp"
#include "charcalc/weil.hpp"

namespace charcalc {

// ---------------------------------------------------------------------------
// TameTorus: an etale algebra over Q_p, a product of tame field factors
// Q_p(zeta_{p^f - 1}, p^{1/e}), together with its embeddings into a common
// splitting tower and the Galois action on them.

struct TameTorus {
    long p = 0;
    struct Factor {
        long f = 0;
        long e = 0;
        const TameTower* tower = nullptr;
    };
    std::vector<Factor> factors;

    const TameTower* split = nullptr; // splitting tower (p, f_split, e_split)
    long f_split = 1;
    long e_split = 1;

    struct Emb {
        int factor = 0;
        long j = 0; // Frobenius twist on the residue digits, mod f_k
        long c = 0; // root-of-unity twist on the uniformizer, mod e_k
    };
    std::vector<Emb> embeddings;

    long n() const { return long(embeddings.size()); }
};

// Automorphism of the splitting tower: digits -> digits^(p^j),
// varpi -> zeta^c varpi, with zeta the fixed primitive e_split-th root of
// unity.  Composition: (a o b) = (a.j + b.j, a.c + p^{a.j} b.c).
struct GaloisElt {
    long j = 0;
    long c = 0;
};

namespace detail {

inline long lcm_long(long a, long b) {
    long g = a, h = b;
    while (h) {
        long t = g % h;
        g = h;
        h = t;
    }
    return a / g * b;
}

inline long modpow_long(long base, long exp, long mod) {
    if (mod == 1) return 0;
    long r = 1 % mod;
    base %= mod;
    for (; exp > 0; exp >>= 1) {
        if (exp & 1) r = r * base % mod;
        base = base * base % mod;
    }
    return r;
}

} // namespace detail

inline TameTorus make_torus(long p, const std::vector<std::pair<long, long>>& fe) {
    TameTorus T;
    T.p = p;
    long flcm = 1, elcm = 1;
    for (auto [f, e] : fe) {
        if (f < 1 || e < 1) throw DomainError("make_torus: factor degrees must be positive");
        if (e % p == 0) throw DomainError("make_torus: wildly ramified factor");
        TameTorus::Factor fac;
        fac.f = f;
        fac.e = e;
        fac.tower = &tame_tower(p, f, e);
        T.factors.push_back(fac);
        flcm = detail::lcm_long(flcm, f);
        elcm = detail::lcm_long(elcm, e);
    }
    T.e_split = elcm;
    // smallest multiple of lcm(f_k) whose residue field contains the
    // e_split-th roots of unity
    T.f_split = flcm;
    while (detail::modpow_long(p, T.f_split, elcm) != 1 % elcm) T.f_split += flcm;
    T.split = &tame_tower(p, T.f_split, T.e_split);
    for (size_t k = 0; k < T.factors.size(); ++k)
        for (long j = 0; j < T.factors[k].f; ++j)
            for (long c = 0; c < T.factors[k].e; ++c)
                T.embeddings.push_back({int(k), j, c});
    return T;
}

inline GaloisElt galois_compose(const TameTorus& T, const GaloisElt& a, const GaloisElt& b) {
    GaloisElt r;
    r.j = (a.j + b.j) % T.f_split;
    r.c = (a.c + detail::modpow_long(T.p, a.j, T.e_split) * b.c) % T.e_split;
    return r;
}

inline std::vector<GaloisElt> galois_group(const TameTorus& T) {
    std::vector<GaloisElt> out;
    for (long j = 0; j < T.f_split; ++j)
        for (long c = 0; c < T.e_split; ++c) out.push_back({j, c});
    return out;
}

// Image of an embedding under post-composition with a Galois element.
inline int galois_on_emb(const TameTorus& T, const GaloisElt& g, int idx) {
    const TameTorus::Emb& e = T.embeddings[idx];
    const TameTorus::Factor& fac = T.factors[e.factor];
    long j2 = (e.j + g.j) % fac.f;
    long c2 = (detail::modpow_long(T.p, g.j, fac.e) * e.c + g.c % fac.e) % fac.e;
    for (size_t i = 0; i < T.embeddings.size(); ++i) {
        const auto& o = T.embeddings[i];
        if (o.factor == e.factor && o.j == j2 && o.c == c2) return int(i);
    }
    throw DomainError("galois_on_emb: embedding table is inconsistent");
}

// Residue-field image of the fixed primitive e_split-th root of unity.
inline FqElement torus_zeta_residue(const TameTorus& T) {
    const FqField& R = T.split->residue_field();
    if (T.e_split == 1) return R.one();
    return R.generator().pow(Int((R.order() - 1) / T.e_split));
}

// Apply a Galois element to a splitting-tower element via its Teichmuller
// digit expansion.
inline TameElement galois_apply(const TameTorus& T, const GaloisElt& g, const TameElement& a) {
    if (&a.tower() != T.split) throw DomainError("galois_apply: element not in the splitting tower");
    FqElement zb = torus_zeta_residue(T);
    std::map<long, FqElement> out;
    for (const auto& [m, d] : a.teich_digits(a.prec())) {
        long cm = ((g.c * m) % T.e_split + T.e_split) % T.e_split;
        out[m] = d.frobenius(g.j) * zb.pow(Int(cm));
    }
    return TameElement::from_digits(*T.split, out, a.prec());
}

// Images in the splitting tower of one element per factor (an element of the
// etale algebra), listed per embedding.
inline std::vector<TameElement> torus_embed(const TameTorus& T,
                                            const std::vector<TameElement>& vals, long prec) {
    if (vals.size() != T.factors.size())
        throw DomainError("torus_embed: one value per factor required");
    const FqField& R = T.split->residue_field();
    FqElement zb = torus_zeta_residue(T);
    std::vector<TameElement> out;
    for (const auto& emb : T.embeddings) {
        const TameTorus::Factor& fac = T.factors[emb.factor];
        const TameElement& v = vals[emb.factor];
        if (&v.tower() != fac.tower)
            throw DomainError("torus_embed: value lies in the wrong factor tower");
        long stretch = T.e_split / fac.e; // varpi_k -> zeta^{c*stretch} varpi^stretch
        std::map<long, FqElement> digits;
        for (const auto& [m, d] : v.teich_digits(v.prec())) {
            long cm = ((emb.c * stretch * m) % T.e_split + T.e_split) % T.e_split;
            digits[m * stretch] = R.embed(d).frobenius(emb.j) * zb.pow(Int(cm));
        }
        out.push_back(TameElement::from_digits(*T.split, digits, prec));
    }
    return out;
}

// Canonical apartment point of the torus: embedding (k, j, c) sits at c/e_k.
inline std::vector<Rat> torus_point(const TameTorus& T) {
    std::vector<Rat> x;
    for (const auto& emb : T.embeddings) x.push_back(make_rat(emb.c, T.factors[emb.factor].e));
    return x;
}

// ---------------------------------------------------------------------------
// Root orbits.

struct RootOrbit {
    int a = 0, b = 0;                            // representative root (a, b)
    std::vector<std::pair<int, int>> orbit;      // full Galois x {+-1} orbit
    long e_alpha = 1;                            // ramification of F_alpha
    long f_alpha = 1;                            // residue degree of F_alpha
    bool symmetric = false;                      // -alpha in the Galois orbit
    bool ramified = false;                       // F_alpha / F_{+-alpha} ramified
    long f_pm = 0;                               // residue degree of F_{+-alpha}
    TameElement value;                           // alpha(gamma) = eig_a / eig_b
    std::optional<Rat> i_ord;                    // ord(alpha(gamma) - 1)
    std::optional<Rat> level;                    // (r - i)/2
    bool weight_nonzero = false;                 // jump present at the level
    int split_sign = +1;                         // rank-1 subgroup sign datum
};

struct RootClassification {
    XiData xi;                       // level-s orbit data for the epsilon stage
    std::vector<RootOrbit> upsilon;  // Gauss-stage orbits
    long orbit_count = 0;            // all +-orbits outside the Levi
};

namespace detail {

// Element of GF(p, m) mapping to t under the canonical embedding into big.
inline FqElement subfield_residue(const FqField& big, const FqElement& t, long m) {
    const FqField& sub = GF(big.p(), m);
    if (&sub == &big) return t;
    for (long code = 0; code < sub.order(); ++code) {
        FqElement cand = sub.from_code(code);
        if (big.embed(cand) == t) return cand;
    }
    throw DomainError("subfield_residue: residue lies outside the expected subfield");
}

struct OrbitGeometry {
    std::vector<std::pair<int, int>> orbit; // Galois x {+-1} orbit, sorted
    long e_alpha = 1, f_alpha = 1;
    bool symmetric = false, ramified = false;
    long f_pm = 0;
};

inline OrbitGeometry orbit_geometry(const TameTorus& T, int a, int b) {
    OrbitGeometry g;
    std::set<std::pair<int, int>> gal, inert, pm_gal, pm_inert;
    for (const auto& s : galois_group(T)) {
        int sa = galois_on_emb(T, s, a), sb = galois_on_emb(T, s, b);
        gal.insert({sa, sb});
        pm_gal.insert({std::min(sa, sb), std::max(sa, sb)});
        if (s.j == 0) {
            inert.insert({sa, sb});
            pm_inert.insert({std::min(sa, sb), std::max(sa, sb)});
        }
    }
    g.symmetric = gal.count({b, a}) > 0;
    g.e_alpha = long(inert.size());
    g.f_alpha = long(gal.size()) / g.e_alpha;
    std::set<std::pair<int, int>> both = gal;
    both.insert({b, a});
    for (const auto& pr : gal) both.insert({pr.second, pr.first});
    g.orbit.assign(both.begin(), both.end());
    if (g.symmetric) {
        long e_pm = long(pm_inert.size());
        g.f_pm = long(pm_gal.size()) / e_pm;
        g.ramified = (g.e_alpha == 2 * e_pm);
    }
    return g;
}

// Does the F-rational alpha-weight space jump at the given level at x?
inline bool weight_jump(const Rat& level, const Rat& xa, const Rat& xb, long e_alpha) {
    Rat t = (level - (xb - xa)) * e_alpha;
    return t.get_den() == 1;
}

} // namespace detail

// Partition the Galois orbits of roots outside the Levi into the level-s
// classes (epsilon stage, depth pair (r, s)) and the orbits supporting the
// group Gauss sum, with all per-orbit constants.
//   eig:   alpha(gamma)-data, one eigenvalue per embedding (splitting tower)
//   x:     apartment point per embedding
//   block: Levi block id per embedding; roots within a block are excluded
// The optional outer partition restricts to roots of that larger Levi (the
// window Phi(outer) \ Phi(block) of a two-step tower); by default all roots
// outside the inner Levi participate.
inline RootClassification classify_roots(const TameTorus& T, const std::vector<TameElement>& eig,
                                         const std::vector<Rat>& x, const std::vector<int>& block,
                                         const Rat& r, bool reverse_reps = false,
                                         const std::vector<int>* outer = nullptr) {
    long n = T.n();
    if (long(eig.size()) != n || long(x.size()) != n || long(block.size()) != n)
        throw DomainError("classify_roots: per-embedding data size mismatch");
    if (outer && long(outer->size()) != n)
        throw DomainError("classify_roots: outer partition size mismatch");
    Rat s = r / 2;
    RootClassification out;
    out.xi.base = &GF(T.p, 1);

    std::set<std::pair<int, int>> seen;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b || seen.count({a, b})) continue;
            detail::OrbitGeometry geom = detail::orbit_geometry(T, a, b);
            for (const auto& pr : geom.orbit) seen.insert(pr);
            bool in_levi = (block[a] == block[b]);
            for (const auto& pr : geom.orbit)
                if ((block[pr.first] == block[pr.second]) != in_levi)
                    throw DomainError("classify_roots: Levi blocks are not Galois-stable");
            if (outer) {
                bool in_outer = ((*outer)[a] == (*outer)[b]);
                for (const auto& pr : geom.orbit)
                    if (((*outer)[pr.first] == (*outer)[pr.second]) != in_outer)
                        throw DomainError("classify_roots: Levi blocks are not Galois-stable");
                if (!in_outer) continue;
            }
            if (in_levi) continue;
            ++out.orbit_count;

            std::pair<int, int> rep =
                reverse_reps ? geom.orbit.back() : geom.orbit.front();
            int ra = rep.first, rb = rep.second;
            TameElement rho = eig[ra] / eig[rb];

            // epsilon stage: weight space at level s
            if (detail::weight_jump(s, x[ra], x[rb], geom.e_alpha)) {
                FqElement res = rho.residue_unit();
                FqElement val = detail::subfield_residue(T.split->residue_field(), res,
                                                         geom.f_alpha);
                const FqField& falpha = GF(T.p, geom.f_alpha);
                XiOrbit orb;
                orb.residue_field = &falpha;
                orb.f_deg = geom.f_alpha;
                orb.eigenvalue = val;
                if (val == falpha.one()) {
                    orb.cls = XiClass::Trivial;
                    out.xi.fixed_dim += geom.symmetric ? geom.f_alpha : 2 * geom.f_alpha;
                } else if (geom.symmetric && val == -falpha.one()) {
                    orb.cls = XiClass::SymmMinus1;
                } else if (geom.symmetric) {
                    orb.cls = XiClass::SymmOther;
                } else {
                    orb.cls = XiClass::NonSymm;
                }
                out.xi.orbits.push_back(orb);
            }

            // Gauss stage: separation depth i with 0 < i < r and a jump at
            // the intermediate level (r - i)/2
            TameElement delta = rho - TameElement::one(*T.split, rho.prec());
            if (delta.is_zero()) continue;
            Rat i = *delta.ord();
            if (!(i > 0) || !(i < r)) continue;
            Rat level = (r - i) / 2;
            if (!detail::weight_jump(level, x[ra], x[rb], geom.e_alpha)) continue;

            RootOrbit ro;
            ro.a = ra;
            ro.b = rb;
            ro.orbit = geom.orbit;
            ro.e_alpha = geom.e_alpha;
            ro.f_alpha = geom.f_alpha;
            ro.symmetric = geom.symmetric;
            ro.ramified = geom.ramified;
            ro.f_pm = geom.f_pm;
            ro.value = rho;
            ro.i_ord = i;
            ro.level = level;
            ro.weight_nonzero = true;
            out.upsilon.push_back(ro);
        }
    xi_validate(out.xi);
    return out;
}

// ---------------------------------------------------------------------------
// Closed form for the normalized group Gauss sum: a fourth root of unity.
//   xstar: images per embedding of the dual-coset realization (etale-algebra
//          element of valuation -r)

inline CycNumber gauss_sum_sign(const TameTorus& T, const std::vector<RootOrbit>& upsilon,
                                const std::vector<TameElement>& xstar, const Rat& r,
                                long conductor) {
    const FqField& base = GF(T.p, 1);
    CycNumber out = CycNumber::from_rational(conductor, 1);
    CycNumber neg_g = g_lambda(base, conductor).value * Rat(-1);
    long rational_sign = 1;
    for (const auto& orb : upsilon) {
        if (!orb.symmetric) continue;
        rational_sign = -rational_sign;
        if (!orb.ramified) continue;
        for (long k = 0; k < orb.f_alpha; ++k) out = out * neg_g;

        // sigma_alpha and the stabilizer of alpha
        std::optional<GaloisElt> sigma;
        std::vector<GaloisElt> stab;
        for (const auto& g : galois_group(T)) {
            int sa = galois_on_emb(T, g, orb.a), sb = galois_on_emb(T, g, orb.b);
            if (sa == orb.b && sb == orb.a && !sigma) sigma = g;
            if (sa == orb.a && sb == orb.b) stab.push_back(g);
        }
        if (!sigma) throw DomainError("gauss_sum_sign: symmetric orbit without a flip");

        // a uniformizer of F_alpha negated by sigma_alpha
        long prec = orb.value.prec();
        const FqField& R = T.split->residue_field();
        FqElement zb = torus_zeta_residue(T);
        std::optional<TameElement> unif;
        for (long t = 0; t < T.e_split && !unif; ++t) {
            std::map<long, FqElement> d;
            d[T.e_split / orb.e_alpha] = zb.pow(Int(t));
            TameElement w = TameElement::from_digits(*T.split, d, prec);
            bool ok = (galois_apply(T, *sigma, w) == -w);
            for (const auto& g : stab)
                if (ok && !(galois_apply(T, g, w) == w)) ok = false;
            if (ok) unif = w;
        }
        if (!unif) throw DomainError("gauss_sum_sign: no negated uniformizer (parity violation)");

        Rat mexp = (r - *orb.i_ord) / 2 * orb.e_alpha;
        if (mexp.get_den() != 1)
            throw DomainError("gauss_sum_sign: intermediate level not a valuation (parity violation)");
        long m = long(mexp.get_num().get_si());
        TameElement w_alpha = TameElement::one(*T.split, prec);
        for (long k = 0; k < m; ++k) w_alpha = w_alpha * *unif;
        TameElement norm_w = w_alpha * galois_apply(T, *sigma, w_alpha);

        TameElement dX = xstar[orb.a] - xstar[orb.b];
        TameElement half_e = TameElement::from_rational(*T.split, make_rat(orb.e_alpha, 2),
                                                        prec);
        TameElement prod =
            half_e * norm_w * dX *
            (orb.value - TameElement::one(*T.split, orb.value.prec()));
        auto v = prod.ord();
        if (!v || *v != 0)
            throw DomainError("gauss_sum_sign: residue product is not a unit");
        rational_sign *= R.sgn_in_subfield(prod.residue_unit(), orb.f_alpha);
        rational_sign *= orb.split_sign;
    }
    return out * Rat(rational_sign);
}

// ---------------------------------------------------------------------------
// Magnitude from congruence-lattice indices.

struct IndexPair {
    FiltrationGroupSpec num;
    FiltrationGroupSpec den;
};

inline long dc_index_exponent(const FiltrationGroupSpec& num, const FiltrationGroupSpec& den,
                              const DepthVal& modulus) {
    long e = dc_group_order(num, modulus).exponent - dc_group_order(den, modulus).exponent;
    if (e < 0) throw DomainError("dc_index_exponent: denominator group is not contained");
    return e;
}

// |G~| = [at_r]^{1/2} [at_r_plus]^{1/2} card(level pairing)^{-1/2}.
inline QPowerSqrt gauss_sum_magnitude(const IndexPair& at_r, const IndexPair& at_r_plus,
                                      const IndexPair& card_pair, const DepthVal& modulus,
                                      long conductor) {
    long p = at_r.num.p;
    long e = dc_index_exponent(at_r.num, at_r.den, modulus) +
             dc_index_exponent(at_r_plus.num, at_r_plus.den, modulus) -
             dc_index_exponent(card_pair.num, card_pair.den, modulus);
    return QPowerSqrt(p, e, CycNumber::from_rational(conductor, 1));
}

// Product over tower levels of two square-root indices each.
inline QPowerSqrt c_constant(const std::vector<std::pair<IndexPair, IndexPair>>& levels,
                             const DepthVal& modulus, long conductor) {
    if (levels.empty()) throw DomainError("c_constant: no levels");
    long p = levels.front().first.num.p;
    long e = 0;
    for (const auto& [pr, pr_plus] : levels) {
        e += dc_index_exponent(pr.num, pr.den, modulus);
        e += dc_index_exponent(pr_plus.num, pr_plus.den, modulus);
    }
    return QPowerSqrt(p, e, CycNumber::from_rational(conductor, 1));
}

// ---------------------------------------------------------------------------
// Brute-force oracle: enumerate the coset space and sum the character values.

using RatMat = std::vector<Rat>; // n x n, row-major

namespace detail {

inline RatMat rm_identity(long n) {
    RatMat m(n * n, make_rat(0));
    for (long i = 0; i < n; ++i) m[i * n + i] = 1;
    return m;
}

inline RatMat rm_mul(const RatMat& a, const RatMat& b, long n) {
    RatMat c(n * n, make_rat(0));
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < n; ++k) {
            if (a[i * n + k] == 0) continue;
            for (long j = 0; j < n; ++j) c[i * n + j] += a[i * n + k] * b[k * n + j];
        }
    return c;
}

inline RatMat rm_inverse(RatMat a, long n) {
    RatMat inv = rm_identity(n);
    for (long col = 0; col < n; ++col) {
        long piv = -1;
        for (long r = col; r < n; ++r)
            if (a[r * n + col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) throw DomainError("rm_inverse: singular matrix");
        for (long j = 0; j < n; ++j) {
            std::swap(a[piv * n + j], a[col * n + j]);
            std::swap(inv[piv * n + j], inv[col * n + j]);
        }
        Rat d = a[col * n + col];
        for (long j = 0; j < n; ++j) {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for (long r = 0; r < n; ++r) {
            if (r == col || a[r * n + col] == 0) continue;
            Rat f = a[r * n + col];
            for (long j = 0; j < n; ++j) {
                a[r * n + j] -= f * a[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    return inv;
}

inline long rat_val(const Rat& r, long p) {
    if (r == 0) return LONG_MAX;
    long v = 0;
    Int num = r.get_num(), den = r.get_den();
    while (mpz_divisible_ui_p(num.get_mpz_t(), (unsigned long)p)) {
        num /= p;
        ++v;
    }
    while (mpz_divisible_ui_p(den.get_mpz_t(), (unsigned long)p)) {
        den /= p;
        --v;
    }
    return v;
}

// Triangular p-adic basis of a full-rank lattice: row i has pivot p^{b_i}
// exactly at column i and zeros before it.
inline std::vector<std::vector<Rat>> padic_triangular(std::vector<std::vector<Rat>> rows, long dim,
                                                      long p) {
    std::vector<std::vector<Rat>> tri;
    for (long col = 0; col < dim; ++col) {
        long best = -1;
        long bestv = 0;
        for (size_t r = 0; r < rows.size(); ++r) {
            long v = rat_val(rows[r][col], p);
            if (v == LONG_MAX || v < 0) continue;
            if (best < 0 || v < bestv) {
                best = long(r);
                bestv = v;
            }
        }
        if (best < 0) throw DomainError("padic_triangular: lattice is not full rank");
        std::vector<Rat> piv = rows[best];
        rows.erase(rows.begin() + best);
        // normalize the pivot entry to an exact power of p
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)bestv);
        Rat scale = Rat(pe) / piv[col];
        for (auto& x : piv) x *= scale;
        for (auto& row : rows) {
            if (row[col] == 0) continue;
            Rat f = row[col] / piv[col];
            for (long j = col; j < dim; ++j) row[j] -= f * piv[j];
        }
        tri.push_back(piv);
    }
    return tri;
}

// Canonical residue of a p-integral rational modulo p^k.
inline Int rat_residue(const Rat& a, const Int& pk) {
    Int num = a.get_num() % pk, den = a.get_den() % pk, inv;
    if (num < 0) num += pk;
    if (den < 0) den += pk;
    if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), pk.get_mpz_t()) == 0)
        throw DomainError("rat_residue: denominator not a p-adic unit");
    Int r = num * inv % pk;
    if (r < 0) r += pk;
    return r;
}

// Canonical representative of v modulo the triangular lattice.
inline std::vector<Rat> lattice_reduce(std::vector<Rat> v,
                                       const std::vector<std::vector<Rat>>& tri, long p) {
    long dim = long(v.size());
    for (long i = 0; i < dim; ++i) {
        Rat pivot = tri[i][i]; // exact power of p
        Int pk = pivot.get_num();
        Int res = rat_residue(v[i], pk);
        Rat t = (v[i] - Rat(res)) / pivot;
        if (t != 0)
            for (long j = i; j < dim; ++j) v[j] -= t * tri[i][j];
    }
    return v;
}

inline std::vector<std::vector<Rat>> spec_lattice_rows(const FiltrationGroupSpec& spec,
                                                       const DepthVal& modulus) {
    long n = spec.n, p = spec.p, dim = n * n;
    std::vector<std::vector<Rat>> rows;
    auto mlev = modulus_entry_levels(n, p, spec.x, modulus);
    for (long idx = 0; idx < dim; ++idx) {
        std::vector<Rat> r(dim, make_rat(0));
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)mlev[idx]);
        r[idx] = Rat(pe);
        rows.push_back(r);
    }
    for (const auto& g : spec.gens) {
        auto bd = int_matrix_depth(g.flat, n, p, spec.x);
        if (!bd) continue;
        long k = level_floor(*bd, g.floor);
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)k);
        std::vector<Rat> r(dim);
        for (long idx = 0; idx < dim; ++idx) r[idx] = Rat(pe * g.flat[idx]);
        rows.push_back(r);
    }
    return rows;
}

// Additive character of Q_p trivial on pZ_p and inducing t -> zeta_p^t on the
// residue field, valued in Q(zeta_conductor).
inline CycNumber qp_character(const Rat& t0, long p, long conductor) {
    Rat t = t0 / p;
    long v = rat_val(t, p);
    if (v >= 0) return CycNumber::from_rational(conductor, 1);
    long k = -v;
    Int pk;
    mpz_ui_pow_ui(pk.get_mpz_t(), (unsigned long)p, (unsigned long)k);
    Rat u = t * Rat(pk); // p-integral with unit denominator
    Int a = rat_residue(u, pk);
    if (conductor % long(Int(pk).get_si()) != 0)
        throw ConductorMismatch("qp_character: conductor too small for the value");
    return cyc_embed(conductor, long(pk.get_si()), long(a.get_si()));
}

} // namespace detail

struct GaussSumOracle {
    CycNumber value;
    long cosets = 0;
    GaussSumOracle(CycNumber v, long c) : value(std::move(v)), cosets(c) {}
};

// Direct evaluation: sum of phi-hat([gamma^{-1}, g]) over coset
// representatives of the quotient of the two filtration groups, with
// phi-hat(h) = Lambda(<xstar, h - 1>).
inline GaussSumOracle gauss_sum_bruteforce(const RatMat& gamma, const RatMat& xstar,
                                           const FiltrationGroupSpec& numerator,
                                           const FiltrationGroupSpec& denominator,
                                           const DepthVal& modulus, long conductor,
                                           long limit = 100000) {
    long n = numerator.n, p = numerator.p, dim = n * n;
    if (denominator.n != n || denominator.p != p)
        throw DomainError("gauss_sum_bruteforce: spec mismatch");
    auto rows_num = detail::spec_lattice_rows(numerator, modulus);
    auto rows_den = detail::spec_lattice_rows(denominator, modulus);
    auto tri = detail::padic_triangular(rows_den, dim, p);

    auto keyof = [&](const std::vector<Rat>& v) {
        std::string s;
        for (const auto& r : v) {
            s += r.get_str();
            s += ',';
        }
        return s;
    };

    // additive closure of the numerator lattice modulo the denominator
    std::map<std::string, std::vector<Rat>> seen;
    std::vector<std::vector<Rat>> frontier;
    std::vector<Rat> zero(dim, make_rat(0));
    seen[keyof(zero)] = zero;
    frontier.push_back(zero);
    while (!frontier.empty()) {
        auto cur = frontier.back();
        frontier.pop_back();
        for (const auto& g : rows_num) {
            std::vector<Rat> nx(dim);
            for (long i = 0; i < dim; ++i) nx[i] = cur[i] + g[i];
            nx = detail::lattice_reduce(nx, tri, p);
            auto key = keyof(nx);
            if (!seen.count(key)) {
                if (long(seen.size()) >= limit)
                    throw DomainError("gauss_sum_bruteforce: enumeration too large");
                seen[key] = nx;
                frontier.push_back(nx);
            }
        }
    }

    std::vector<RatMat> reps;
    for (const auto& [k, v] : seen) {
        RatMat g = detail::rm_identity(n);
        for (long i = 0; i < dim; ++i) g[i] += v[i];
        reps.push_back(g);
    }

    // verify the representatives sit in pairwise distinct group cosets
    if (long(reps.size()) <= 512) {
        for (size_t i = 0; i < reps.size(); ++i)
            for (size_t j = i + 1; j < reps.size(); ++j) {
                RatMat q = detail::rm_mul(reps[i], detail::rm_inverse(reps[j], n), n);
                std::vector<Rat> v(dim);
                for (long t = 0; t < dim; ++t)
                    v[t] = q[t] - (t / n == t % n ? make_rat(1) : make_rat(0));
                auto red = detail::lattice_reduce(v, tri, p);
                bool zero_red = true;
                for (const auto& rr : red)
                    if (rr != 0) zero_red = false;
                if (zero_red)
                    throw DomainError("gauss_sum_bruteforce: coset representatives collide");
            }
    }

    RatMat ginv_gamma = detail::rm_inverse(gamma, n);
    CycNumber sum(conductor);
    for (const auto& g : reps) {
        RatMat c = detail::rm_mul(detail::rm_mul(ginv_gamma, g, n),
                                  detail::rm_mul(gamma, detail::rm_inverse(g, n), n), n);
        Rat t(0);
        for (long i = 0; i < n; ++i)
            for (long k = 0; k < n; ++k)
                t += xstar[i * n + k] * (c[k * n + i] - (k == i ? make_rat(1) : make_rat(0)));
        sum += detail::qp_character(t, p, conductor);
    }
    return GaussSumOracle(sum, long(reps.size()));
}

} // namespace charcalc
