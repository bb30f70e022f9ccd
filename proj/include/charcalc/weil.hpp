#pragma once

// Weil representation of Sp(2n, F_q) in the Schroedinger model: explicit
// operators on functions on F_q^n, exact character values (dense matrices at
// small sizes, kernel-sum evaluation in general), the closed-form character
// formulas for semisimple elements, and the epsilon sign/cardinality attached
// to root-orbit data.
//
// Model conventions.  V = F_q^{2n} with the standard symplectic form
// <v, w> = v^T J w, J = [[0, I], [-I, 0]].  Operators act on functions on the
// Lagrangian F_q^n:
//   m(A) = diag(A, A^{-T})      : f |-> sgn(det A) f(A^T x)
//   u(T) = [[I, T], [0, I]]     : f |-> zeta(x^T (T/2) x) f(x)
//   w    = [[0, I], [-I, 0]]    : f |-> c * sum_y zeta(x . y) f(y)
// with zeta = Lambda (the fixed additive character) and the scalar c pinned
// exactly by the identity w = u(I) l(-I) u(I), l(-I) = w u(I) w^{-1}, which
// forces c = q^{-n} (sum_t zeta(t^2/2))^n.  With these choices the assignment
// extends multiplicatively to a genuine representation; the tests verify
// multiplicativity on product probes.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cyclotomic.hpp"
#include "errors.hpp"
#include "ffield.hpp"
#include "forms.hpp"
#include "gauss.hpp"

namespace charcalc {

// --- Small dense matrices over Q(zeta_N) ---------------------------------

struct CycMatrix {
    long n = 0;
    long conductor = 1;
    std::vector<CycNumber> a;

    CycMatrix(long n_, long cond) : n(n_), conductor(cond), a(n_ * n_, CycNumber(cond)) {}

    CycNumber& at(long i, long j) { return a[i * n + j]; }
    const CycNumber& at(long i, long j) const { return a[i * n + j]; }

    static CycMatrix identity(long n, long cond) {
        CycMatrix m(n, cond);
        for (long i = 0; i < n; ++i) m.at(i, i) = CycNumber::from_rational(cond, 1);
        return m;
    }

    CycMatrix operator*(const CycMatrix& o) const {
        CycMatrix r(n, conductor);
        for (long i = 0; i < n; ++i)
            for (long k = 0; k < n; ++k) {
                if (at(i, k).is_zero()) continue;
                for (long j = 0; j < n; ++j) r.at(i, j) += at(i, k) * o.at(k, j);
            }
        return r;
    }

    CycNumber trace() const {
        CycNumber t(conductor);
        for (long i = 0; i < n; ++i) t += at(i, i);
        return t;
    }

    bool operator==(const CycMatrix& o) const {
        for (long i = 0; i < n * n; ++i)
            if (a[i] != o.a[i]) return false;
        return true;
    }
    bool operator!=(const CycMatrix& o) const { return !(*this == o); }
};

namespace detail {

inline FqVector combine(const FqField& F, const std::vector<FqVector>& basis,
                        const std::vector<FqElement>& coeffs) {
    long d = basis.empty() ? 0 : long(basis[0].size());
    FqVector v(d, F.zero());
    for (size_t i = 0; i < basis.size(); ++i)
        for (long j = 0; j < d; ++j) v[j] = v[j] + coeffs[i] * basis[i][j];
    return v;
}

inline FqVector mat_apply(const FqMatrix& m, const FqVector& v) { return m.apply(v); }

inline long list_rank(const FqField& F, const std::vector<FqVector>& vs, long dim) {
    if (vs.empty()) return 0;
    FqMatrix m(&F, long(vs.size()), dim);
    for (size_t i = 0; i < vs.size(); ++i)
        for (long j = 0; j < dim; ++j) m.at(long(i), j) = vs[i][j];
    return m.rank();
}

// Reduced row echelon basis of the span; canonical for a given subspace.
inline std::vector<FqVector> rref_basis(const FqField& F, std::vector<FqVector> rows) {
    if (rows.empty()) return rows;
    long d = long(rows[0].size());
    long r = 0;
    for (long col = 0; col < d && r < long(rows.size()); ++col) {
        long piv = -1;
        for (long i = r; i < long(rows.size()); ++i)
            if (!rows[i][col].is_zero()) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        std::swap(rows[piv], rows[r]);
        FqElement inv = rows[r][col].inverse();
        for (long j = 0; j < d; ++j) rows[r][j] = rows[r][j] * inv;
        for (long i = 0; i < long(rows.size()); ++i) {
            if (i == r || rows[i][col].is_zero()) continue;
            FqElement f = rows[i][col];
            for (long j = 0; j < d; ++j) rows[i][j] = rows[i][j] - f * rows[r][j];
        }
        ++r;
    }
    rows.resize(r, FqVector());
    return rows;
}

inline std::string subspace_key(const FqField& F, const std::vector<FqVector>& rref) {
    std::string key;
    for (const auto& v : rref) {
        for (const auto& t : v) {
            key += std::to_string(t.code());
            key += ',';
        }
        key += ';';
    }
    return key;
}

inline FqVector code_vector(const FqField& F, long n, long code) {
    FqVector v(n, F.zero());
    for (long i = 0; i < n; ++i) {
        v[i] = F.from_code(code % F.order());
        code /= F.order();
    }
    return v;
}

// Solve  sum_i x_i basis_i = target;  throws if the target is outside the span.
inline std::vector<FqElement> solve_in_span(const FqField& F,
                                            const std::vector<FqVector>& basis,
                                            const FqVector& target) {
    long d = long(target.size());
    long s = long(basis.size());
    FqMatrix m(&F, d, s + 1);
    for (long i = 0; i < d; ++i) {
        for (long j = 0; j < s; ++j) m.at(i, j) = basis[j][i];
        m.at(i, s) = target[i];
    }
    for (const auto& k : m.kernel()) {
        if (!k[s].is_zero()) {
            FqElement inv = (-k[s]).inverse();
            std::vector<FqElement> out(s, F.zero());
            for (long j = 0; j < s; ++j) out[j] = k[j] * inv;
            return out;
        }
    }
    throw DomainError("solve_in_span: target not in span");
}

// Matrix of g restricted to an invariant subspace, in the given basis.
inline FqMatrix action_in_basis(const FqField& F, const FqMatrix& g,
                                const std::vector<FqVector>& basis) {
    long s = long(basis.size());
    FqMatrix out(&F, s, s);
    for (long j = 0; j < s; ++j) {
        auto coords = solve_in_span(F, basis, mat_apply(g, basis[j]));
        for (long i = 0; i < s; ++i) out.at(i, j) = coords[i];
    }
    return out;
}

// Induced action on span(comp) modulo span(sub); g must preserve
// span(sub) + span(comp) and span(sub).
inline FqMatrix quotient_action(const FqField& F, const FqMatrix& g,
                                const std::vector<FqVector>& sub,
                                const std::vector<FqVector>& comp) {
    std::vector<FqVector> full = sub;
    full.insert(full.end(), comp.begin(), comp.end());
    long s = long(sub.size()), c = long(comp.size());
    FqMatrix out(&F, c, c);
    for (long j = 0; j < c; ++j) {
        auto coords = solve_in_span(F, full, mat_apply(g, comp[j]));
        for (long i = 0; i < c; ++i) out.at(i, j) = coords[s + i];
    }
    return out;
}

// Basis of { u : B(u, b) = 0 for all b in basis }; whole space if basis empty.
inline std::vector<FqVector> perp_space(const FqField& F, const FqMatrix& gram,
                                        const std::vector<FqVector>& basis) {
    long d = gram.rows();
    if (basis.empty()) {
        std::vector<FqVector> all;
        for (long i = 0; i < d; ++i) {
            FqVector e(d, F.zero());
            e[i] = F.one();
            all.push_back(e);
        }
        return all;
    }
    FqMatrix m(&F, long(basis.size()), d);
    for (size_t j = 0; j < basis.size(); ++j) {
        FqVector gb = mat_apply(gram, basis[j]);
        for (long i = 0; i < d; ++i) m.at(long(j), i) = gb[i];
    }
    return m.kernel();
}

inline FqElement form_eval(const FqMatrix& gram, const FqVector& v, const FqVector& w) {
    const FqField& F = *(&gram.at(0, 0).field());
    FqVector gw = mat_apply(gram, w);
    FqElement acc = F.zero();
    for (size_t i = 0; i < v.size(); ++i) acc = acc + v[i] * gw[i];
    return acc;
}

inline bool totally_isotropic(const FqMatrix& gram, const std::vector<FqVector>& basis) {
    for (size_t i = 0; i < basis.size(); ++i)
        for (size_t j = 0; j < basis.size(); ++j)
            if (!form_eval(gram, basis[i], basis[j]).is_zero()) return false;
    return true;
}

// Vectors from `pool` extending span(inner) to span(inner + pool).
inline std::vector<FqVector> extend_basis(const FqField& F,
                                          const std::vector<FqVector>& inner,
                                          const std::vector<FqVector>& pool, long dim) {
    std::vector<FqVector> cur = inner, added;
    long r = list_rank(F, cur, dim);
    for (const auto& w : pool) {
        cur.push_back(w);
        long r2 = list_rank(F, cur, dim);
        if (r2 > r) {
            added.push_back(w);
            r = r2;
        } else {
            cur.pop_back();
        }
    }
    return added;
}

// All g-invariant subspaces (every invariant subspace is a sum of cyclic
// subspaces Z(v), and the set is closed under sums).
inline std::vector<std::vector<FqVector>> invariant_subspaces(const FqField& F,
                                                              const FqMatrix& g) {
    long d = g.rows();
    double total = 1;
    for (long i = 0; i < d; ++i) total *= F.order();
    if (total > 20000)
        throw DomainError("invariant_subspaces: space beyond desk scale");

    std::map<std::string, std::vector<FqVector>> found;
    long tot = long(total);
    for (long code = 1; code < tot; ++code) {
        FqVector v = code_vector(F, d, code);
        std::vector<FqVector> basis{v};
        long r = 1;
        FqVector cur = v;
        while (true) {
            cur = mat_apply(g, cur);
            basis.push_back(cur);
            long r2 = list_rank(F, basis, d);
            if (r2 == r) {
                basis.pop_back();
                break;
            }
            r = r2;
        }
        auto rb = rref_basis(F, basis);
        found.emplace(subspace_key(F, rb), rb);
    }
    // Close under pairwise sums.
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::vector<FqVector>> items;
        items.reserve(found.size());
        for (auto& kv : found) items.push_back(kv.second);
        for (size_t i = 0; i < items.size() && !changed; ++i)
            for (size_t j = i + 1; j < items.size() && !changed; ++j) {
                std::vector<FqVector> uni = items[i];
                uni.insert(uni.end(), items[j].begin(), items[j].end());
                auto rb = rref_basis(F, uni);
                auto key = subspace_key(F, rb);
                if (!found.count(key)) {
                    found.emplace(key, rb);
                    changed = true;
                }
                if (found.size() > 20000)
                    throw DomainError("invariant_subspaces: too many subspaces");
            }
    }
    std::vector<std::vector<FqVector>> out;
    out.reserve(found.size());
    for (auto& kv : found) out.push_back(kv.second);
    return out;
}

// --- Polynomials over GF(q), for the semisimplicity test -----------------

using FqPoly = std::vector<FqElement>; // little-endian coefficients

inline FqPoly poly_trim(FqPoly p) {
    while (!p.empty() && p.back().is_zero()) p.pop_back();
    return p;
}

inline FqPoly poly_rem(FqPoly a, const FqPoly& b) {
    a = poly_trim(a);
    while (a.size() >= b.size() && !a.empty()) {
        FqElement f = a.back() / b.back();
        long shift = long(a.size() - b.size());
        for (size_t i = 0; i < b.size(); ++i)
            a[shift + i] = a[shift + i] - f * b[i];
        a = poly_trim(a);
    }
    return a;
}

inline FqPoly poly_gcd(FqPoly a, FqPoly b) {
    a = poly_trim(a);
    b = poly_trim(b);
    while (!b.empty()) {
        FqPoly r = poly_rem(a, b);
        a = b;
        b = r;
    }
    return a;
}

inline FqPoly poly_derivative(const FqField& F, const FqPoly& p) {
    FqPoly d;
    for (size_t i = 1; i < p.size(); ++i) d.push_back(F.from_prime(long(i)) * p[i]);
    return poly_trim(d);
}

} // namespace detail

// Minimal polynomial of a square matrix over GF(q), little-endian, monic.
inline detail::FqPoly minimal_polynomial(const FqMatrix& g) {
    const FqField& F = g.at(0, 0).field();
    long d = g.rows();
    std::vector<std::vector<FqElement>> powers;
    FqMatrix cur = FqMatrix::identity(&F, d);
    for (long m = 0; m <= d; ++m) {
        std::vector<FqElement> flat;
        flat.reserve(d * d);
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j) flat.push_back(cur.at(i, j));
        powers.push_back(flat);
        // Columns are the flattened powers; a kernel vector is a linear
        // relation sum_i k_i g^i = 0.
        FqMatrix cols(&F, d * d, long(powers.size()));
        for (size_t r = 0; r < powers.size(); ++r)
            for (long c = 0; c < d * d; ++c) cols.at(c, long(r)) = powers[r][c];
        auto ker = cols.kernel();
        if (!ker.empty()) {
            // Pick a relation with the highest power's coefficient nonzero.
            for (const auto& k : ker) {
                if (!k[m].is_zero()) {
                    FqElement inv = k[m].inverse();
                    detail::FqPoly p;
                    for (long i = 0; i <= m; ++i) p.push_back(k[i] * inv);
                    return p;
                }
            }
        }
        cur = cur * g;
    }
    throw DomainError("minimal_polynomial: no relation found");
}

inline bool is_semisimple(const FqMatrix& g) {
    const FqField& F = g.at(0, 0).field();
    auto m = minimal_polynomial(g);
    auto gcd = detail::poly_gcd(m, detail::poly_derivative(F, m));
    return gcd.size() <= 1; // constant gcd <=> squarefree minimal polynomial
}

// --- Symplectic spaces ----------------------------------------------------

struct SymplecticSpace {
    const FqField* F = nullptr;
    long n = 0;        // half-dimension
    FqMatrix gram;     // 2n x 2n, antisymmetric, non-degenerate
    FqMatrix basis;    // columns: symplectic basis; basis^T gram basis = J

    static FqMatrix standard_J(const FqField& F, long n) {
        FqMatrix J(&F, 2 * n, 2 * n);
        for (long i = 0; i < n; ++i) {
            J.at(i, n + i) = F.one();
            J.at(n + i, i) = -F.one();
        }
        return J;
    }

    static SymplecticSpace standard(const FqField& F, long n) {
        SymplecticSpace sp{&F, n, standard_J(F, n), FqMatrix::identity(&F, 2 * n)};
        return sp;
    }

    static SymplecticSpace from_gram(const FqField& F, const FqMatrix& gram) {
        long d = gram.rows();
        if (d % 2 != 0) throw DomainError("SymplecticSpace: odd dimension");
        SesquiForm B(&F, gram, 0, -1); // validates antisymmetry
        if (!B.non_degenerate()) throw DomainError("SymplecticSpace: degenerate form");
        auto wd = witt_decompose(B);
        if (!wd.v_0.empty() || wd.witt_index != d / 2)
            throw DomainError("SymplecticSpace: no symplectic basis found");
        long n = d / 2;
        FqMatrix C(&F, d, d);
        // <e_i, f_j> = delta with J = [[0, I], [-I, 0]]: e_i = v_minus, f_i = v_plus.
        for (long i = 0; i < n; ++i)
            for (long r = 0; r < d; ++r) {
                C.at(r, i) = wd.v_minus[i][r];
                C.at(r, n + i) = wd.v_plus[i][r];
            }
        if (C.transpose() * gram * C != standard_J(F, n))
            throw DomainError("SymplecticSpace: basis normalization failed");
        return SymplecticSpace{&F, n, gram, C};
    }

    bool is_symplectic(const FqMatrix& g) const {
        return g.transpose() * gram * g == gram;
    }

    // Conjugate g into standard-basis coordinates.
    FqMatrix to_standard(const FqMatrix& g) const { return basis.inverse() * g * basis; }
};

// --- Generator words ------------------------------------------------------

struct SpGenerator {
    enum Kind { Levi, Unipotent, Weyl } kind;
    FqMatrix mat; // A for Levi, T for Unipotent, unused for Weyl
};

namespace detail {

inline FqMatrix block(const FqField& F, const FqMatrix& g, long n, long bi, long bj) {
    FqMatrix b(&F, n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) b.at(i, j) = g.at(bi * n + i, bj * n + j);
    return b;
}

inline FqMatrix group_matrix(const FqField& F, long n, const SpGenerator& gen) {
    FqMatrix g(&F, 2 * n, 2 * n);
    switch (gen.kind) {
        case SpGenerator::Levi: {
            FqMatrix Ainv_t = gen.mat.inverse().transpose();
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j) {
                    g.at(i, j) = gen.mat.at(i, j);
                    g.at(n + i, n + j) = Ainv_t.at(i, j);
                }
            return g;
        }
        case SpGenerator::Unipotent: {
            g = FqMatrix::identity(&F, 2 * n);
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j) g.at(i, n + j) = gen.mat.at(i, j);
            return g;
        }
        case SpGenerator::Weyl:
            return SymplecticSpace::standard_J(F, n);
    }
    throw DomainError("group_matrix: unreachable");
}

inline bool is_symmetric(const FqMatrix& m) { return m == m.transpose(); }

} // namespace detail

// Decompose g in Sp(2n, F_q) (standard form) into generators m(A), u(T), w,
// with at most two Weyl factors.
inline std::vector<SpGenerator> sp_decompose(const FqField& F, long n, const FqMatrix& g) {
    if (g.transpose() * SymplecticSpace::standard_J(F, n) * g !=
        SymplecticSpace::standard_J(F, n))
        throw DomainError("sp_decompose: matrix is not symplectic");
    FqMatrix A = detail::block(F, g, n, 0, 0), B = detail::block(F, g, n, 0, 1);
    FqMatrix C = detail::block(F, g, n, 1, 0), D = detail::block(F, g, n, 1, 1);
    FqMatrix zero(&F, n, n);

    std::vector<SpGenerator> word;
    if (C == zero) {
        // g = m(A) u(A^{-1} B)
        FqMatrix T = A.inverse() * B;
        if (!detail::is_symmetric(T)) throw DomainError("sp_decompose: inconsistent blocks");
        word.push_back({SpGenerator::Levi, A});
        word.push_back({SpGenerator::Unipotent, T});
    } else if (!C.det().is_zero()) {
        // g = u(A C^{-1}) w m(-C) u(C^{-1} D)
        FqMatrix X = A * C.inverse();
        FqMatrix T = C.inverse() * D;
        if (!detail::is_symmetric(X) || !detail::is_symmetric(T))
            throw DomainError("sp_decompose: inconsistent blocks");
        FqMatrix negC(&F, n, n);
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) negC.at(i, j) = -C.at(i, j);
        word.push_back({SpGenerator::Unipotent, X});
        word.push_back({SpGenerator::Weyl, zero});
        word.push_back({SpGenerator::Levi, negC});
        word.push_back({SpGenerator::Unipotent, T});
    } else {
        // Find symmetric S with A + S C invertible; then w u(S) g has an
        // invertible lower-left block, and g = u(-S) m(-I) w (w u(S) g).
        std::optional<FqMatrix> S;
        long q = F.order();
        // Diagonal candidates first, then seeded random symmetric matrices.
        double diag_total = 1;
        for (long i = 0; i < n; ++i) diag_total *= q;
        for (long code = 0; code < long(std::min(diag_total, 100000.0)); ++code) {
            FqMatrix cand(&F, n, n);
            long rem = code;
            for (long i = 0; i < n; ++i) {
                cand.at(i, i) = F.from_code(rem % q);
                rem /= q;
            }
            if (!(A + cand * C).det().is_zero()) {
                S = cand;
                break;
            }
        }
        if (!S) {
            std::mt19937_64 rng(0xC0FFEE);
            for (long tries = 0; tries < 200000 && !S; ++tries) {
                FqMatrix cand(&F, n, n);
                for (long i = 0; i < n; ++i)
                    for (long j = i; j < n; ++j) {
                        FqElement t = F.from_code(long(rng() % q));
                        cand.at(i, j) = t;
                        cand.at(j, i) = t;
                    }
                if (!(A + cand * C).det().is_zero()) S = cand;
            }
        }
        if (!S) throw DomainError("sp_decompose: no completion found");
        FqMatrix negS(&F, n, n), negI(&F, n, n);
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) negS.at(i, j) = -S->at(i, j);
        for (long i = 0; i < n; ++i) negI.at(i, i) = -F.one();
        FqMatrix h = detail::group_matrix(F, n, {SpGenerator::Weyl, zero}) *
                     detail::group_matrix(F, n, {SpGenerator::Unipotent, *S}) * g;
        word.push_back({SpGenerator::Unipotent, negS});
        word.push_back({SpGenerator::Levi, negI});
        word.push_back({SpGenerator::Weyl, zero});
        auto rest = sp_decompose(F, n, h);
        word.insert(word.end(), rest.begin(), rest.end());
    }
    // Verify the word multiplies back to g.
    FqMatrix prod = FqMatrix::identity(&F, 2 * n);
    for (const auto& gen : word) prod = prod * detail::group_matrix(F, n, gen);
    if (prod != g) throw DomainError("sp_decompose: word verification failed");
    return word;
}

// --- The model ------------------------------------------------------------

// An operator kernel: monomial K(x, y) = scalar * zeta(x^T Q x) [y = P x],
// or Fourier K(x, y) = scalar * zeta(x . y).
struct WeilOp {
    bool fourier = false;
    CycNumber scalar;
    FqMatrix P;
    FqMatrix Q;
};

class WeilModel {
  public:
    WeilModel(SymplecticSpace space, long conductor)
        : space_(std::move(space)), conductor_(conductor) {
        const FqField& F = field();
        if (conductor_ % (4 * F.p()) != 0)
            throw ConductorMismatch("WeilModel: conductor must be divisible by 4p");
        double size = 1;
        for (long i = 0; i < space_.n; ++i) size *= F.order();
        if (size > 3000) throw DomainError("WeilModel: model dimension beyond desk scale");
        dim_ = long(size);
        half_ = F.from_prime(2).inverse();
        // c = q^{-n} (sum_t zeta(t^2/2))^n, forced by w = u(I) l(-I) u(I).
        ZetaSum s(conductor_);
        long step = conductor_ / F.p();
        for (long t = 0; t < F.order(); ++t) {
            FqElement e = F.from_code(t);
            s.add(F.absolute_trace(e * e * half_) * step);
        }
        CycNumber gsum = s.to_cyc();
        fourier_scalar_ = CycNumber::from_rational(conductor_, 1);
        Rat inv_q(1, F.order());
        for (long i = 0; i < space_.n; ++i) fourier_scalar_ = fourier_scalar_ * gsum * inv_q;
    }

    const SymplecticSpace& space() const { return space_; }
    const FqField& field() const { return *space_.F; }
    long conductor() const { return conductor_; }
    long model_dim() const { return dim_; }

    WeilOp op_for(const SpGenerator& gen) const {
        const FqField& F = field();
        long n = space_.n;
        switch (gen.kind) {
            case SpGenerator::Levi: {
                WeilOp op{false, CycNumber::from_rational(conductor_, F.sgn(gen.mat.det())),
                          gen.mat.transpose(), FqMatrix(&F, n, n)};
                return op;
            }
            case SpGenerator::Unipotent: {
                FqMatrix Q(&F, n, n);
                for (long i = 0; i < n; ++i)
                    for (long j = 0; j < n; ++j) Q.at(i, j) = gen.mat.at(i, j) * half_;
                return WeilOp{false, CycNumber::from_rational(conductor_, 1),
                              FqMatrix::identity(&F, n), Q};
            }
            case SpGenerator::Weyl:
                return WeilOp{true, fourier_scalar_, FqMatrix::identity(&F, n),
                              FqMatrix(&F, n, n)};
        }
        throw DomainError("op_for: unreachable");
    }

    // Operators for a standard-coordinates symplectic matrix.
    std::vector<WeilOp> word_ops(const FqMatrix& g_std) const {
        auto word = sp_decompose(field(), space_.n, g_std);
        std::vector<WeilOp> ops;
        ops.reserve(word.size());
        for (const auto& gen : word) ops.push_back(op_for(gen));
        return ops;
    }

    // Exact trace of the operator product via kernel sums (no dense matrices).
    CycNumber trace_ops(std::vector<WeilOp> ops) const {
        const FqField& F = field();
        long n = space_.n;
        // Fold adjacent monomials: (op1 . op2) has P = P2 P1, Q = Q1 + P1^T Q2 P1.
        std::vector<WeilOp> folded;
        auto fold_into_last = [&](const WeilOp& op) {
            WeilOp& m = folded.back();
            m.scalar = m.scalar * op.scalar;
            m.Q = m.Q + m.P.transpose() * op.Q * m.P;
            m.P = op.P * m.P;
        };
        for (const auto& op : ops) {
            if (op.fourier || folded.empty() || folded.back().fourier)
                folded.push_back(op);
            else
                fold_into_last(op);
        }
        if (folded.empty())
            return CycNumber::from_rational(conductor_, dim_);

        // Cyclic rotation so the word starts with a Fourier factor, then pair
        // each Fourier with the following monomial (inserting identities).
        size_t first_fourier = folded.size();
        for (size_t i = 0; i < folded.size(); ++i)
            if (folded[i].fourier) {
                first_fourier = i;
                break;
            }
        long step = conductor_ / F.p();
        if (first_fourier == folded.size()) {
            // Purely monomial word: trace = s sum_{Px=x} zeta(Q(x)).
            const WeilOp& m = folded[0];
            auto fix = (m.P - FqMatrix::identity(&F, n)).kernel();
            ZetaSum sum(conductor_);
            long total = 1;
            for (size_t i = 0; i < fix.size(); ++i) total *= F.order();
            for (long code = 0; code < total; ++code) {
                long rem = code;
                std::vector<FqElement> coeffs;
                for (size_t i = 0; i < fix.size(); ++i) {
                    coeffs.push_back(F.from_code(rem % F.order()));
                    rem /= F.order();
                }
                FqVector x = detail::combine(F, fix, coeffs);
                if (x.empty()) x.assign(n, F.zero());
                sum.add(F.absolute_trace(quad(m.Q, x)) * step);
            }
            return m.scalar * sum.to_cyc();
        }
        std::rotate(folded.begin(), folded.begin() + long(first_fourier), folded.end());
        // Rotation can leave two monomials adjacent at the seam; fold again.
        {
            std::vector<WeilOp> refolded;
            for (const auto& op : folded) {
                if (op.fourier || refolded.empty() || refolded.back().fourier) {
                    refolded.push_back(op);
                } else {
                    WeilOp& m = refolded.back();
                    m.scalar = m.scalar * op.scalar;
                    m.Q = m.Q + m.P.transpose() * op.Q * m.P;
                    m.P = op.P * m.P;
                }
            }
            folded = std::move(refolded);
        }
        struct Segment {
            CycNumber scalar;
            FqMatrix Pinv;
            FqMatrix Q;
        };
        std::vector<Segment> segs;
        for (size_t i = 0; i < folded.size(); ++i) {
            if (!folded[i].fourier) throw DomainError("trace_ops: malformed word");
            CycNumber sc = folded[i].scalar;
            FqMatrix P = FqMatrix::identity(&F, n), Q(&F, n, n);
            if (i + 1 < folded.size() && !folded[i + 1].fourier) {
                sc = sc * folded[i + 1].scalar;
                P = folded[i + 1].P;
                Q = folded[i + 1].Q;
                ++i;
            }
            segs.push_back({sc, P.inverse(), Q});
        }
        long k = long(segs.size());
        double terms = 1;
        for (long i = 0; i < k * n; ++i) terms *= F.order();
        if (terms > 8e6) throw DomainError("trace_ops: kernel sum beyond desk scale");

        // trace = prod scalars * sum over (y_1..y_k) of
        //         zeta( sum_i [ y_i . u_{i+1} + Q_i(u_{i+1}) ] ),  u_j = Pinv_{j-1} y_j.
        CycNumber scalar = CycNumber::from_rational(conductor_, 1);
        for (const auto& s : segs) scalar = scalar * s.scalar;
        long total = long(terms);
        std::vector<long> codes(k, 0);
        ZetaSum sum(conductor_);
        long qn = 1;
        for (long i = 0; i < n; ++i) qn *= F.order();
        // Precompute per-code vectors once.
        std::vector<FqVector> vecs(qn);
        for (long c = 0; c < qn; ++c) vecs[c] = detail::code_vector(F, n, c);
        for (long it = 0; it < total; ++it) {
            long rem = it;
            for (long i = 0; i < k; ++i) {
                codes[i] = rem % qn;
                rem /= qn;
            }
            FqElement acc = F.zero();
            for (long i = 0; i < k; ++i) {
                const FqVector& yi = vecs[codes[i]];
                const FqVector& ynext = vecs[codes[(i + 1) % k]];
                FqVector u = detail::mat_apply(segs[i].Pinv, ynext);
                for (long j = 0; j < n; ++j) acc = acc + yi[j] * u[j];
                acc = acc + quad(segs[i].Q, u);
            }
            sum.add(F.absolute_trace(acc) * step);
        }
        return scalar * sum.to_cyc();
    }

    CycNumber trace_standard(const FqMatrix& g_std) const { return trace_ops(word_ops(g_std)); }

    // Dense matrix of the operator, for verification at small sizes.
    CycMatrix dense(const FqMatrix& g_std) const {
        if (dim_ > 256) throw DomainError("dense: model too large");
        auto ops = word_ops(g_std);
        CycMatrix out = CycMatrix::identity(dim_, conductor_);
        for (const auto& op : ops) out = out * dense_op(op);
        return out;
    }

    CycMatrix dense_op(const WeilOp& op) const {
        const FqField& F = field();
        long n = space_.n;
        long step = conductor_ / F.p();
        CycMatrix m(dim_, conductor_);
        if (op.fourier) {
            for (long xc = 0; xc < dim_; ++xc) {
                FqVector x = detail::code_vector(F, n, xc);
                for (long yc = 0; yc < dim_; ++yc) {
                    FqVector y = detail::code_vector(F, n, yc);
                    FqElement dot = F.zero();
                    for (long j = 0; j < n; ++j) dot = dot + x[j] * y[j];
                    m.at(xc, yc) = op.scalar * zeta_power(F.absolute_trace(dot) * step);
                }
            }
            return m;
        }
        for (long xc = 0; xc < dim_; ++xc) {
            FqVector x = detail::code_vector(F, n, xc);
            FqVector px = detail::mat_apply(op.P, x);
            long yc = 0, mul = 1;
            for (long j = 0; j < n; ++j) {
                yc += px[j].code() * mul;
                mul *= F.order();
            }
            m.at(xc, yc) = op.scalar * zeta_power(F.absolute_trace(quad(op.Q, x)) * step);
        }
        return m;
    }

  private:
    CycNumber zeta_power(long exponent) const {
        long e = ((exponent % conductor_) + conductor_) % conductor_;
        return cyc_embed(conductor_, conductor_, e);
    }

    FqElement quad(const FqMatrix& Q, const FqVector& x) const {
        const FqField& F = field();
        FqElement acc = F.zero();
        for (long i = 0; i < Q.rows(); ++i) {
            if (x[i].is_zero()) continue;
            for (long j = 0; j < Q.cols(); ++j) acc = acc + x[i] * Q.at(i, j) * x[j];
        }
        return acc;
    }

    SymplecticSpace space_;
    long conductor_;
    long dim_ = 0;
    FqElement half_;
    CycNumber fourier_scalar_{4};
};

inline WeilModel weil_build(const SymplecticSpace& space, long conductor) {
    return WeilModel(space, conductor);
}

inline CycNumber weil_char_bruteforce(const WeilModel& model, const FqMatrix& g) {
    if (!model.space().is_symplectic(g))
        throw DomainError("weil_char_bruteforce: matrix does not preserve the form");
    return model.trace_standard(model.space().to_standard(g));
}

// --- Closed-form character at semisimple elements -------------------------

namespace detail {

inline CycNumber weil_theta_rec(const FqField& F, const FqMatrix& gram,
                                const FqMatrix& g, long conductor) {
    long k = gram.rows();
    if (k == 0) return CycNumber::from_rational(conductor, 1);
    FqMatrix I = FqMatrix::identity(&F, k);
    auto fix = (g - I).kernel();

    if (fix.empty()) {
        // No nonzero fixed points: theta = sgn((-1)^{dim V0/2} det(g|V+) det(g-1|V0)).
        auto invs = invariant_subspaces(F, g);
        std::vector<FqVector> vplus;
        for (const auto& sub : invs)
            if (sub.size() > vplus.size() && totally_isotropic(gram, sub)) vplus = sub;
        auto perpb = perp_space(F, gram, vplus);
        auto comp = extend_basis(F, vplus, perpb, k);
        FqElement det_plus = F.one();
        if (!vplus.empty()) det_plus = action_in_basis(F, g, vplus).det();
        long m = long(comp.size());
        FqElement det0 = F.one();
        if (m > 0) {
            FqMatrix gq = quotient_action(F, g, vplus, comp);
            det0 = (gq - FqMatrix::identity(&F, m)).det();
        }
        if (m % 2 != 0) throw DomainError("weil_char_formula: odd reduced dimension");
        FqElement val = det_plus * det0;
        if (((m / 2) % 2) == 1) val = -val;
        return CycNumber::from_rational(conductor, F.sgn(val));
    }

    // Fixed line V+ = span(v).
    FqVector v = fix[0];
    std::vector<FqVector> vline{v};
    auto perpb = perp_space(F, gram, vline); // contains v
    long m = long(perpb.size());
    FqMatrix gp = action_in_basis(F, g, perpb);
    FqMatrix d = gp - FqMatrix::identity(&F, m);
    // Candidate complement of span(v) in perp: image of (g-1)|perp first,
    // then fixed vectors extending it.
    std::vector<FqVector> pool;
    for (long j = 0; j < m; ++j) {
        std::vector<FqElement> col;
        for (long i = 0; i < m; ++i) col.push_back(d.at(i, j));
        pool.push_back(combine(F, perpb, col));
    }
    for (const auto& coeffs : d.kernel()) pool.push_back(combine(F, perpb, coeffs));
    auto V0 = extend_basis(F, vline, pool, k);

    if (long(V0.size()) == k - 2) {
        // V+^perp = V+ (+) V0 with V0 invariant: recurse and attach the sum
        // over V0^perp / V+.
        FqMatrix gram0(&F, k - 2, k - 2);
        for (long i = 0; i < k - 2; ++i)
            for (long j = 0; j < k - 2; ++j) gram0.at(i, j) = form_eval(gram, V0[i], V0[j]);
        FqMatrix g0 = action_in_basis(F, g, V0);
        CycNumber rec = weil_theta_rec(F, gram0, g0, conductor);
        auto v0perp = perp_space(F, gram, V0); // dim 2, contains v
        auto ext = extend_basis(F, vline, v0perp, k);
        if (ext.size() != 1) throw DomainError("weil_char_formula: bad coset structure");
        const FqVector& u = ext[0];
        FqElement t = form_eval(gram, mat_apply(g, u), u);
        ZetaSum sum(conductor);
        long step = conductor / F.p();
        for (long c = 0; c < F.order(); ++c) {
            FqElement a = F.from_code(c);
            sum.add(F.absolute_trace(a * a * t) * step);
        }
        return rec * sum.to_cyc();
    }

    // No invariant complement (cannot occur for semisimple g): recurse on the
    // quotient V+^perp / V+.
    auto comp = extend_basis(F, vline, perpb, k);
    long c = long(comp.size());
    FqMatrix gramq(&F, c, c);
    for (long i = 0; i < c; ++i)
        for (long j = 0; j < c; ++j) gramq.at(i, j) = form_eval(gram, comp[i], comp[j]);
    FqMatrix gq = quotient_action(F, g, vline, comp);
    return weil_theta_rec(F, gramq, gq, conductor);
}

} // namespace detail

inline CycNumber weil_char_formula(const SymplecticSpace& sp, const FqMatrix& g,
                                   long conductor) {
    if (!sp.is_symplectic(g))
        throw DomainError("weil_char_formula: matrix does not preserve the form");
    if (!is_semisimple(g))
        throw DomainError("weil_char_formula: element is not semisimple");
    return detail::weil_theta_rec(*sp.F, sp.gram, g, conductor);
}

// --- Root-orbit epsilon data ----------------------------------------------

enum class XiClass {
    Trivial,   // alpha(gamma_0) = 1: contributes to the fixed block only
    SymmMinus1, // symmetric orbit, alpha(gamma_0) = -1
    SymmOther,  // symmetric orbit, alpha(gamma_0) != +-1
    NonSymm     // asymmetric orbit pair, alpha(gamma_0) != 1
};

struct XiOrbit {
    XiClass cls;
    const FqField* residue_field = nullptr; // f_alpha
    long f_deg = 0;                         // residual degree of F_alpha / F
    std::optional<FqElement> eigenvalue;    // alpha(gamma_0) in f_alpha
};

struct XiData {
    const FqField* base = nullptr; // residue field f of the base
    std::vector<XiOrbit> orbits;
    long fixed_dim = 0; // dim_{F_p} of the gamma-fixed block
};

inline void xi_validate(const XiData& xi) {
    if (!xi.base) throw DomainError("XiData: missing base field");
    for (const auto& orb : xi.orbits) {
        switch (orb.cls) {
            case XiClass::Trivial:
                break;
            case XiClass::SymmMinus1: {
                if (!orb.eigenvalue || *orb.eigenvalue != -orb.residue_field->one())
                    throw DomainError("XiData: symm,-1 orbit needs eigenvalue -1");
                if (orb.f_deg % 2 != 0)
                    throw DomainError("XiData: symmetric orbit needs even residual degree");
                break;
            }
            case XiClass::SymmOther: {
                if (!orb.eigenvalue) throw DomainError("XiData: missing eigenvalue");
                const FqField& E = *orb.residue_field;
                if (orb.eigenvalue->is_zero() || *orb.eigenvalue == E.one() ||
                    *orb.eigenvalue == -E.one())
                    throw DomainError("XiData: symm orbit eigenvalue must avoid {0, +-1}");
                if (orb.f_deg % 2 != 0)
                    throw DomainError("XiData: symmetric orbit needs even residual degree");
                break;
            }
            case XiClass::NonSymm: {
                if (!orb.eigenvalue || *orb.eigenvalue == orb.residue_field->one())
                    throw DomainError("XiData: asymmetric orbit eigenvalue must differ from 1");
                break;
            }
        }
    }
}

inline int epsilon_sign(const XiData& xi) {
    xi_validate(xi);
    int eps = 1;
    int sgn_minus1 = xi.base->sgn(-xi.base->one());
    for (const auto& orb : xi.orbits) {
        switch (orb.cls) {
            case XiClass::Trivial:
                break;
            case XiClass::SymmMinus1:
                if ((orb.f_deg / 2) % 2 == 1) eps *= sgn_minus1;
                break;
            case XiClass::SymmOther: {
                if ((orb.f_deg / 2) % 2 == 1) eps *= sgn_minus1;
                const FqField& E = *orb.residue_field;
                eps *= E.sgn(E.one() - *orb.eigenvalue);
                break;
            }
            case XiClass::NonSymm:
                eps *= orb.residue_field->sgn(*orb.eigenvalue);
                break;
        }
    }
    return eps;
}

inline QPowerSqrt epsilon_cardinality(const XiData& xi, long conductor) {
    xi_validate(xi);
    return QPowerSqrt(xi.base->p(), xi.fixed_dim,
                      CycNumber::from_rational(conductor, 1));
}

// Concrete symplectic realization over F_p of the gamma-module described by
// XiData: each orbit contributes a block with gamma acting by its eigenvalue,
// plus a pointwise-fixed block of the stated dimension.  Used to compare
// epsilon against the model trace.
struct XiRealization {
    FqMatrix gram;
    FqMatrix g;
};

inline XiRealization xi_realize(const XiData& xi) {
    xi_validate(xi);
    const FqField& Fp = GF(xi.base->p(), 1);
    long p = Fp.p();

    std::vector<FqMatrix> grams, gs;
    auto field_block = [&](const FqField& E, const FqElement& lambda, bool hermitian) {
        long f = E.degree();
        // F_p-basis: power basis of E.
        std::vector<FqElement> basis;
        FqElement pw = E.one();
        for (long i = 0; i < f; ++i) {
            basis.push_back(pw);
            pw = pw * E.x_class();
        }
        if (hermitian) {
            // B(t1, t2) = Tr_{E/F_p}(c t1 sigma(t2)), sigma the order-2 power
            // of Frobenius, sigma(c) = -c.
            long half = f / 2;
            FqElement c = E.zero();
            for (long code = 1; code < E.order(); ++code) {
                FqElement t = E.from_code(code);
                FqElement cand = t - t.frobenius(half);
                if (!cand.is_zero()) {
                    c = cand;
                    break;
                }
            }
            if (c.is_zero()) throw DomainError("xi_realize: no antisymmetric scalar");
            if (!(lambda * lambda.frobenius(half) == E.one()))
                throw DomainError("xi_realize: eigenvalue must have norm 1 over the fixed field");
            FqMatrix G(&Fp, f, f), M(&Fp, f, f);
            for (long i = 0; i < f; ++i)
                for (long j = 0; j < f; ++j)
                    G.at(i, j) = Fp.from_prime(
                        E.absolute_trace(c * basis[i] * basis[j].frobenius(half)));
            for (long j = 0; j < f; ++j) {
                FqElement im = lambda * basis[j];
                for (long i = 0; i < f; ++i) M.at(i, j) = Fp.from_prime(im.coeffs()[i]);
            }
            grams.push_back(G);
            gs.push_back(M);
        } else {
            // Hyperbolic pair E (+) E with B((s1,t1),(s2,t2)) = Tr(s1 t2 - s2 t1)
            // and gamma = (lambda, lambda^{-1}).
            FqMatrix G(&Fp, 2 * f, 2 * f), M(&Fp, 2 * f, 2 * f);
            for (long i = 0; i < f; ++i)
                for (long j = 0; j < f; ++j) {
                    long t = E.absolute_trace(basis[i] * basis[j]);
                    G.at(i, f + j) = Fp.from_prime(t);
                    G.at(f + i, j) = Fp.from_prime(-t);
                }
            FqElement linv = lambda.inverse();
            for (long j = 0; j < f; ++j) {
                FqElement im = lambda * basis[j];
                FqElement im2 = linv * basis[j];
                for (long i = 0; i < f; ++i) {
                    M.at(i, j) = Fp.from_prime(im.coeffs()[i]);
                    M.at(f + i, f + j) = Fp.from_prime(im2.coeffs()[i]);
                }
            }
            grams.push_back(G);
            gs.push_back(M);
        }
    };

    for (const auto& orb : xi.orbits) {
        switch (orb.cls) {
            case XiClass::Trivial:
                break;
            case XiClass::SymmMinus1:
            case XiClass::SymmOther:
                field_block(*orb.residue_field, *orb.eigenvalue, true);
                break;
            case XiClass::NonSymm:
                field_block(*orb.residue_field, *orb.eigenvalue, false);
                break;
        }
    }
    if (xi.fixed_dim % 2 != 0)
        throw DomainError("xi_realize: fixed block dimension must be even");
    if (xi.fixed_dim > 0) {
        grams.push_back(SymplecticSpace::standard_J(Fp, xi.fixed_dim / 2));
        gs.push_back(FqMatrix::identity(&Fp, xi.fixed_dim));
    }

    long total = 0;
    for (const auto& G : grams) total += G.rows();
    FqMatrix gram(&Fp, total, total), g = FqMatrix::identity(&Fp, total);
    long off = 0;
    for (size_t b = 0; b < grams.size(); ++b) {
        long s = grams[b].rows();
        for (long i = 0; i < s; ++i)
            for (long j = 0; j < s; ++j) {
                gram.at(off + i, off + j) = grams[b].at(i, j);
                g.at(off + i, off + j) = gs[b].at(i, j);
            }
        off += s;
    }
    (void)p;
    return XiRealization{gram, g};
}

// Random element of Sp(2n, F_q) as a product of random generators.
inline FqMatrix random_symplectic(const FqField& F, long n, std::mt19937_64& rng,
                                  long word_len = 6) {
    FqMatrix g = FqMatrix::identity(&F, 2 * n);
    for (long w = 0; w < word_len; ++w) {
        switch (rng() % 3) {
            case 0: {
                FqMatrix A(&F, n, n);
                do {
                    for (long i = 0; i < n; ++i)
                        for (long j = 0; j < n; ++j)
                            A.at(i, j) = F.from_code(long(rng() % F.order()));
                } while (A.det().is_zero());
                g = g * detail::group_matrix(F, n, {SpGenerator::Levi, A});
                break;
            }
            case 1: {
                FqMatrix T(&F, n, n);
                for (long i = 0; i < n; ++i)
                    for (long j = i; j < n; ++j) {
                        FqElement t = F.from_code(long(rng() % F.order()));
                        T.at(i, j) = t;
                        T.at(j, i) = t;
                    }
                g = g * detail::group_matrix(F, n, {SpGenerator::Unipotent, T});
                break;
            }
            default:
                g = g * SymplecticSpace::standard_J(F, n);
        }
    }
    return g;
}

} // namespace charcalc
