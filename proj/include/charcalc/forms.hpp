#pragma once

// Bilinear, symplectic and (eps, tau)-Hermitian forms over finite fields:
// Gram data, determinant square class, constructive Witt decomposition and
// the closed-form Witt index, and the trace-form determinant of a field
// extension with involution.

#include <optional>
#include <vector>

#include "errors.hpp"
#include "ffield.hpp"

namespace charcalc {

using FqVector = std::vector<FqElement>;

// A form B(v, w) = v^T G tau(w): linear in the first slot, tau-semilinear in
// the second, with eps * B(v, w) = tau(B(w, v)).  tau = Frobenius^tau_k must
// be an involution.
class SesquiForm {
  public:
    SesquiForm(const FqField* field, FqMatrix gram, long tau_k, int eps)
        : field_(field), gram_(std::move(gram)), tau_k_(tau_k), eps_(eps) {
        long n = field->degree();
        if (((2 * tau_k) % n + n) % n != 0)
            throw DomainError("SesquiForm: tau is not an involution");
        if (eps != 1 && eps != -1) throw DomainError("SesquiForm: eps must be +-1");
        if (gram_.rows() != gram_.cols()) throw DomainError("SesquiForm: Gram not square");
        for (long i = 0; i < gram_.rows(); ++i)
            for (long j = 0; j < gram_.cols(); ++j) {
                FqElement lhs = gram_.at(i, j) * field->from_prime(eps);
                if (lhs != tau(gram_.at(j, i)))
                    throw DomainError("SesquiForm: Gram violates the Hermitian condition");
            }
    }

    const FqField& field() const { return *field_; }
    long dim() const { return gram_.rows(); }
    long tau_k() const { return tau_k_; }
    int eps() const { return eps_; }
    const FqMatrix& gram() const { return gram_; }

    FqElement tau(const FqElement& t) const { return t.frobenius(tau_k_); }

    FqElement eval(const FqVector& v, const FqVector& w) const {
        FqElement acc = field_->zero();
        for (long i = 0; i < dim(); ++i) {
            if (v[i].is_zero()) continue;
            for (long j = 0; j < dim(); ++j)
                acc = acc + v[i] * gram_.at(i, j) * tau(w[j]);
        }
        return acc;
    }

    FqElement quad(const FqVector& v) const { return eval(v, v); }

    bool non_degenerate() const { return !gram_.det().is_zero(); }

    // Determinant square class, computed in the tau-fixed subfield.
    int det_square_class() const {
        FqElement d = gram_.det();
        if (d.is_zero()) throw DomainError("det_square_class: degenerate form");
        if (tau_k_ == 0) return field_->sgn(d);
        long fixed_deg = field_->degree() / 2;
        return field_->sgn_in_subfield(d, fixed_deg);
    }

  private:
    const FqField* field_;
    FqMatrix gram_;
    long tau_k_;
    int eps_;
};

struct WittDecomposition {
    std::vector<FqVector> v_plus;  // totally isotropic
    std::vector<FqVector> v_minus; // dual isotropic vectors, paired with v_plus
    std::vector<FqVector> v_0;     // anisotropic complement
    long witt_index = 0;
};

namespace detail {

// Enumerate vectors sum c_i basis_i over all coefficient tuples.
template <typename Fn>
void enumerate_span(const FqField& F, const std::vector<FqVector>& basis, Fn&& fn) {
    long k = long(basis.size());
    if (k == 0) return;
    long total = 1;
    for (long i = 0; i < k; ++i) {
        if (total > 5'000'000 / F.order())
            throw DomainError("witt_decompose: subspace beyond desk scale");
        total *= F.order();
    }
    long d = long(basis[0].size());
    for (long code = 1; code < total; ++code) { // skip zero vector
        FqVector v(d, F.zero());
        long rem = code;
        for (long i = 0; i < k; ++i) {
            long ci = rem % F.order();
            rem /= F.order();
            if (ci == 0) continue;
            FqElement c = F.from_code(ci);
            for (long j = 0; j < d; ++j) v[j] = v[j] + c * basis[i][j];
        }
        if (!fn(v)) return;
    }
}

} // namespace detail

// Constructive Witt decomposition by exhaustive isotropic-vector search:
// find v != 0 with Q(v) = B(v,v) = 0, complete to a hyperbolic pair, split
// off its orthogonal complement, recurse.
inline WittDecomposition witt_decompose(const SesquiForm& B) {
    if (!B.non_degenerate()) throw DomainError("witt_decompose: degenerate form");
    const FqField& F = B.field();
    long d = B.dim();

    WittDecomposition out;
    std::vector<FqVector> basis;
    for (long i = 0; i < d; ++i) {
        FqVector e(d, F.zero());
        e[i] = F.one();
        basis.push_back(e);
    }

    while (!basis.empty()) {
        std::optional<FqVector> iso;
        detail::enumerate_span(F, basis, [&](const FqVector& v) {
            if (B.quad(v).is_zero()) {
                iso = v;
                return false;
            }
            return true;
        });
        if (!iso) break; // anisotropic kernel: no nonzero isotropic vector remains

        const FqVector& v = *iso;
        // Partner with B(w, v) != 0; exists because the restriction of B to
        // the running complement stays non-degenerate.
        std::optional<FqVector> partner;
        detail::enumerate_span(F, basis, [&](const FqVector& w) {
            if (!B.eval(w, v).is_zero()) {
                partner = w;
                return false;
            }
            return true;
        });
        if (!partner) throw DomainError("witt_decompose: degenerate restriction");
        FqVector w = *partner;
        // Normalize B(w, v) = 1.
        FqElement c = B.eval(w, v).inverse();
        for (auto& x : w) x = x * c;
        // Make w isotropic: solve tau(l) + eps*l = B(w, w), replace w <- w - l v.
        FqElement b = B.quad(w);
        std::optional<FqElement> lambda;
        for (long code = 0; code < F.order(); ++code) {
            FqElement l = F.from_code(code);
            if (B.tau(l) + l * F.from_prime(B.eps()) == b) {
                lambda = l;
                break;
            }
        }
        if (!lambda) throw DomainError("witt_decompose: hyperbolic completion failed");
        for (long j = 0; j < d; ++j) w[j] = w[j] - *lambda * v[j];

        out.v_plus.push_back(v);
        out.v_minus.push_back(w);

        // Orthogonal complement of span(v, w) inside the running subspace:
        // solve B(u, v) = B(u, w) = 0 for u in terms of the basis coefficients.
        long k = long(basis.size());
        FqMatrix sys(&F, 2, k);
        for (long i = 0; i < k; ++i) {
            sys.at(0, i) = B.eval(basis[i], v);
            sys.at(1, i) = B.eval(basis[i], w);
        }
        std::vector<FqVector> next;
        for (const auto& coeffs : sys.kernel()) {
            FqVector u(d, F.zero());
            for (long i = 0; i < k; ++i)
                for (long j = 0; j < d; ++j) u[j] = u[j] + coeffs[i] * basis[i][j];
            next.push_back(u);
        }
        basis = std::move(next);
    }

    out.v_0 = basis;
    out.witt_index = long(out.v_plus.size());
    return out;
}

// Direct re-evaluation of B on a returned decomposition: hyperbolic pairs
// pair correctly, all stated isotropy holds, and the anisotropic kernel is
// orthogonal to the pairs and contains no nonzero isotropic vector.
inline bool witt_verify(const SesquiForm& B, const WittDecomposition& wd) {
    const FqField& F = B.field();
    long k = wd.witt_index;
    if (long(wd.v_plus.size()) != k || long(wd.v_minus.size()) != k) return false;
    for (long i = 0; i < k; ++i) {
        if (!B.quad(wd.v_plus[i]).is_zero()) return false;
        if (!B.quad(wd.v_minus[i]).is_zero()) return false;
        for (long j = 0; j < k; ++j) {
            FqElement pair = B.eval(wd.v_minus[i], wd.v_plus[j]);
            if (i == j && pair != F.one()) return false;
            if (i != j && !pair.is_zero()) return false;
        }
    }
    for (const auto& u : wd.v_0) {
        for (long i = 0; i < k; ++i) {
            if (!B.eval(u, wd.v_plus[i]).is_zero()) return false;
            if (!B.eval(u, wd.v_minus[i]).is_zero()) return false;
        }
    }
    if (!wd.v_0.empty()) {
        bool bad = false;
        detail::enumerate_span(F, wd.v_0, [&](const FqVector& v) {
            if (B.quad(v).is_zero()) {
                bad = true;
                return false;
            }
            return true;
        });
        if (bad) return false;
    }
    // Dimension bookkeeping: the pieces must span.
    long d = B.dim();
    FqMatrix all(&F, 2 * k + long(wd.v_0.size()), d);
    long row = 0;
    for (const auto& v : wd.v_plus) {
        for (long j = 0; j < d; ++j) all.at(row, j) = v[j];
        ++row;
    }
    for (const auto& v : wd.v_minus) {
        for (long j = 0; j < d; ++j) all.at(row, j) = v[j];
        ++row;
    }
    for (const auto& v : wd.v_0) {
        for (long j = 0; j < d; ++j) all.at(row, j) = v[j];
        ++row;
    }
    return all.rows() == d && all.rank() == d;
}

// Closed-form Witt index: floor(dim/2) except for even-dimensional symmetric
// bilinear forms whose determinant class differs from that of (-1)^{dim/2},
// where it drops to dim/2 - 1.
inline long witt_index_formula(const SesquiForm& B) {
    if (!B.non_degenerate()) throw DomainError("witt_index_formula: degenerate form");
    long d = B.dim();
    if (d % 2 == 0 && B.tau_k() == 0 && B.eps() == 1) {
        const FqField& F = B.field();
        FqElement target = F.one();
        if ((d / 2) % 2 == 1) target = -target;
        if (B.det_square_class() != F.sgn(target)) return d / 2 - 1;
    }
    return d / 2;
}

// Determinant square class of the trace form (t1, t2) -> Tr_{E/F}(t1 tau(t2))
// on E = GF(p^{m*n}) over F = GF(p^m), where tau is 1 or the half-Frobenius
// of E/F (n even).  Returns the closed form (-sgn_F(sgn_{Gal(E/F)}(tau)))^{n+1}
// after asserting that it matches the brute-force Gram determinant class.
inline int trace_form_det(long n, bool tau_half, const FqField& F) {
    long p = F.p(), m = F.degree();
    if (tau_half && n % 2 != 0) throw DomainError("trace_form_det: tau^2 != 1");
    const FqField& E = GF(p, m * n);

    // Closed form.  The sign character of the cyclic group Gal(E/F) takes the
    // value (-1)^{n/2} on the half-power of Frobenius.
    int sgn_gal = 1;
    if (tau_half) sgn_gal = ((n / 2) % 2 == 0) ? +1 : -1;
    FqElement sg = F.from_prime(sgn_gal);
    int closed = 1;
    int base = -F.sgn(sg);
    for (long i = 0; i < n + 1; ++i) closed *= base;

    // Brute force: Gram matrix in the power basis of a field generator.
    long tau_k = tau_half ? (m * n) / 2 : 0;
    FqElement g = E.generator();
    std::vector<FqElement> basis;
    FqElement pw = E.one();
    for (long i = 0; i < n; ++i) {
        basis.push_back(pw);
        pw = pw * g;
    }
    FqMatrix gram(&E, n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            gram.at(i, j) = E.rel_trace(basis[i] * basis[j].frobenius(tau_k), m);
    FqElement det = gram.det();
    int brute = E.sgn_in_subfield(det, m);
    if (brute != closed)
        throw DomainError("trace_form_det: closed form disagrees with Gram determinant");
    return closed;
}

} // namespace charcalc
