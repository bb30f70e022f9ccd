#pragma once
// Assembly of full character formulas from a cuspidal inducing datum: a tame
// elliptic torus, a chain of twisted Levi subgroups given by successively
// coarser block partitions of the torus embeddings, generic dual elements at
// each depth, and character tables for the shallow layers.  The per-level
// constants (congruence-lattice indices, group Gauss sums, quadratic-space
// signs) come from the rootsets/weil modules; here they are combined per
// truncation class of a given group element and emitted as a structured
// formula with one orbital-integral leaf per chain level.

#include "rootsets.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace charcalc {

// ---------------------------------------------------------------------------
// Inducing datum.

struct CuspidalDatum {
    const TameTorus* torus = nullptr;
    // Levi chain as embedding partitions: blocks[0] is the torus (all labels
    // distinct), blocks[d] the full group (all labels equal), and each level
    // refines the next.
    std::vector<std::vector<int>> blocks;
    // Depths 0 < r_0 < ... < r_{d-1} <= r_d.
    std::vector<Rat> depths;
    // Dual elements, one torus-factor value per level 0..d-1, of valuation
    // exactly -r_i, constant on level-i blocks and separating level-(i+1)
    // blocks at exactly that valuation.
    std::vector<std::vector<TameElement>> xstar;
    std::string rho0_label; // depth-zero datum tag
    // Character tables for the shallow layers, levels 0..d (may be empty;
    // the identity truncation always evaluates to 1).
    std::vector<std::map<std::string, CycNumber>> phi_tables;
    long conductor = 4;

    long d() const { return long(depths.size()) - 1; }
    long n() const { return torus->n(); }
};

namespace detail {

// Partition labels -> list-of-blocks form (for spec subgroup arguments).
inline std::vector<std::vector<int>> blocks_as_lists(const std::vector<int>& labels) {
    std::map<int, std::vector<int>> m;
    for (size_t i = 0; i < labels.size(); ++i) m[labels[i]].push_back(int(i));
    std::vector<std::vector<int>> out;
    for (auto& [k, v] : m) out.push_back(std::move(v));
    return out;
}

inline bool coarsens(const std::vector<int>& fine, const std::vector<int>& coarse) {
    for (size_t i = 0; i < fine.size(); ++i)
        for (size_t j = 0; j < fine.size(); ++j)
            if (fine[i] == fine[j] && coarse[i] != coarse[j]) return false;
    return true;
}

} // namespace detail

inline void datum_validate(const CuspidalDatum& datum) {
    if (!datum.torus) throw DomainError("datum: no torus");
    long n = datum.n();
    long d = datum.d();
    if (d < 1) throw DomainError("datum: need at least one chain level");
    if (long(datum.blocks.size()) != d + 1)
        throw DomainError("datum: blocks must cover levels 0..d");
    if (long(datum.xstar.size()) != d) throw DomainError("datum: one dual element per level 0..d-1");
    for (const auto& b : datum.blocks)
        if (long(b.size()) != n) throw DomainError("datum: block labels per embedding");
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b)
            if (a != b && datum.blocks[0][a] == datum.blocks[0][b])
                throw DomainError("datum: level-0 group must be the torus");
    for (long a = 0; a < n; ++a)
        if (datum.blocks[d][a] != datum.blocks[d][0])
            throw DomainError("datum: level-d group must be the full group");
    for (long i = 0; i < d; ++i)
        if (!detail::coarsens(datum.blocks[i], datum.blocks[i + 1]))
            throw DomainError("datum: chain partitions must coarsen");
    if (!(datum.depths[0] > 0)) throw DomainError("datum: depths must be positive");
    for (long i = 0; i + 1 < d; ++i)
        if (!(datum.depths[i] < datum.depths[i + 1]))
            throw DomainError("datum: depths must increase strictly");
    if (!(datum.depths[d - 1] <= datum.depths[d]))
        throw DomainError("datum: final depth below the last chain depth");

    // Dual-element genericity.
    const TameTorus& T = *datum.torus;
    for (long i = 0; i < d; ++i) {
        if (datum.xstar[i].size() != T.factors.size())
            throw DomainError("datum: one dual value per torus factor");
        long prec = 0;
        for (const auto& v : datum.xstar[i]) prec = std::max(prec, v.prec());
        std::vector<TameElement> xs = torus_embed(T, datum.xstar[i], prec + 8 * T.e_split);
        for (long a = 0; a < n; ++a)
            for (long b = a + 1; b < n; ++b) {
                TameElement diff = xs[a] - xs[b];
                if (datum.blocks[i][a] == datum.blocks[i][b]) {
                    if (!diff.is_zero())
                        throw DomainError("datum: dual element is not central in its level");
                } else if (datum.blocks[i + 1][a] == datum.blocks[i + 1][b]) {
                    auto v = diff.ord();
                    if (!v || *v != -datum.depths[i])
                        throw DomainError("datum: dual element is not generic at its depth");
                }
            }
    }
    if (long(datum.phi_tables.size()) > d + 1)
        throw DomainError("datum: too many character tables");
}

// ---------------------------------------------------------------------------
// Graded line bookkeeping: every filtration subgroup in play is described by
// lines (torus factors and root orbits) with a jump set offset + (1/e)Z and a
// fixed rational graded dimension per jump.

struct GradedLine {
    Rat offset;
    long e = 1;
    long dim = 1;
};

struct GradedSpec {
    long p = 0;
    std::vector<std::pair<GradedLine, DepthVal>> parts; // line + depth floor
};

// Number of jump levels of the line inside [lo, hi) (half-open respecting the
// just-above flags: a plus on lo excludes the endpoint, a plus on hi includes
// it).
inline long count_jump_levels(const GradedLine& line, const DepthVal& lo, const DepthVal& hi) {
    Rat L = (lo.r - line.offset) * line.e;
    long k0 = rat_ceil(L);
    if (lo.plus && make_rat(k0) == L) ++k0;
    long k1;
    if (hi.plus) {
        k1 = rat_floor((hi.r - line.offset) * line.e); // k <= U
    } else {
        k1 = rat_ceil((hi.r - line.offset) * line.e) - 1; // k < U
    }
    return std::max(0L, k1 - k0 + 1);
}

// log_p of the order of the spec group modulo the congruence subgroup at the
// given depth.
inline long graded_order_exponent(const GradedSpec& spec, const DepthVal& modulus) {
    long e = 0;
    for (const auto& [line, floor] : spec.parts) e += line.dim * count_jump_levels(line, floor, modulus);
    return e;
}

inline long graded_index_exponent(const GradedSpec& num, const GradedSpec& den,
                                  const DepthVal& modulus) {
    long e = graded_order_exponent(num, modulus) - graded_order_exponent(den, modulus);
    if (e < 0) throw DomainError("graded_index_exponent: denominator group not contained");
    return e;
}

// ---------------------------------------------------------------------------
// Lines of a Levi window.

struct OrbitLine {
    int a = 0, b = 0; // representative direction
    Rat offset;       // x_b - x_a
    long e_alpha = 1;
    long dim = 1; // rational graded dimension per jump level
    bool symmetric = false;
    std::optional<Rat> threshold; // ord(alpha(gamma) - 1); empty: central
};

// One line per +-orbit of directions inside the outer partition but outside
// the inner one; thresholds are filled when eigenvalues are supplied.
inline std::vector<OrbitLine> window_orbit_lines(const TameTorus& T,
                                                 const std::vector<int>& inner,
                                                 const std::vector<int>& outer,
                                                 const std::vector<TameElement>* eig = nullptr) {
    long n = T.n();
    std::vector<Rat> x = torus_point(T);
    std::vector<OrbitLine> out;
    std::set<std::pair<int, int>> seen;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b || seen.count({a, b})) continue;
            detail::OrbitGeometry geom = detail::orbit_geometry(T, a, b);
            for (const auto& pr : geom.orbit) seen.insert(pr);
            if (inner[a] == inner[b] || outer[a] != outer[b]) continue;
            OrbitLine line;
            line.a = a;
            line.b = b;
            line.offset = x[b] - x[a];
            line.e_alpha = geom.e_alpha;
            line.symmetric = geom.symmetric;
            line.dim = geom.symmetric ? geom.f_alpha : 2 * geom.f_alpha;
            if (eig) {
                TameElement rho = (*eig)[a] / (*eig)[b];
                TameElement delta = rho - TameElement::one(*T.split, rho.prec());
                if (!delta.is_zero()) line.threshold = *delta.ord();
            }
            out.push_back(line);
        }
    return out;
}

inline std::vector<GradedLine> torus_lines(const TameTorus& T) {
    std::vector<GradedLine> out;
    for (const auto& fac : T.factors) out.push_back({make_rat(0), fac.e, fac.f});
    return out;
}

// ---------------------------------------------------------------------------
// Filtration subgroups of the chain (one entry per level 1..d).

struct YuLevel {
    Rat r, s;          // depth pair of the previous level
    GradedSpec J;      // (G^{i-1}, G^i) at (r, s)
    GradedSpec J_plus; // (G^{i-1}, G^i) at (r+, s+)
    GradedSpec K_plus; // pro-unipotent radical of the compact inducing group
};

inline std::vector<YuLevel> yu_subgroup_specs(const CuspidalDatum& datum) {
    const TameTorus& T = *datum.torus;
    long d = datum.d();
    std::vector<int> distinct(datum.n());
    for (size_t i = 0; i < distinct.size(); ++i) distinct[i] = int(i);

    // K_plus floor for a window first contained at level j: s_{j-1}.
    std::vector<std::pair<GradedLine, DepthVal>> kp;
    for (const auto& tl : torus_lines(T)) kp.push_back({tl, DepthVal(make_rat(0), true)});
    for (long j = 1; j <= d; ++j)
        for (const auto& ol : window_orbit_lines(T, datum.blocks[j - 1], datum.blocks[j]))
            kp.push_back({{ol.offset, ol.e_alpha, ol.dim}, DepthVal(datum.depths[j - 1] / 2, false)});

    std::vector<YuLevel> out;
    for (long i = 1; i <= d; ++i) {
        Rat r = datum.depths[i - 1];
        Rat s = r / 2;
        YuLevel lev{r, s, {T.p, {}}, {T.p, {}}, {T.p, kp}};
        auto add = [&](GradedSpec& spec, const GradedLine& line, const DepthVal& fl) {
            spec.parts.push_back({line, fl});
        };
        for (const auto& tl : torus_lines(T)) {
            add(lev.J, tl, DepthVal(r, false));
            add(lev.J_plus, tl, DepthVal(r, true));
        }
        for (const auto& ol : window_orbit_lines(T, distinct, datum.blocks[i - 1])) {
            GradedLine line{ol.offset, ol.e_alpha, ol.dim};
            add(lev.J, line, DepthVal(r, false));
            add(lev.J_plus, line, DepthVal(r, true));
        }
        for (const auto& ol : window_orbit_lines(T, datum.blocks[i - 1], datum.blocks[i])) {
            GradedLine line{ol.offset, ol.e_alpha, ol.dim};
            add(lev.J, line, DepthVal(s, false));
            add(lev.J_plus, line, DepthVal(s, true));
        }
        out.push_back(std::move(lev));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Truncation classes of a torus element.

struct TruncationClass {
    std::vector<TameElement> eig;   // per embedding, splitting tower
    std::vector<TameElement> heads; // truncation at the deepest chain depth
    std::string key;                // canonical head key (class ordering)
    std::string label;              // producing twist
};

// Digits of depth < bound (<= when bound carries the just-above flag).
inline TameElement tame_truncate(const TameElement& a, const DepthVal& bound) {
    const TameTower& tw = a.tower();
    std::map<long, FqElement> keep;
    for (const auto& [k, dgt] : a.teich_digits(a.prec())) {
        Rat dep = make_rat(k, tw.e());
        if (dep < bound.r || (bound.plus && dep == bound.r)) keep[k] = dgt;
    }
    return TameElement::from_digits(tw, keep, a.prec());
}

inline std::string tuple_key(const std::vector<TameElement>& tup) {
    std::string out;
    for (const auto& t : tup) {
        if (!out.empty()) out += "|";
        out += t.is_zero() ? "0" : t.digit_key();
    }
    return out;
}

// Rational-conjugacy truncation classes of the torus element with the given
// factor values: all Galois-equivariant eigenvalue tuples with the same
// conjugate multiset (factor by factor), identified when the truncations at
// the deepest chain depth agree.  Every such tuple is a permutation of the
// base one, so all of them represent conjugate elements of the ambient
// group.  A datum over a different torus supports no classes at all.
inline std::vector<TruncationClass> enumerate_classes(const CuspidalDatum& datum,
                                                      const std::vector<TameElement>& gamma,
                                                      long prec) {
    const TameTorus& T = *datum.torus;
    if (gamma.size() != T.factors.size()) return {};
    for (size_t k = 0; k < gamma.size(); ++k)
        if (&gamma[k].tower() != T.factors[k].tower) return {};
    for (const auto& v : gamma) {
        auto o = v.ord();
        if (!o || *o != 0) throw DomainError("enumerate_classes: element is not compact");
    }
    long n = T.n();
    long nf = long(T.factors.size());
    Rat deep = datum.depths[datum.d() - 1];
    std::vector<TameElement> base = torus_embed(T, gamma, prec);
    std::vector<GaloisElt> G = galois_group(T);

    // Per factor: the equivariant assignments of conjugates to its slots,
    // determined by the value at the first slot (which any point stabilizer
    // must fix).
    std::vector<std::vector<std::vector<std::pair<int, TameElement>>>> options(nf);
    for (long k = 0; k < nf; ++k) {
        std::vector<int> slots;
        for (long nu = 0; nu < n; ++nu)
            if (T.embeddings[nu].factor == k) slots.push_back(int(nu));
        int nu0 = slots.front();
        std::vector<GaloisElt> stab;
        std::map<int, GaloisElt> reach;
        for (const auto& g : G) {
            int im = galois_on_emb(T, g, nu0);
            reach.emplace(im, g);
            if (im == nu0) stab.push_back(g);
        }
        std::set<std::string> seen;
        for (const auto& g : G) {
            TameElement w = galois_apply(T, g, base[nu0]);
            bool ok = true;
            for (const auto& h : stab)
                if (!(galois_apply(T, h, w) == w)) ok = false;
            if (!ok) continue;
            std::vector<std::pair<int, TameElement>> assign;
            std::string key;
            for (int nu : slots) {
                TameElement val = galois_apply(T, reach.at(nu), w);
                key += val.digit_key() + "|";
                assign.push_back({nu, std::move(val)});
            }
            if (seen.insert(key).second) options[k].push_back(std::move(assign));
        }
    }

    std::map<std::string, TruncationClass> classes;
    std::vector<size_t> pick(nf, 0);
    while (true) {
        TruncationClass cls;
        cls.eig.assign(n, TameElement());
        std::ostringstream lbl;
        lbl << "twist[";
        for (long k = 0; k < nf; ++k) {
            for (const auto& [nu, val] : options[k][pick[k]]) cls.eig[nu] = val;
            lbl << (k ? ";" : "") << pick[k];
        }
        lbl << "]";
        for (long nu = 0; nu < n; ++nu)
            cls.heads.push_back(tame_truncate(cls.eig[nu], DepthVal(deep, false)));
        cls.key = tuple_key(cls.heads);
        cls.label = lbl.str();
        classes.emplace(cls.key, std::move(cls));
        long k = 0;
        while (k < nf && ++pick[k] == options[k].size()) pick[k++] = 0;
        if (k == nf) break;
    }
    std::vector<TruncationClass> out;
    for (auto& [k, cls] : classes) out.push_back(std::move(cls));
    return out;
}

// ---------------------------------------------------------------------------
// Support test.

struct SupportResult {
    bool ok = true;
    std::string diagnostic;
};

inline SupportResult support_test(const CuspidalDatum& datum, const TruncationClass& cls) {
    const TameTorus& T = *datum.torus;
    long n = T.n();
    long d = datum.d();
    if (long(cls.eig.size()) != n)
        return {false, "eigenvalue tuple does not match the torus"};
    for (const auto& g : galois_group(T))
        for (long nu = 0; nu < n; ++nu)
            if (!(galois_apply(T, g, cls.eig[nu]) == cls.eig[galois_on_emb(T, g, int(nu))]))
                return {false, "eigenvalue tuple is not Galois-equivariant"};
    for (const auto& v : cls.eig) {
        auto o = v.ord();
        if (!o || *o != 0) return {false, "element is not compact"};
    }

    // Prescribed heads must leave a tail at least as deep as the last chain
    // depth.
    if (!cls.heads.empty()) {
        if (long(cls.heads.size()) != n) return {false, "head tuple does not match the torus"};
        Rat need = datum.depths[d - 1];
        for (long nu = 0; nu < n; ++nu) {
            TameElement tail =
                cls.eig[nu] / cls.heads[nu] - TameElement::one(*T.split, cls.eig[nu].prec());
            if (tail.is_zero()) {
                if (tail.prec_ord() < need)
                    throw IndeterminateAtPrecision(
                        "support_test: precision too low to certify the tail depth");
                continue;
            }
            if (*tail.ord() < need) return {false, "tail is too shallow for the deepest head"};
        }
    }
    return {true, ""};
}

// ---------------------------------------------------------------------------
// Per-level constants.

struct InductionFactor {
    QPowerSqrt index; // square root of the two-sided congruence index
    QPowerSqrt gauss; // group Gauss sum: fourth root of unity times p^{e/2}
    int epsilon = 1;  // quadratic-space sign
    RootClassification cls;
};

namespace detail {

// Bracket floor of a window orbit at depth r: (r - t)/2 for separation depth
// 0 <= t < r, base 0+ for directions that never separate below r.
inline DepthVal bracket_floor(const std::optional<Rat>& t, const Rat& r, bool plus) {
    if (!t || !(*t < r)) return DepthVal(make_rat(0), true);
    return DepthVal((r - *t) / 2, plus);
}

} // namespace detail

inline InductionFactor induction_factor(const CuspidalDatum& datum, const TruncationClass& cls,
                                        long level, bool reverse_reps = false) {
    const TameTorus& T = *datum.torus;
    if (level < 0 || level >= datum.d()) throw DomainError("induction_factor: level out of range");
    Rat r = datum.depths[level];
    Rat s = r / 2;
    std::vector<Rat> x = torus_point(T);

    RootClassification rc = classify_roots(T, cls.eig, x, datum.blocks[level], r, reverse_reps,
                                           &datum.blocks[level + 1]);
    long prec = cls.eig.front().prec();
    std::vector<TameElement> xs = torus_embed(T, datum.xstar[level], prec);
    CycNumber sign = gauss_sum_sign(T, rc.upsilon, xs, r, datum.conductor);
    int eps = epsilon_sign(rc.xi);

    long at_r = 0, at_r_plus = 0, card = 0;
    for (const auto& ol :
         window_orbit_lines(T, datum.blocks[level], datum.blocks[level + 1], &cls.eig)) {
        GradedLine line{ol.offset, ol.e_alpha, ol.dim};
        at_r += ol.dim * count_jump_levels(line, detail::bracket_floor(ol.threshold, r, false),
                                           DepthVal(s, false));
        at_r_plus += ol.dim * count_jump_levels(line, detail::bracket_floor(ol.threshold, r, true),
                                                DepthVal(s, true));
        if (ol.threshold && *ol.threshold > 0 && *ol.threshold < r)
            card += ol.dim * count_jump_levels(line, DepthVal(s, false), DepthVal(s, true));
    }
    InductionFactor out{
        QPowerSqrt(T.p, at_r + at_r_plus, CycNumber::from_rational(datum.conductor, 1)),
        QPowerSqrt(T.p, at_r + at_r_plus - card, sign), eps, std::move(rc)};
    return out;
}

// ---------------------------------------------------------------------------
// Character evaluation on shallow and deep layers.

namespace detail {

// Rational number congruent to the (Galois-invariant) element modulo p Z_p.
inline Rat tame_rational_part(const TameElement& t) {
    const TameTower& tw = t.tower();
    const FqField& R = tw.residue_field();
    long p = tw.p();
    Rat out(0);
    for (const auto& [k, dgt] : t.teich_digits(t.prec())) {
        if (k > 0) continue;
        if (k % tw.e() != 0) throw DomainError("character argument is not rational");
        long m = k / tw.e();
        long c = subfield_residue(R, dgt, 1).coeffs()[0];
        // Teichmuller lift of c modulo p^{1-m}: c^(p^-m).
        long need = 1 - m;
        Int pk;
        mpz_ui_pow_ui(pk.get_mpz_t(), (unsigned long)p, (unsigned long)need);
        Int pe;
        mpz_ui_pow_ui(pe.get_mpz_t(), (unsigned long)p, (unsigned long)(-m));
        Int lift;
        mpz_powm(lift.get_mpz_t(), Int(c).get_mpz_t(), pe.get_mpz_t(), pk.get_mpz_t());
        Rat pm(1);
        for (long j = 0; j < -m; ++j) pm /= p;
        out += Rat(lift) * pm;
    }
    return out;
}

} // namespace detail

// phi_i on a head truncated at r_i: table value on the layer of depth <= s_i
// times the dual pairing character on the deeper layer.  For the final level
// (i = d) the whole truncation is looked up.  A missing table entry is only
// tolerated for the identity truncation.
inline CycNumber phi_level_value(const CuspidalDatum& datum, long level,
                                 const std::vector<TameElement>& eig) {
    const TameTorus& T = *datum.torus;
    long d = datum.d();
    Rat r = datum.depths[level];
    long n = T.n();

    std::vector<TameElement> head, shallow;
    DepthVal shallow_bound =
        (level == d) ? DepthVal(r, true) : DepthVal(r / 2, true);
    for (long nu = 0; nu < n; ++nu) {
        head.push_back(tame_truncate(eig[nu], level == d ? DepthVal(r, true) : DepthVal(r, false)));
        shallow.push_back(tame_truncate(head.back(), shallow_bound));
    }

    CycNumber out = CycNumber::from_rational(datum.conductor, 1);
    std::string key = tuple_key(shallow);
    bool identity = true;
    TameElement one = TameElement::one(*T.split, eig.front().prec());
    for (const auto& sh : shallow)
        if (!(sh == one)) identity = false;
    const std::map<std::string, CycNumber>* table =
        (long(datum.phi_tables.size()) > level) ? &datum.phi_tables[level] : nullptr;
    if (table && table->count(key)) {
        out = table->at(key);
    } else if (!identity) {
        throw DomainError("phi_level_value: no table entry for a nontrivial shallow layer");
    }

    if (level < d) {
        long prec = eig.front().prec();
        std::vector<TameElement> xs = torus_embed(T, datum.xstar[level], prec);
        TameElement tr = TameElement::zero(*T.split, prec);
        for (long nu = 0; nu < n; ++nu) {
            TameElement dpart = head[nu] / shallow[nu] - one;
            tr = tr + xs[nu] * dpart;
        }
        out = out * detail::qp_character(detail::tame_rational_part(tr), T.p, datum.conductor);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assembled formula.

struct MuLeaf {
    std::string group;       // invariance group of the orbital-integral leaf
    std::string xstar_label; // which dual element the hat-measure sits at
    std::string argument;    // serialized digits of the tail, per embedding
    std::string haar;        // measure normalization annotation
    long components = 1;
    Rat prefactor = Rat(1);
};

struct ClassTerm {
    std::string label;
    std::string key;
    QPowerSqrt c;
    QPowerSqrt gauss;
    int epsilon = 1;
    CycNumber phi_heads;
    std::string theta0_label;
    std::vector<MuLeaf> leaves;
    ClassTerm(long base, long conductor)
        : c(QPowerSqrt::one(base, conductor)), gauss(QPowerSqrt::one(base, conductor)),
          phi_heads(CycNumber::from_rational(conductor, 1)) {}
};

struct CharFormula {
    long p = 0;
    long conductor = 4;
    std::string mode;
    CycNumber phi_d;
    std::vector<ClassTerm> classes;
    CharFormula(long p_, long conductor_, std::string mode_)
        : p(p_), conductor(conductor_), mode(std::move(mode_)), phi_d(conductor_) {}
    bool zero() const { return classes.empty(); }
};

inline std::string haar_annotation(long level) {
    std::ostringstream os;
    os << "meas(K_{sigma_" << (level + 1) << "} cap H^" << level << "'/Z(G)) = 1";
    return os.str();
}

inline CharFormula assemble_full_char(const CuspidalDatum& datum,
                                      const std::vector<TameElement>& gamma,
                                      const std::string& mode, long prec,
                                      bool reverse_reps = false) {
    datum_validate(datum);
    if (mode != "tau" && mode != "pi") throw DomainError("assemble_full_char: unknown mode");
    const TameTorus& T = *datum.torus;
    long d = datum.d();
    if (mode == "pi") {
        bool aniso = (T.factors.size() == 1);
        for (long a = 0; aniso && a < T.n(); ++a)
            for (long b = a + 1; b < T.n(); ++b)
                if (datum.blocks[d - 1][a] == datum.blocks[d - 1][b]) aniso = false;
        if (!aniso)
            throw DomainError(
                "assemble_full_char: last chain group is isotropic modulo the center; "
                "assemble the compact induction with mode tau");
    }

    CharFormula formula(T.p, datum.conductor, mode);
    std::vector<TruncationClass> classes = enumerate_classes(datum, gamma, prec);
    if (classes.empty()) return formula;
    formula.phi_d = phi_level_value(datum, d, classes.front().eig);

    for (const auto& cls : classes) {
        SupportResult sup = support_test(datum, cls);
        if (!sup.ok) continue;
        ClassTerm term(T.p, datum.conductor);
        term.label = cls.label;
        term.key = cls.key;
        std::vector<TameElement> res;
        for (const auto& v : cls.eig) res.push_back(tame_truncate(v, DepthVal(make_rat(0), true)));
        term.theta0_label = datum.rho0_label + ":" + tuple_key(res);
        for (long i = 0; i < d; ++i) {
            InductionFactor f = induction_factor(datum, cls, i, reverse_reps);
            term.c = term.c * f.index;
            term.gauss = term.gauss * f.gauss;
            term.epsilon *= f.epsilon;
            term.phi_heads = term.phi_heads * phi_level_value(datum, i, cls.eig);

            MuLeaf leaf;
            {
                std::ostringstream g, xl;
                g << "H^" << i;
                xl << "Xstar_" << i;
                leaf.group = g.str();
                leaf.xstar_label = xl.str();
            }
            std::vector<TameElement> tail;
            TameElement one = TameElement::one(*T.split, cls.eig.front().prec());
            for (long nu = 0; nu < T.n(); ++nu) {
                TameElement head = tame_truncate(cls.eig[nu], DepthVal(datum.depths[i], false));
                tail.push_back(cls.eig[nu] / head - one);
            }
            leaf.argument = tuple_key(tail);
            leaf.haar = haar_annotation(i);
            term.leaves.push_back(std::move(leaf));
        }
        formula.classes.push_back(std::move(term));
    }
    return formula;
}

// Rewrite every leaf over a possibly disconnected invariance group as an
// averaged sum over component representatives of the same leaf for the
// identity component.
inline CharFormula rewrite_disconnected(const CharFormula& formula,
                                        const std::map<std::string, long>& components) {
    CharFormula out(formula.p, formula.conductor, formula.mode);
    out.phi_d = formula.phi_d;
    for (const auto& term : formula.classes) {
        ClassTerm nt(formula.p, formula.conductor);
        nt.label = term.label;
        nt.key = term.key;
        nt.c = term.c;
        nt.gauss = term.gauss;
        nt.epsilon = term.epsilon;
        nt.phi_heads = term.phi_heads;
        nt.theta0_label = term.theta0_label;
        for (const auto& leaf : term.leaves) {
            auto it = components.find(leaf.group);
            long m = (it == components.end()) ? 1 : it->second;
            if (m <= 0) throw DomainError("rewrite_disconnected: bad component count");
            for (long g = 0; g < m; ++g) {
                MuLeaf nl = leaf;
                nl.components = 1;
                nl.prefactor = leaf.prefactor / m;
                if (m > 1) {
                    std::ostringstream xl;
                    xl << "g" << g << "." << leaf.xstar_label;
                    nl.xstar_label = xl.str();
                    nl.group = leaf.group + "^0";
                }
                nt.leaves.push_back(std::move(nl));
            }
        }
        out.classes.push_back(std::move(nt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plain-text rendering.

inline std::string cyc_to_string(const CycNumber& v) {
    std::ostringstream os;
    if (v.is_rational()) {
        os << v.rational_value();
        return os.str();
    }
    os << "cyc" << v.conductor() << "[";
    const auto& c = v.coeffs();
    for (size_t i = 0; i < c.size(); ++i) {
        if (i) os << ",";
        os << c[i];
    }
    os << "]";
    return os.str();
}

inline std::string qps_to_string(const QPowerSqrt& v) {
    std::ostringstream os;
    os << cyc_to_string(v.scalar()) << " * " << v.base() << "^(" << v.half_exponent() << "/2)";
    return os.str();
}

inline std::string render_text(const CharFormula& f) {
    std::ostringstream os;
    os << "mode " << f.mode << ", p = " << f.p << "\n";
    if (f.zero()) {
        os << "zero formula (no supported classes)\n";
        return os.str();
    }
    os << "phi_d = " << cyc_to_string(f.phi_d) << "\n";
    for (const auto& t : f.classes) {
        os << "class " << t.label << " [" << t.key << "]\n";
        os << "  theta0 = " << t.theta0_label << "\n";
        os << "  c = " << qps_to_string(t.c) << ", gauss = " << qps_to_string(t.gauss)
           << ", epsilon = " << t.epsilon << ", phi_heads = " << cyc_to_string(t.phi_heads)
           << "\n";
        for (const auto& l : t.leaves) {
            os << "  mu-hat[" << l.group << ", " << l.xstar_label << "](" << l.argument << ")";
            if (l.prefactor != 1) os << " * " << l.prefactor;
            os << "  {" << l.haar << "}\n";
        }
    }
    return os.str();
}

} // namespace charcalc
