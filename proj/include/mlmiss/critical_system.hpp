#pragma once

// Polynomial form of the Gaussian score equations. Denominators are cleared
// equation by equation; the mean can then be eliminated through the two
// equations that are linear in it, leaving a system in Gamma alone.
//
// Coefficients are assembled in exact rational arithmetic from the (exactly
// representable) double-valued statistics and rounded to double once.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

#include "model.hpp"
#include "polynomial.hpp"

namespace mlmiss {

using Rational = boost::multiprecision::mpq_rational;
using ExactPoly = Polynomial<Rational>;
using ComplexPoly = Polynomial<cplx>;

enum class Formulation { full, reduced, profiled };

inline std::string to_string(Formulation f) {
    switch (f) {
        case Formulation::full: return "full";
        case Formulation::reduced: return "reduced";
        case Formulation::profiled: return "profiled";
    }
    return "full";
}

inline Formulation formulation_from_string(const std::string& s) {
    if (s == "full") return Formulation::full;
    if (s == "reduced") return Formulation::reduced;
    if (s == "profiled") return Formulation::profiled;
    throw std::invalid_argument("unknown formulation '" + s + "'");
}

/// Rational back-substitution mu_k = numerator_k(Gamma) / denominator(Gamma).
struct MeanMap {
    ComplexPoly numerator1, numerator2, denominator;
};

/// Per-coordinate affine change y -> c (y - m). Critical points of the
/// transformed data map back by mu -> m + mu / c, Gamma_ij -> c_i c_j Gamma_ij.
struct CoordinateScaling {
    double m1 = 0, m2 = 0, c1 = 1, c2 = 1;

    /// Pooled mean and standard deviation of every observed value of each
    /// coordinate; falls back to unit scale if a coordinate has no spread.
    static CoordinateScaling pooled(const SuffStats& st) {
        CoordinateScaling sc;
        auto fit = [](double k1, double a1, double a2, double k2, double b1, double b2, double& m, double& c) {
            const double cnt = k1 + k2;
            if (!(cnt > 0)) return;
            m = (k1 * a1 + k2 * b1) / cnt;
            const double var = (k1 * a2 + k2 * b2) / cnt - m * m;
            c = var > 1e-12 * (1.0 + m * m) ? 1.0 / std::sqrt(var) : 1.0;
        };
        fit(st.n, st.my1, st.my11, st.r, st.mz1, st.mz2, sc.m1, sc.c1);
        fit(st.n, st.my2, st.my22, st.s, st.mw1, st.mw2, sc.m2, sc.c2);
        return sc;
    }

    SuffStats apply(const SuffStats& st) const {
        SuffStats o = st;
        o.my1 = c1 * (st.my1 - m1);
        o.my2 = c2 * (st.my2 - m2);
        o.my11 = c1 * c1 * (st.my11 - 2 * m1 * st.my1 + m1 * m1);
        o.my22 = c2 * c2 * (st.my22 - 2 * m2 * st.my2 + m2 * m2);
        o.my12 = c1 * c2 * (st.my12 - m1 * st.my2 - m2 * st.my1 + m1 * m2);
        o.mz1 = c1 * (st.mz1 - m1);
        o.mz2 = c1 * c1 * (st.mz2 - 2 * m1 * st.mz1 + m1 * m1);
        o.mw1 = c2 * (st.mw1 - m2);
        o.mw2 = c2 * c2 * (st.mw2 - 2 * m2 * st.mw1 + m2 * m2);
        return o;
    }

    std::array<cplx, 5> unapply(const std::array<cplx, 5>& x) const {
        return {m1 + x[0] / c1, m2 + x[1] / c2, c1 * c1 * x[2], c1 * c2 * x[3], c2 * c2 * x[4]};
    }
};

/// Scale back-substitution Gamma = (numerator / denominator) (1, u, v).
struct ScaleMap {
    ComplexPoly numerator, denominator;
};

struct PolySystem {
    Formulation formulation = Formulation::full;
    std::vector<std::string> vars;
    std::vector<ComplexPoly> polys;
    /// Full formulation only: polys[i] = multipliers[i] * score_i.
    std::vector<ComplexPoly> multipliers;
    /// The saturant is the product of these factors; solutions where any of
    /// them vanishes are artefacts of clearing denominators.
    std::vector<ComplexPoly> saturant_factors;
    std::optional<MeanMap> mean_map;
    std::optional<ScaleMap> scale_map;
    /// Set when polys were built for rescaled statistics; stats stays the
    /// caller's data.
    std::optional<CoordinateScaling> scaling;
    SuffStats stats;

    std::size_t nvars() const { return vars.size(); }
    std::vector<int> degrees() const {
        std::vector<int> d;
        for (const auto& p : polys) d.push_back(p.degree());
        return d;
    }
    ComplexPoly saturant() const {
        ComplexPoly s = ComplexPoly::constant(nvars(), cplx(1));
        for (const auto& f : saturant_factors) s *= f;
        return s;
    }
};

namespace detail {

inline ComplexPoly to_complex(const ExactPoly& p) {
    return p.map_coefficients<cplx>([](const Rational& c) { return cplx(c.convert_to<double>(), 0.0); });
}

inline Rational exact(double v) { return Rational(v); }

// Full-system variable indices.
enum FullVar : std::size_t { kMu1 = 0, kMu2 = 1, kG11 = 2, kG12 = 3, kG22 = 4 };

struct ExactFull {
    std::vector<ExactPoly> polys;        // order: d/dmu1, d/dmu2, d/dg11, d/dg12, d/dg22
    std::vector<ExactPoly> multipliers;
};

inline ExactFull build_full_exact(const SuffStats& st) {
    const std::size_t nv = 5;
    auto var = [&](std::size_t i) { return ExactPoly::variable(nv, i); };
    auto cst = [&](const Rational& c) { return ExactPoly::constant(nv, c); };
    const ExactPoly m1 = var(kMu1), m2 = var(kMu2), a = var(kG11), b = var(kG12), g = var(kG22);
    const ExactPoly det = a * g - b * b;

    const Rational n = exact(st.n), r = exact(st.r), s = exact(st.s);
    const Rational tot = n + r + s;
    const Rational y1 = exact(st.my1), y2 = exact(st.my2), y11 = exact(st.my11), y12 = exact(st.my12),
                   y22 = exact(st.my22), z1 = exact(st.mz1), z2 = exact(st.mz2), w1 = exact(st.mw1),
                   w2 = exact(st.mw2);

    const ExactPoly e1 = cst(y1) - m1, e2 = cst(y2) - m2, ez = cst(z1) - m1, ew = cst(w1) - m2;
    const ExactPoly ay11 = cst(y11) - Rational(2) * y1 * m1 + m1 * m1;
    const ExactPoly ay22 = cst(y22) - Rational(2) * y2 * m2 + m2 * m2;
    const ExactPoly ay12 = cst(y12) - y1 * m2 - y2 * m1 + m1 * m2;
    const ExactPoly az = cst(z2) - Rational(2) * z1 * m1 + m1 * m1;
    const ExactPoly aw = cst(w2) - Rational(2) * w1 * m2 + m2 * m2;

    ExactFull out;
    // g22 * dl/dmu1
    out.polys.push_back(n * g * (e1 * a + e2 * b) + r * det * ez);
    out.multipliers.push_back(g);
    // g11 * dl/dmu2
    out.polys.push_back(n * a * (e2 * g + e1 * b) + s * det * ew);
    out.multipliers.push_back(a);
    // 2 det g11^2 * dl/dg11
    out.polys.push_back(tot * g * a * a - s * det * a - n * ay11 * det * a * a - r * az * det * a * a -
                        s * b * b * aw * det);
    out.multipliers.push_back(Rational(2) * det * a * a);
    // det g11 g22 * dl/dg12
    out.polys.push_back(-tot * b * a * g - n * ay12 * det * a * g + r * b * az * det * a + s * b * aw * det * g);
    out.multipliers.push_back(det * a * g);
    // 2 det g22^2 * dl/dg22
    out.polys.push_back(tot * a * g * g - r * det * g - n * ay22 * det * g * g - s * aw * det * g * g -
                        r * b * b * az * det);
    out.multipliers.push_back(Rational(2) * det * g * g);
    return out;
}

/// Split a 5-variable polynomial by its mu-monomial: result[(i, j)] is the
/// coefficient of mu1^i mu2^j, as a polynomial in (g11, g12, g22).
inline std::map<std::pair<int, int>, ExactPoly> split_by_mean(const ExactPoly& p) {
    std::map<std::pair<int, int>, ExactPoly> out;
    for (const auto& [e, c] : p.terms()) {
        Exponents ge{};
        ge[0] = e[kG11];
        ge[1] = e[kG12];
        ge[2] = e[kG22];
        auto [it, ins] = out.try_emplace({e[kMu1], e[kMu2]}, ExactPoly(3));
        it->second.add_term(ge, c);
    }
    return out;
}

/// Divide out the largest monomial common to every polynomial in `ps`.
inline void strip_common_monomial(std::vector<ExactPoly*> ps) {
    Exponents lo;
    lo.fill(255);
    bool any = false;
    for (const auto* p : ps)
        for (const auto& [e, c] : p->terms()) {
            any = true;
            for (std::size_t i = 0; i < kMaxVars; ++i) lo[i] = std::min(lo[i], e[i]);
        }
    if (!any) return;
    ExactPoly mono(ps.front()->nvars());
    mono.add_term(lo, Rational(1));
    for (auto* p : ps) *p = p->exact_divide(mono);
}

/// Divide every polynomial in `ps` by `f` as many times as it divides all of them.
inline void strip_common_factor(std::vector<ExactPoly*> ps, const ExactPoly& f) {
    if (f.degree() == 0) return;
    for (;;) {
        std::vector<ExactPoly> q;
        try {
            for (const auto* p : ps) q.push_back(p->exact_divide(f));
        } catch (const std::domain_error&) {
            return;
        }
        bool all_zero = true;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            *ps[i] = std::move(q[i]);
            all_zero = all_zero && ps[i]->is_zero();
        }
        if (all_zero) return;
    }
}

inline ComplexPoly normalized(const ComplexPoly& p) {
    double m = 0;
    for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c));
    return m > 0 ? p * cplx(1.0 / m) : p;
}

}  // namespace detail

/// Cleared score equations in (mu1, mu2, g11, g12, g22), equation order
/// following the variable order. Degrees are (3, 3, 6, 6, 6).
inline PolySystem build_full(const SuffStats& st) {
    if (!st.all_finite()) throw std::invalid_argument("sufficient statistics must be finite");
    const auto ex = detail::build_full_exact(st);
    PolySystem sys;
    sys.formulation = Formulation::full;
    sys.vars = {"mu1", "mu2", "g11", "g12", "g22"};
    for (const auto& p : ex.polys) sys.polys.push_back(detail::to_complex(p));
    for (const auto& p : ex.multipliers) sys.multipliers.push_back(detail::to_complex(p));
    const std::size_t nv = 5;
    const auto a = ComplexPoly::variable(nv, detail::kG11), b = ComplexPoly::variable(nv, detail::kG12),
               g = ComplexPoly::variable(nv, detail::kG22);
    sys.saturant_factors = {a, g, a * g - b * b};
    sys.stats = st;
    return sys;
}

namespace detail {

struct ExactMeanMap {
    ExactPoly num1, num2, den;  // in (g11, g12, g22)
};

inline ExactMeanMap exact_mean_map(const ExactFull& ex) {
    const auto l1 = split_by_mean(ex.polys[0]);
    const auto l2 = split_by_mean(ex.polys[1]);
    auto coef = [](const std::map<std::pair<int, int>, ExactPoly>& m, int i, int j) {
        auto it = m.find({i, j});
        return it == m.end() ? ExactPoly(3) : it->second;
    };
    // l1: a11 mu1 + a12 mu2 + c1 = 0 ; l2: a21 mu1 + a22 mu2 + c2 = 0
    const ExactPoly a11 = coef(l1, 1, 0), a12 = coef(l1, 0, 1), c1 = coef(l1, 0, 0);
    const ExactPoly a21 = coef(l2, 1, 0), a22 = coef(l2, 0, 1), c2 = coef(l2, 0, 0);
    ExactMeanMap mm{a12 * c2 - a22 * c1, a21 * c1 - a11 * c2, a11 * a22 - a12 * a21};
    if (mm.den.is_zero()) throw std::domain_error("mean equations are degenerate for these statistics");
    const ExactPoly ga = ExactPoly::variable(3, 0), gb = ExactPoly::variable(3, 1), gg = ExactPoly::variable(3, 2);
    strip_common_factor({&mm.den, &mm.num1, &mm.num2}, ga * gg - gb * gb);
    strip_common_monomial({&mm.den, &mm.num1, &mm.num2});
    return mm;
}

/// Restrict a polynomial in (g11, g12, g22) to the chart g11 = 1, giving a
/// polynomial in (u, v) = (g12, g22).
inline ExactPoly on_chart(const ExactPoly& p) {
    ExactPoly out(2);
    for (const auto& [e, c] : p.terms()) {
        Exponents f{};
        f[0] = e[1];
        f[1] = e[2];
        out.add_term(f, c);
    }
    return out;
}

}  // namespace detail

/// Eliminate the mean through the first two (mean-linear) equations.
/// Returns a 3-variable system in (g11, g12, g22) whose polynomials are the
/// remaining cleared equations with mu = numerator / denominator substituted
/// and the denominator cleared. Factors common to the adjugate and the
/// determinant (det Gamma and monomials) are cancelled exactly.
inline PolySystem eliminate_mu(const PolySystem& full) {
    if (full.formulation != Formulation::full || full.polys.size() != 5)
        throw std::invalid_argument("eliminate_mu expects the full five-variable system");
    const auto ex = detail::build_full_exact(full.stats);
    const auto mm = detail::exact_mean_map(ex);
    const ExactPoly ga = ExactPoly::variable(3, 0), gb = ExactPoly::variable(3, 1), gg = ExactPoly::variable(3, 2);
    const ExactPoly detg = ga * gg - gb * gb;

    PolySystem sys;
    sys.formulation = Formulation::reduced;
    sys.vars = {"g11", "g12", "g22"};
    sys.stats = full.stats;
    for (std::size_t eq : {2u, 3u, 4u}) {
        const auto parts = detail::split_by_mean(ex.polys[eq]);
        ExactPoly acc(3);
        for (const auto& [mono, c] : parts) {
            const auto [i, j] = mono;
            acc += c * mm.num1.pow(i) * mm.num2.pow(j) * mm.den.pow(2 - i - j);
        }
        std::vector<ExactPoly*> one{&acc};
        detail::strip_common_monomial(one);
        detail::strip_common_factor(one, detg);
        detail::strip_common_factor(one, mm.den);
        sys.polys.push_back(detail::normalized(detail::to_complex(acc)));
    }
    sys.saturant_factors = {detail::to_complex(ga), detail::to_complex(gg), detail::to_complex(detg)};
    if (mm.den.degree() > 0) sys.saturant_factors.push_back(detail::normalized(detail::to_complex(mm.den)));
    sys.mean_map = MeanMap{detail::to_complex(mm.num1), detail::to_complex(mm.num2), detail::to_complex(mm.den)};
    return sys;
}

/// Profile out the scale of Gamma. Writing Gamma = lambda (1, u, v), each
/// Gamma-score component (after mu elimination) is A_i / lambda + B_i, and
/// Euler's relation fixes lambda = K / L with K = n + (r + s) / 2 and
/// L = -(B_1 + u B_2 + v B_3). Two equations in (u, v) of degrees (8, 9)
/// remain, so a total-degree start system has 72 paths instead of the 512
/// of the three-variable system.
///
/// The equations are built for standardized statistics (each coordinate
/// centred and scaled by its pooled mean and standard deviation); the
/// likelihood is equivariant under that map, and lift_point undoes it.
/// This keeps real critical points away from the spurious point u = v = 0.
/// Critical points with g11 = 0 are outside the chart.
inline PolySystem profile_scale(const PolySystem& full) {
    if (full.formulation != Formulation::full || full.polys.size() != 5)
        throw std::invalid_argument("profile_scale expects the full five-variable system");
    const CoordinateScaling sc = CoordinateScaling::pooled(full.stats);
    const SuffStats st = sc.apply(full.stats);
    const auto ex = detail::build_full_exact(st);
    const auto mm3 = detail::exact_mean_map(ex);
    const ExactPoly n1 = detail::on_chart(mm3.num1), n2 = detail::on_chart(mm3.num2), dp = detail::on_chart(mm3.den);

    using detail::exact;
    const Rational n = exact(st.n), r = exact(st.r), s = exact(st.s);
    const Rational tot = n + r + s, k = n + (r + s) / 2;
    const ExactPoly u = ExactPoly::variable(2, 0), v = ExactPoly::variable(2, 1);
    const ExactPoly d = v - u * u;
    const ExactPoly dp2 = dp * dp;
    // Centered moments times dp^2.
    auto centered = [&](const Rational& m2, const Rational& a1, const ExactPoly& na, const Rational& b1,
                        const ExactPoly& nb) { return m2 * dp2 - (a1 * nb + b1 * na) * dp + na * nb; };
    const ExactPoly ay11 = centered(exact(st.my11), exact(st.my1), n1, exact(st.my1), n1);
    const ExactPoly ay12 = centered(exact(st.my12), exact(st.my1), n1, exact(st.my2), n2);
    const ExactPoly ay22 = centered(exact(st.my22), exact(st.my2), n2, exact(st.my2), n2);
    const ExactPoly az = centered(exact(st.mz2), exact(st.mz1), n1, exact(st.mz1), n1);
    const ExactPoly aw = centered(exact(st.mw2), exact(st.mw1), n2, exact(st.mw1), n2);

    // L = l / (2 v dp^2), B_2 = b2 / (v dp^2), B_3 = b3 / (2 v^2 dp^2)
    const ExactPoly l = n * v * (ay11 + Rational(2) * u * ay12 + v * ay22) + r * d * az + s * v * d * aw;
    const ExactPoly b2 = -(n * v * ay12) + r * u * az + s * u * v * aw;
    const ExactPoly b3 = -(n * v * v * ay22) - s * v * v * aw - r * u * u * az;
    ExactPoly e2 = -(tot * u * l) + Rational(2) * k * d * b2;
    ExactPoly e3 = l * (tot * v - r * d) + Rational(2) * k * d * b3;
    for (ExactPoly* e : {&e2, &e3}) {
        std::vector<ExactPoly*> one{e};
        detail::strip_common_monomial(one);
        detail::strip_common_factor(one, d);
        detail::strip_common_factor(one, dp);
    }
    if (e2.is_zero() || e3.is_zero()) throw std::domain_error("profiled equations vanish identically");

    PolySystem sys;
    sys.formulation = Formulation::profiled;
    sys.vars = {"u", "v"};
    sys.stats = full.stats;
    sys.scaling = sc;
    sys.polys = {detail::normalized(detail::to_complex(e2)), detail::normalized(detail::to_complex(e3))};
    sys.saturant_factors = {detail::to_complex(v), detail::to_complex(d)};
    if (dp.degree() > 0) sys.saturant_factors.push_back(detail::normalized(detail::to_complex(dp)));
    if (l.degree() > 0) sys.saturant_factors.push_back(detail::normalized(detail::to_complex(l)));
    sys.mean_map = MeanMap{detail::to_complex(n1), detail::to_complex(n2), detail::to_complex(dp)};
    sys.scale_map = ScaleMap{detail::to_complex(Rational(2) * k * v * dp2), detail::to_complex(l)};
    return sys;
}

/// Map a point of any formulation to full coordinates (mu1, mu2, g11, g12, g22).
inline std::array<cplx, 5> lift_point(const PolySystem& sys, std::span<const cplx> y) {
    switch (sys.formulation) {
        case Formulation::full: return {y[0], y[1], y[2], y[3], y[4]};
        case Formulation::reduced: {
            const auto& mm = sys.mean_map.value();
            const cplx d = mm.denominator.evaluate<cplx>(y);
            return {mm.numerator1.evaluate<cplx>(y) / d, mm.numerator2.evaluate<cplx>(y) / d, y[0], y[1], y[2]};
        }
        case Formulation::profiled: {
            const auto& mm = sys.mean_map.value();
            const auto& sm = sys.scale_map.value();
            const cplx d = mm.denominator.evaluate<cplx>(y);
            const cplx lambda = sm.numerator.evaluate<cplx>(y) / sm.denominator.evaluate<cplx>(y);
            const std::array<cplx, 5> x{mm.numerator1.evaluate<cplx>(y) / d, mm.numerator2.evaluate<cplx>(y) / d,
                                        lambda, lambda * y[0], lambda * y[1]};
            return sys.scaling ? sys.scaling->unapply(x) : x;
        }
    }
    throw std::invalid_argument("unknown formulation");
}

inline json poly_to_json(const ComplexPoly& p) {
    json terms = json::array();
    for (const auto& [e, c] : p.terms()) {
        std::vector<int> ex(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(p.nvars()));
        terms.push_back({{"exponents", ex}, {"coefficient", {c.real(), c.imag()}}});
    }
    return terms;
}

inline ComplexPoly poly_from_json(const json& j, std::size_t nvars) {
    ComplexPoly p(nvars);
    for (const auto& t : j) {
        Exponents e{};
        const auto ex = t.at("exponents").get<std::vector<int>>();
        if (ex.size() != nvars) throw std::invalid_argument("exponent vector has the wrong length");
        for (std::size_t i = 0; i < nvars; ++i) e[i] = static_cast<std::uint8_t>(ex[i]);
        const auto c = t.at("coefficient");
        p.add_term(e, cplx(c.at(0).get<double>(), c.at(1).get<double>()));
    }
    return p;
}

inline json to_json_value(const PolySystem& sys) {
    json j;
    j["formulation"] = to_string(sys.formulation);
    j["vars"] = sys.vars;
    j["degrees"] = sys.degrees();
    j["polys"] = json::array();
    for (const auto& p : sys.polys) j["polys"].push_back(poly_to_json(p));
    j["multipliers"] = json::array();
    for (const auto& p : sys.multipliers) j["multipliers"].push_back(poly_to_json(p));
    j["saturant_factors"] = json::array();
    for (const auto& p : sys.saturant_factors) j["saturant_factors"].push_back(poly_to_json(p));
    if (sys.mean_map) {
        j["mean_map"] = {{"numerator1", poly_to_json(sys.mean_map->numerator1)},
                         {"numerator2", poly_to_json(sys.mean_map->numerator2)},
                         {"denominator", poly_to_json(sys.mean_map->denominator)}};
    }
    if (sys.scale_map) {
        j["scale_map"] = {{"numerator", poly_to_json(sys.scale_map->numerator)},
                          {"denominator", poly_to_json(sys.scale_map->denominator)}};
    }
    j["stats"] = sys.stats;
    return j;
}

}  // namespace mlmiss
