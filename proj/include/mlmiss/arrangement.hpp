#pragma once

// Sign partitions of the linear forms {p_ij, p_i+, p_+j} on the affine
// slice p_++ = 1: exact LP classification (empty / unbounded / bounded),
// the combinatorial boundedness test, bounded-region counting, and the
// per-region critical points of the multinomial missing-data likelihood.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/gmp.hpp>

#include "combinatorics.hpp"
#include "em.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rational_lp.hpp"

namespace mlmiss {

using Rational = boost::multiprecision::mpq_rational;

inline constexpr int kMaxEnumerationForms = 16;
inline constexpr int kMaxCriticalForms = 12;
inline constexpr double kCriticalTol = 1e-8;

/// Bit f of `negative` set means form f is in N. Forms are ordered: cells
/// row-major (i*n + j), then row margins, then column margins.
struct SignPartition {
    int m = 0, n = 0;
    std::uint32_t negative = 0;

    int nforms() const { return m * n + m + n; }
    bool form_negative(int f) const { return (negative >> f) & 1u; }
    bool cell_negative(int i, int j) const { return form_negative(i * n + j); }
    bool row_negative(int i) const { return form_negative(m * n + i); }
    bool col_negative(int j) const { return form_negative(m * n + m + j); }
    int sign(int f) const { return form_negative(f) ? -1 : 1; }

    static SignPartition all_positive(int m, int n) { return {m, n, 0}; }

    /// "NP/PP|PP|PN": cell rows separated by '/', then row and column margins.
    std::string to_string() const {
        std::string s;
        for (int i = 0; i < m; ++i) {
            if (i) s += '/';
            for (int j = 0; j < n; ++j) s += cell_negative(i, j) ? 'N' : 'P';
        }
        s += '|';
        for (int i = 0; i < m; ++i) s += row_negative(i) ? 'N' : 'P';
        s += '|';
        for (int j = 0; j < n; ++j) s += col_negative(j) ? 'N' : 'P';
        return s;
    }
};

enum class RegionStatus { empty, unbounded, bounded };

inline const char* to_string(RegionStatus s) {
    switch (s) {
        case RegionStatus::empty: return "empty";
        case RegionStatus::unbounded: return "unbounded";
        case RegionStatus::bounded: return "bounded";
    }
    return "?";
}

struct RegionClass {
    SignPartition partition;
    RegionStatus status = RegionStatus::empty;
    std::vector<Rational> witness;  // point with p_++ = 1 (nonempty regions)
    std::vector<Rational> ray;      // recession direction with p_++ = 0 (unbounded regions)
    Rational depth = 0;             // optimal min_f sign(f) f(witness), capped at 1
};

namespace detail {

/// Coefficients of form f over the mn cell variables.
inline std::vector<int> form_coefficients(int m, int n, int f) {
    std::vector<int> a(static_cast<std::size_t>(m * n), 0);
    if (f < m * n) {
        a[f] = 1;
    } else if (f < m * n + m) {
        const int i = f - m * n;
        for (int j = 0; j < n; ++j) a[i * n + j] = 1;
    } else {
        const int j = f - m * n - m;
        for (int i = 0; i < m; ++i) a[i * n + j] = 1;
    }
    return a;
}

inline void check_shape(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("table dimensions must be positive");
    if (m * n + m + n > 31) throw std::length_error("too many linear forms for a 32-bit partition mask");
}

}  // namespace detail

/// Nonemptiness: maximize d subject to sign(f) f(p) >= d, p_++ = 1, d <= 1.
/// Boundedness: maximize sum_f sign(f) f(q) over the recession cone
/// {sign(f) f(q) >= 0, q_++ = 0} cut by that sum <= 1; optimum 0 iff the cone
/// is trivial.
inline RegionClass classify_lp(const SignPartition& part) {
    const int m = part.m, n = part.n;
    detail::check_shape(m, n);
    const int k = m * n, F = part.nforms();
    RegionClass rc;
    rc.partition = part;

    LinearProgram<Rational> lp;
    lp.nvars = static_cast<std::size_t>(k + 1);
    lp.c.assign(lp.nvars, Rational(0));
    lp.c[k] = 1;
    lp.free.assign(lp.nvars, true);
    for (int f = 0; f < F; ++f) {
        const auto a = detail::form_coefficients(m, n, f);
        std::vector<Rational> row(lp.nvars, Rational(0));
        for (int v = 0; v < k; ++v) row[v] = part.sign(f) * a[v];
        row[k] = -1;
        lp.add(std::move(row), Relation::ge, Rational(0));
    }
    {
        std::vector<Rational> row(lp.nvars, Rational(1));
        row[k] = 0;
        lp.add(std::move(row), Relation::eq, Rational(1));
        std::vector<Rational> cap(lp.nvars, Rational(0));
        cap[k] = 1;
        lp.add(std::move(cap), Relation::le, Rational(1));
    }
    const auto r1 = solve_lp(lp);
    if (r1.status != LPStatus::optimal) throw std::logic_error("nonemptiness LP must be feasible and bounded");
    rc.depth = r1.value;
    if (!(r1.value > 0)) {
        rc.status = RegionStatus::empty;
        return rc;
    }
    rc.witness.assign(r1.x.begin(), r1.x.begin() + k);

    LinearProgram<Rational> cone;
    cone.nvars = static_cast<std::size_t>(k);
    cone.c.assign(k, Rational(0));
    cone.free.assign(k, true);
    std::vector<Rational> sum(k, Rational(0));
    for (int f = 0; f < F; ++f) {
        const auto a = detail::form_coefficients(m, n, f);
        std::vector<Rational> row(k, Rational(0));
        for (int v = 0; v < k; ++v) row[v] = part.sign(f) * a[v];
        for (int v = 0; v < k; ++v) sum[v] += row[v];
        cone.add(std::move(row), Relation::ge, Rational(0));
    }
    cone.c = sum;
    cone.add(sum, Relation::le, Rational(1));
    cone.add(std::vector<Rational>(k, Rational(1)), Relation::eq, Rational(0));
    const auto r2 = solve_lp(cone);
    if (r2.status != LPStatus::optimal) throw std::logic_error("recession-cone LP must be feasible and bounded");
    if (r2.value > 0) {
        rc.status = RegionStatus::unbounded;
        rc.ray = r2.x;
    } else {
        rc.status = RegionStatus::bounded;
    }
    return rc;
}

/// Bounded and nonempty iff every margin is in P, no row or column of cells
/// lies entirely in N, and the N-cell indicator matrix is lonesum.
inline bool classify_combinatorial(const SignPartition& part) {
    const int m = part.m, n = part.n;
    for (int i = 0; i < m; ++i)
        if (part.row_negative(i)) return false;
    for (int j = 0; j < n; ++j)
        if (part.col_negative(j)) return false;
    std::vector<std::uint32_t> rows(m, 0);
    std::uint32_t colfull = ~0u;
    const std::uint32_t full = (n >= 32) ? ~0u : ((1u << n) - 1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j)
            if (part.cell_negative(i, j)) rows[i] |= 1u << j;
        if (rows[i] == full) return false;
        colfull &= rows[i];
    }
    if (colfull & full) return false;
    return is_lonesum(rows);
}

/// Classify all 2^(mn+m+n) partitions by LP; result[mask] is the class of
/// SignPartition{m, n, mask}.
inline std::vector<RegionClass> enumerate_regions(int m, int n, unsigned jobs = 1,
                                                  int max_forms = kMaxEnumerationForms) {
    detail::check_shape(m, n);
    const int F = m * n + m + n;
    if (F > max_forms)
        throw std::length_error("enumeration over " + std::to_string(F) + " forms exceeds the bound " +
                                std::to_string(max_forms));
    const std::size_t total = std::size_t{1} << F;
    std::vector<RegionClass> out(total);
    parallel_for(total, jobs, [&](std::size_t mask) {
        out[mask] = classify_lp(SignPartition{m, n, static_cast<std::uint32_t>(mask)});
    });
    return out;
}

inline BigCount count_bounded_regions(int m, int n, unsigned jobs = 1, int max_forms = kMaxEnumerationForms) {
    BigCount c = 0;
    for (const auto& rc : enumerate_regions(m, n, jobs, max_forms))
        if (rc.status == RegionStatus::bounded) ++c;
    return c;
}

/// CSV: mask,signs,status,depth,witness,ray with vectors as ';'-joined rationals.
inline void write_regions_csv(std::ostream& os, const std::vector<RegionClass>& regions) {
    os << "mask,signs,status,depth,witness,ray\n";
    auto join = [](const std::vector<Rational>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ';';
            s += v[i].str();
        }
        return s;
    };
    for (const auto& rc : regions)
        os << rc.partition.negative << ',' << rc.partition.to_string() << ',' << to_string(rc.status) << ','
           << rc.depth.str() << ',' << join(rc.witness) << ',' << join(rc.ray) << '\n';
}

// ---------------------------------------------------------------------------
// Critical points

struct DiscreteCriticalPoint {
    SignPartition region;
    ProbTable p;
    double loglik = 0;
    double residual = 0;  // max_ij |dl/dp_ij / total - 1|
    int iterations = 0;
    bool converged = false;
    bool nonnegative = false;
    std::string error;
};

namespace detail {

/// Gradient of the likelihood in the mn cell variables.
inline std::vector<double> multinomial_gradient(const CountTable& tab, const ProbTable& p) {
    const std::size_t m = tab.rows(), n = tab.cols();
    std::vector<double> g(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double ri = p.row_sum(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double cj = p.col_sum(j);
            double v = 0;
            if (tab.t[i][j] > 0) v += tab.t[i][j] / p.p[i][j];
            if (tab.rvec[i] > 0) v += tab.rvec[i] / ri;
            if (tab.svec[j] > 0) v += tab.svec[j] / cj;
            g[i * n + j] = v;
        }
    }
    return g;
}

inline double critical_residual(const std::vector<double>& g, double total) {
    double r = 0;
    for (double v : g) r = std::max(r, std::abs(v / total - 1.0));
    return r;
}

inline bool respects_signs(const SignPartition& part, const ProbTable& p) {
    const int m = part.m, n = part.n;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (part.sign(i * n + j) * p.p[i][j] <= 0) return false;
    for (int i = 0; i < m; ++i)
        if (part.sign(m * n + i) * p.row_sum(i) <= 0) return false;
    for (int j = 0; j < n; ++j)
        if (part.sign(m * n + m + j) * p.col_sum(j) <= 0) return false;
    return true;
}

}  // namespace detail

/// Damped Newton ascent on the slice p_++ = 1 from the region's witness.
/// The likelihood is concave on the region and tends to -infinity at its
/// walls, so the ascent stays inside and converges to the unique critical point.
inline DiscreteCriticalPoint region_critical_point(const CountTable& tab, const RegionClass& rc, int max_iter = 200) {
    const int m = rc.partition.m, n = rc.partition.n, k = m * n;
    DiscreteCriticalPoint out;
    out.region = rc.partition;
    if (rc.status != RegionStatus::bounded) throw std::invalid_argument("critical points are located in bounded regions only");
    out.p.p.assign(m, std::vector<double>(n, 0.0));
    for (int v = 0; v < k; ++v) out.p.p[v / n][v % n] = static_cast<double>(rc.witness[v]);
    const double total = tab.total();
    double ll = multinomial_loglik(tab, out.p);
    auto g = detail::multinomial_gradient(tab, out.p);
    out.residual = detail::critical_residual(g, total);
    Eigen::MatrixXd K(k + 1, k + 1);
    Eigen::VectorXd rhs(k + 1);
    for (int it = 0; it < max_iter && out.residual > 1e-14; ++it) {
        out.iterations = it + 1;
        K.setZero();
        for (int a = 0; a < k; ++a) {
            const int i = a / n, j = a % n;
            if (tab.t[i][j] > 0) K(a, a) -= tab.t[i][j] / (out.p.p[i][j] * out.p.p[i][j]);
            for (int b = 0; b < k; ++b) {
                const int i2 = b / n, j2 = b % n;
                if (i2 == i && tab.rvec[i] > 0) K(a, b) -= tab.rvec[i] / std::pow(out.p.row_sum(i), 2);
                if (j2 == j && tab.svec[j] > 0) K(a, b) -= tab.svec[j] / std::pow(out.p.col_sum(j), 2);
            }
            K(a, k) = K(k, a) = 1;
            rhs[a] = -g[a];
        }
        rhs[k] = 0;
        const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        double slope = 0;
        for (int a = 0; a < k; ++a) slope += (g[a] - total) * sol[a];
        if (!(slope > 0) || !sol.allFinite()) break;
        double step = 1;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            ProbTable trial = out.p;
            for (int a = 0; a < k; ++a) trial.p[a / n][a % n] += step * sol[a];
            if (!detail::respects_signs(rc.partition, trial)) continue;
            const double llt = multinomial_loglik(tab, trial);
            if (llt >= ll + 1e-4 * step * slope || (step < 1e-3 && llt >= ll)) {
                out.p = std::move(trial);
                ll = llt;
                moved = true;
                break;
            }
        }
        if (!moved) {
            // near the optimum the loglik gain is below roundoff; accept on residual decrease
            step = 1;
            for (int ls = 0; ls < 60 && !moved; ++ls, step *= 0.5) {
                ProbTable trial = out.p;
                for (int a = 0; a < k; ++a) trial.p[a / n][a % n] += step * sol[a];
                if (!detail::respects_signs(rc.partition, trial)) continue;
                const double rt = detail::critical_residual(detail::multinomial_gradient(tab, trial), total);
                if (rt < out.residual) {
                    out.p = std::move(trial);
                    ll = multinomial_loglik(tab, out.p);
                    moved = true;
                }
            }
        }
        if (!moved) break;
        g = detail::multinomial_gradient(tab, out.p);
        out.residual = detail::critical_residual(g, total);
    }
    out.loglik = ll;
    out.converged = out.residual < kCriticalTol;
    out.nonnegative = out.p.nonnegative();
    if (!out.converged) {
        std::ostringstream msg;
        msg << "region " << rc.partition.to_string() << ": ascent stopped with residual " << out.residual;
        out.error = msg.str();
    }
    return out;
}

/// One critical point per bounded region, in partition-mask order.
inline std::vector<DiscreteCriticalPoint> discrete_critical_points(const CountTable& tab, unsigned jobs = 1,
                                                                   int max_forms = kMaxCriticalForms) {
    tab.validate();
    const int m = static_cast<int>(tab.rows()), n = static_cast<int>(tab.cols());
    const auto regions = enumerate_regions(m, n, jobs, max_forms);
    std::vector<const RegionClass*> bounded;
    for (const auto& rc : regions)
        if (rc.status == RegionStatus::bounded) bounded.push_back(&rc);
    std::vector<DiscreteCriticalPoint> out(bounded.size());
    parallel_for(bounded.size(), jobs, [&](std::size_t i) { out[i] = region_critical_point(tab, *bounded[i]); });
    return out;
}

}  // namespace mlmiss
