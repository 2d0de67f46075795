#pragma once

// EM for the bivariate normal with censored coordinates and for the
// multinomial table with supplementary row and column margins.

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gaussian_likelihood.hpp"
#include "model.hpp"

namespace mlmiss {

inline constexpr double kEmTol = 1e-9;
inline constexpr int kEmMaxIter = 10000;
inline constexpr double kAscentTol = 1e-10;

struct EMStep {
    GaussianParams params;
    double loglik = 0;
};

struct EMTrace {
    std::vector<EMStep> iterates;  // iterates[0] is the initial point
    bool converged = false;
    int iterations = 0;
    double score_norm = 0;   // max |score| / (n + r + s) at the last iterate
    bool monotone = true;    // no step decreased loglik by more than kAscentTol

    const GaussianParams& final_params() const { return iterates.back().params; }
};

/// Per-coordinate means over every observed value, unit-free diagonal
/// covariance from the pooled variances, zero covariance.
inline GaussianParams default_gaussian_init(const SuffStats& st) {
    auto pooled = [](double k1, double a1, double a2, double k2, double b1, double b2, double& m, double& v) {
        const double cnt = k1 + k2;
        m = 0;
        v = 1;
        if (!(cnt > 0)) return;
        m = (k1 * a1 + k2 * b1) / cnt;
        const double var = (k1 * a2 + k2 * b2) / cnt - m * m;
        if (var > kVarianceTol) v = var;
    };
    double m1, v1, m2, v2;
    pooled(st.n, st.my1, st.my11, st.r, st.mz1, st.mz2, m1, v1);
    pooled(st.n, st.my2, st.my22, st.s, st.mw1, st.mw2, m2, v2);
    return GaussianParams::from_mean_sigma(m1, m2, Sym2{v1, 0, v2});
}

namespace detail {

/// One EM update. The completed-data first and second moments are
/// accumulated as block sums and matched.
inline GaussianParams em_gaussian_step(const SuffStats& st, const GaussianParams& p) {
    const Sym2 sg = p.sigma();
    const double mu1 = p.mu1, mu2 = p.mu2;
    double t1 = 0, t2 = 0, t11 = 0, t12 = 0, t22 = 0;
    if (st.n > 0) {
        t1 += st.n * st.my1;
        t2 += st.n * st.my2;
        t11 += st.n * st.my11;
        t12 += st.n * st.my12;
        t22 += st.n * st.my22;
    }
    if (st.r > 0) {
        // Y2 | Y1 = z ~ N(mu2 + b (z - mu1), v)
        const double b = sg.a12 / sg.a11, v = sg.a22 - sg.a12 * sg.a12 / sg.a11;
        const double e2 = mu2 + b * (st.mz1 - mu1);
        const double cz2 = st.mz2 - 2 * mu1 * st.mz1 + mu1 * mu1;  // mean (z - mu1)^2
        t1 += st.r * st.mz1;
        t2 += st.r * e2;
        t11 += st.r * st.mz2;
        t12 += st.r * (mu2 * st.mz1 + b * (st.mz2 - mu1 * st.mz1));
        t22 += st.r * (v + mu2 * mu2 + 2 * mu2 * b * (st.mz1 - mu1) + b * b * cz2);
    }
    if (st.s > 0) {
        const double b = sg.a12 / sg.a22, v = sg.a11 - sg.a12 * sg.a12 / sg.a22;
        const double e1 = mu1 + b * (st.mw1 - mu2);
        const double cw2 = st.mw2 - 2 * mu2 * st.mw1 + mu2 * mu2;
        t1 += st.s * e1;
        t2 += st.s * st.mw1;
        t22 += st.s * st.mw2;
        t12 += st.s * (mu1 * st.mw1 + b * (st.mw2 - mu2 * st.mw1));
        t11 += st.s * (v + mu1 * mu1 + 2 * mu1 * b * (st.mw1 - mu2) + b * b * cw2);
    }
    const double tot = st.total();
    const double m1 = t1 / tot, m2 = t2 / tot;
    const Sym2 s{t11 / tot - m1 * m1, t12 / tot - m1 * m2, t22 / tot - m2 * m2};
    if (!s.positive_definite()) throw std::domain_error("EM covariance update is not positive definite");
    return GaussianParams::from_mean_sigma(m1, m2, s);
}

inline double max_rel_change(const GaussianParams& a, const GaussianParams& b) {
    const auto x = a.as_array(), y = b.as_array();
    double d = 0;
    for (std::size_t i = 0; i < 5; ++i) d = std::max(d, std::abs(x[i] - y[i]) / (1.0 + std::abs(y[i])));
    return d;
}

}  // namespace detail

/// Stops once the relative parameter change and the per-observation score
/// both drop below em_tol.
inline EMTrace em_gaussian(const SuffStats& st, const GaussianParams& init, double em_tol = kEmTol,
                           int max_iter = kEmMaxIter) {
    st.validate();
    if (!init.relevant()) throw std::domain_error("EM initial point must have positive definite Gamma");
    EMTrace tr;
    const double tot = st.total();
    tr.iterates.push_back({init, loglik(st, init)});
    for (int it = 0; it < max_iter; ++it) {
        const GaussianParams& cur = tr.iterates.back().params;
        const GaussianParams next = detail::em_gaussian_step(st, cur);
        const double ll = loglik(st, next);
        if (ll < tr.iterates.back().loglik - kAscentTol) tr.monotone = false;
        tr.iterates.push_back({next, ll});
        tr.iterations = it + 1;
        tr.score_norm = score(st, next).max_abs() / tot;
        if (detail::max_rel_change(next, cur) < em_tol && tr.score_norm < em_tol) {
            tr.converged = true;
            break;
        }
    }
    return tr;
}

inline EMTrace em_gaussian(const SuffStats& st, double em_tol = kEmTol, int max_iter = kEmMaxIter) {
    return em_gaussian(st, default_gaussian_init(st), em_tol, max_iter);
}

inline void write_trace_csv(std::ostream& os, const EMTrace& tr) {
    os << "iteration,loglik,mu1,mu2,g11,g12,g22\n";
    os.precision(17);
    for (std::size_t i = 0; i < tr.iterates.size(); ++i) {
        const auto& s = tr.iterates[i];
        os << i << ',' << s.loglik << ',' << s.params.mu1 << ',' << s.params.mu2 << ',' << s.params.g11 << ','
           << s.params.g12 << ',' << s.params.g22 << '\n';
    }
}

// ---------------------------------------------------------------------------
// Multinomial

/// sum t_ij log|p_ij| + sum r_i log|p_i+| + sum s_j log|p_+j|; zero counts
/// contribute nothing. Absolute values make this usable on every region of
/// the arrangement, not only the simplex.
inline double multinomial_loglik(const CountTable& tab, const ProbTable& p) {
    double v = 0;
    const std::size_t m = tab.rows(), n = tab.cols();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (tab.t[i][j] > 0) v += tab.t[i][j] * std::log(std::abs(p.p[i][j]));
    for (std::size_t i = 0; i < m; ++i)
        if (tab.rvec[i] > 0) v += tab.rvec[i] * std::log(std::abs(p.row_sum(i)));
    for (std::size_t j = 0; j < n; ++j)
        if (tab.svec[j] > 0) v += tab.svec[j] * std::log(std::abs(p.col_sum(j)));
    return v;
}

struct MultinomialStep {
    ProbTable p;
    double loglik = 0;
};

struct MultinomialTrace {
    std::vector<MultinomialStep> iterates;
    bool converged = false;
    int iterations = 0;
    double kkt_residual = 0;  // max |p_new - p| = max p_ij |grad_ij / total - 1|
    bool monotone = true;

    const ProbTable& final_table() const { return iterates.back().p; }
};

namespace detail {

inline ProbTable em_multinomial_step(const CountTable& tab, const ProbTable& p, double total) {
    const std::size_t m = tab.rows(), n = tab.cols();
    std::vector<double> row(m), col(n);
    for (std::size_t i = 0; i < m; ++i) row[i] = p.row_sum(i);
    for (std::size_t j = 0; j < n; ++j) col[j] = p.col_sum(j);
    constexpr double tiny = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < m; ++i)
        if (tab.rvec[i] > 0 && !(row[i] > tiny)) throw std::domain_error("row margin vanished in EM");
    for (std::size_t j = 0; j < n; ++j)
        if (tab.svec[j] > 0 && !(col[j] > tiny)) throw std::domain_error("column margin vanished in EM");
    ProbTable out = p;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double tt = tab.t[i][j];
            if (tab.rvec[i] > 0) tt += tab.rvec[i] * p.p[i][j] / row[i];
            if (tab.svec[j] > 0) tt += tab.svec[j] * p.p[i][j] / col[j];
            out.p[i][j] = tt / total;
        }
    return out;
}

}  // namespace detail

inline MultinomialTrace em_multinomial(const CountTable& tab, const ProbTable& init, double em_tol = kEmTol,
                                       int max_iter = kEmMaxIter) {
    tab.validate();
    if (init.rows() != tab.rows() || init.cols() != tab.cols())
        throw std::invalid_argument("initial table has the wrong shape");
    for (const auto& row : init.p)
        for (double v : row)
            if (!(v > 0) || !std::isfinite(v)) throw std::domain_error("EM initial table must be strictly positive");
    if (std::abs(init.total() - 1.0) > 1e-10) throw std::domain_error("EM initial table must sum to one");
    const double total = tab.total();
    MultinomialTrace tr;
    tr.iterates.push_back({init, multinomial_loglik(tab, init)});
    for (int it = 0; it < max_iter; ++it) {
        const ProbTable& cur = tr.iterates.back().p;
        ProbTable next = detail::em_multinomial_step(tab, cur, total);
        const double ll = multinomial_loglik(tab, next);
        if (ll < tr.iterates.back().loglik - kAscentTol) tr.monotone = false;
        tr.kkt_residual = next.max_abs_diff(cur);
        tr.iterates.push_back({std::move(next), ll});
        tr.iterations = it + 1;
        if (tr.kkt_residual < em_tol) {
            tr.converged = true;
            break;
        }
    }
    return tr;
}

inline MultinomialTrace em_multinomial(const CountTable& tab, double em_tol = kEmTol, int max_iter = kEmMaxIter) {
    return em_multinomial(tab, ProbTable::uniform(tab.rows(), tab.cols()), em_tol, max_iter);
}

inline void write_trace_csv(std::ostream& os, const MultinomialTrace& tr) {
    os << "iteration,loglik";
    const std::size_t m = tr.iterates.front().p.rows(), n = tr.iterates.front().p.cols();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) os << ",p" << i + 1 << '_' << j + 1;
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
        os << k << ',' << tr.iterates[k].loglik;
        for (const auto& row : tr.iterates[k].p.p)
            for (double v : row) os << ',' << v;
        os << '\n';
    }
}

}  // namespace mlmiss
