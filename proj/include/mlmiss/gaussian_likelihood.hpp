#pragma once

// Observed-data log-likelihood of the bivariate normal model with a general
// missingness pattern, in the coordinates (mu1, mu2, g11, g12, g22) where
// Gamma = Sigma^{-1}. Additive constants are dropped.

#include <array>
#include <cmath>
#include <stdexcept>

#include "model.hpp"

namespace mlmiss {

struct ScoreVector {
    double d_mu1 = 0, d_mu2 = 0, d_g11 = 0, d_g12 = 0, d_g22 = 0;

    std::array<double, 5> as_array() const { return {d_mu1, d_mu2, d_g11, d_g12, d_g22}; }
    double max_abs() const {
        double m = 0;
        for (double v : as_array()) m = std::max(m, std::abs(v));
        return m;
    }
};

using Matrix5 = std::array<std::array<double, 5>, 5>;

namespace detail {

/// Centered second moments that appear in the likelihood:
///   ay11 = mean (Y1 - mu1)^2,  ay12 = mean (Y1 - mu1)(Y2 - mu2),  ay22,
///   az = mean (Z - mu1)^2,     aw = mean (W - mu2)^2
struct CenteredMoments {
    double ay11, ay12, ay22, az, aw;
    double e1, e2, ez, ew;  // block means minus mu
};

inline CenteredMoments centered(const SuffStats& st, double mu1, double mu2) {
    CenteredMoments c{};
    c.ay11 = st.my11 - 2 * mu1 * st.my1 + mu1 * mu1;
    c.ay22 = st.my22 - 2 * mu2 * st.my2 + mu2 * mu2;
    c.ay12 = st.my12 - (st.my1 * mu2 + st.my2 * mu1) + mu1 * mu2;
    c.az = st.mz2 - 2 * mu1 * st.mz1 + mu1 * mu1;
    c.aw = st.mw2 - 2 * mu2 * st.mw1 + mu2 * mu2;
    c.e1 = st.my1 - mu1;
    c.e2 = st.my2 - mu2;
    c.ez = st.mz1 - mu1;
    c.ew = st.mw1 - mu2;
    return c;
}

inline void check_chart(const GaussianParams& p) {
    if (!(p.g11 > 0 && p.g22 > 0 && p.det_gamma() > 0))
        throw std::domain_error("parameters outside the chart g11 > 0, g22 > 0, det(Gamma) > 0");
}

}  // namespace detail

inline double loglik(const SuffStats& st, const GaussianParams& p) {
    detail::check_chart(p);
    const auto c = detail::centered(st, p.mu1, p.mu2);
    const double a = p.g11, b = p.g12, g = p.g22;
    const double det = a * g - b * b;
    double v = 0.5 * st.total() * std::log(det);
    if (st.n > 0) v -= 0.5 * st.n * (c.ay11 * a + 2 * c.ay12 * b + c.ay22 * g);
    if (st.r > 0) v -= 0.5 * st.r * std::log(g) + 0.5 * st.r * (det / g) * c.az;
    if (st.s > 0) v -= 0.5 * st.s * std::log(a) + 0.5 * st.s * (det / a) * c.aw;
    return v;
}

/// Gradient of loglik. The g12 component carries -(n+r+s) g12 / det(Gamma),
/// the exact derivative of (n+r+s)/2 log det(Gamma).
inline ScoreVector score_unchecked(const SuffStats& st, const GaussianParams& p) {
    const auto c = detail::centered(st, p.mu1, p.mu2);
    const double a = p.g11, b = p.g12, g = p.g22;
    const double det = a * g - b * b;
    const double tot = st.total();
    ScoreVector sc;
    sc.d_g11 = 0.5 * tot * g / det;
    sc.d_g22 = 0.5 * tot * a / det;
    sc.d_g12 = -tot * b / det;
    if (st.n > 0) {
        sc.d_mu1 += st.n * (c.e1 * a + c.e2 * b);
        sc.d_mu2 += st.n * (c.e2 * g + c.e1 * b);
        sc.d_g11 -= 0.5 * st.n * c.ay11;
        sc.d_g22 -= 0.5 * st.n * c.ay22;
        sc.d_g12 -= st.n * c.ay12;
    }
    if (st.r > 0) {
        sc.d_mu1 += st.r * (det / g) * c.ez;
        sc.d_g11 -= 0.5 * st.r * c.az;
        sc.d_g22 -= 0.5 * st.r / g + 0.5 * st.r * (b * b) / (g * g) * c.az;
        sc.d_g12 += st.r * (b / g) * c.az;
    }
    if (st.s > 0) {
        sc.d_mu2 += st.s * (det / a) * c.ew;
        sc.d_g22 -= 0.5 * st.s * c.aw;
        sc.d_g11 -= 0.5 * st.s / a + 0.5 * st.s * (b * b) / (a * a) * c.aw;
        sc.d_g12 += st.s * (b / a) * c.aw;
    }
    return sc;
}

inline ScoreVector score(const SuffStats& st, const GaussianParams& p) {
    detail::check_chart(p);
    return score_unchecked(st, p);
}

/// Second derivatives of loglik in the order (mu1, mu2, g11, g12, g22).
/// Only requires g11, g22 and det(Gamma) to be nonzero.
inline Matrix5 hessian_unchecked(const SuffStats& st, const GaussianParams& p) {
    const auto c = detail::centered(st, p.mu1, p.mu2);
    const double a = p.g11, b = p.g12, g = p.g22;
    const double det = a * g - b * b;
    const double det2 = det * det;
    const double tot = st.total();
    enum { M1, M2, A, B, G };
    Matrix5 h{};

    h[A][A] = -0.5 * tot * g * g / det2;
    h[G][G] = -0.5 * tot * a * a / det2;
    h[B][B] = -tot * (det + 2 * b * b) / det2;
    h[A][B] = tot * b * g / det2;
    h[B][G] = tot * a * b / det2;
    h[A][G] = -0.5 * tot * b * b / det2;

    if (st.n > 0) {
        const double n = st.n;
        h[M1][M1] -= n * a;
        h[M2][M2] -= n * g;
        h[M1][M2] -= n * b;
        h[M1][A] += n * c.e1;
        h[M1][B] += n * c.e2;
        h[M2][G] += n * c.e2;
        h[M2][B] += n * c.e1;
    }
    if (st.r > 0) {
        const double r = st.r;
        h[M1][M1] -= r * det / g;
        h[M1][A] += r * c.ez;
        h[M1][B] -= 2 * r * b * c.ez / g;
        h[M1][G] += r * b * b * c.ez / (g * g);
        h[G][G] += 0.5 * r / (g * g) + r * b * b * c.az / (g * g * g);
        h[B][G] -= r * b * c.az / (g * g);
        h[B][B] += r * c.az / g;
    }
    if (st.s > 0) {
        const double s = st.s;
        h[M2][M2] -= s * det / a;
        h[M2][G] += s * c.ew;
        h[M2][B] -= 2 * s * b * c.ew / a;
        h[M2][A] += s * b * b * c.ew / (a * a);
        h[A][A] += 0.5 * s / (a * a) + s * b * b * c.aw / (a * a * a);
        h[A][B] -= s * b * c.aw / (a * a);
        h[B][B] += s * c.aw / a;
    }
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < i; ++j) h[i][j] = h[j][i];
    return h;
}

inline Matrix5 hessian(const SuffStats& st, const GaussianParams& p) {
    detail::check_chart(p);
    return hessian_unchecked(st, p);
}

}  // namespace mlmiss
