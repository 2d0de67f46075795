#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mlmiss/gaussian_likelihood.hpp"
#include "mlmiss/scenarios.hpp"

using namespace mlmiss;

namespace {

// Sum of log densities, evaluated row by row from the covariance.
double direct_loglik(const Dataset& d, const GaussianParams& p) {
    const Sym2 s = p.sigma();
    const double two_pi = 2 * std::numbers::pi;
    double v = 0;
    for (const auto& y : d.y) {
        const double a = y[0] - p.mu1, b = y[1] - p.mu2;
        const double q = (s.a22 * a * a - 2 * s.a12 * a * b + s.a11 * b * b) / s.det();
        v += -std::log(two_pi) - 0.5 * std::log(s.det()) - 0.5 * q;
    }
    for (double z : d.z) v += -0.5 * std::log(two_pi * s.a11) - (z - p.mu1) * (z - p.mu1) / (2 * s.a11);
    for (double w : d.w) v += -0.5 * std::log(two_pi * s.a22) - (w - p.mu2) * (w - p.mu2) / (2 * s.a22);
    return v;
}

GaussianParams random_chart_point(std::mt19937_64& g) {
    return random_gaussian_params(g);
}

SuffStats random_data_stats(std::mt19937_64& g, Dataset* out = nullptr) {
    const GaussianParams p = random_gaussian_params(g);
    Dataset d;
    for (int i = 0; i < 40; ++i) {
        const auto x = sample_gaussian(g, p);
        const double u = uniform01(g);
        if (u < 0.2) d.z.push_back(x[0]);
        else if (u < 0.4) d.w.push_back(x[1]);
        else d.y.push_back(x);
    }
    if (out) *out = d;
    return reduce(d);
}

}  // namespace

TEST(Likelihood, MatchesDirectDensitySumUpToConstant) {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d;
        const SuffStats st = random_data_stats(g, &d);
        const GaussianParams p = random_chart_point(g);
        const double constant = -(st.n + 0.5 * (st.r + st.s)) * std::log(2 * std::numbers::pi);
        EXPECT_NEAR(loglik(st, p) + constant, direct_loglik(d, p), 1e-9 * (1 + std::abs(direct_loglik(d, p))));
    }
}

TEST(Likelihood, ScoreMatchesCentralDifferences) {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 50; ++trial) {
        const SuffStats st = random_data_stats(g);
        const GaussianParams p = random_chart_point(g);
        const auto sc = score(st, p).as_array();
        const auto x = p.as_array();
        for (int i = 0; i < 5; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            auto xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd =
                (loglik(st, GaussianParams::from_array(xp)) - loglik(st, GaussianParams::from_array(xm))) / (2 * h);
            EXPECT_NEAR(sc[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "component " << i;
        }
    }
}

TEST(Likelihood, HessianMatchesDifferencesOfScore) {
    std::mt19937_64 g(13);
    for (int trial = 0; trial < 50; ++trial) {
        const SuffStats st = random_data_stats(g);
        const GaussianParams p = random_chart_point(g);
        const Matrix5 hs = hessian(st, p);
        const auto x = p.as_array();
        for (int j = 0; j < 5; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const auto sp = score(st, GaussianParams::from_array(xp)).as_array();
            const auto sm = score(st, GaussianParams::from_array(xm)).as_array();
            for (int i = 0; i < 5; ++i) {
                const double fd = (sp[i] - sm[i]) / (2 * h);
                EXPECT_NEAR(hs[i][j], fd, 1e-4 * std::max(1.0, std::abs(fd))) << i << "," << j;
            }
        }
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < i; ++j) EXPECT_DOUBLE_EQ(hs[i][j], hs[j][i]);
    }
}

TEST(Likelihood, CompleteDataScoreVanishesAtSampleMoments) {
    std::mt19937_64 g(14);
    Dataset d;
    for (int i = 0; i < 30; ++i) d.y.push_back(sample_gaussian(g, GaussianParams{}));
    const SuffStats st = reduce(d);
    const Sym2 cov{st.my11 - st.my1 * st.my1, st.my12 - st.my1 * st.my2, st.my22 - st.my2 * st.my2};
    const GaussianParams mle = GaussianParams::from_mean_sigma(st.my1, st.my2, cov);
    EXPECT_LT(score(st, mle).max_abs(), 1e-10 * st.n * 10);
}

TEST(Likelihood, RejectsPointsOffTheChart) {
    const SuffStats st{10, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0};
    EXPECT_THROW(loglik(st, GaussianParams{0, 0, 1, 2, 1}), std::domain_error);
    EXPECT_THROW(score(st, GaussianParams{0, 0, -1, 0, 1}), std::domain_error);
}
