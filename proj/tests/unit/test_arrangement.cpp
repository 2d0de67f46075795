#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mlmiss/arrangement.hpp"

using namespace mlmiss;

namespace {

Rational form_value(const SignPartition& part, const std::vector<Rational>& p, int f) {
    const auto a = detail::form_coefficients(part.m, part.n, f);
    Rational v = 0;
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * p[i];
    return v;
}

}  // namespace

TEST(Arrangement, PartitionStringLayout) {
    const SignPartition p{2, 2, 1u | (1u << 4)};
    EXPECT_EQ(p.to_string(), "NP/PP|NP|PP");
    EXPECT_TRUE(p.cell_negative(0, 0));
    EXPECT_TRUE(p.row_negative(0));
    EXPECT_FALSE(p.col_negative(0));
}

TEST(Arrangement, AllPositiveRegionIsBoundedWithInteriorWitness) {
    const auto rc = classify_lp(SignPartition::all_positive(2, 2));
    ASSERT_EQ(rc.status, RegionStatus::bounded);
    Rational total = 0;
    for (const auto& v : rc.witness) {
        EXPECT_GT(v, 0);
        total += v;
    }
    EXPECT_EQ(total, 1);
}

TEST(Arrangement, NegativeCellWithNegativeRowMarginIsNotBounded) {
    // p11 < 0 and p1+ < 0: nonempty (e.g. p = (-2, 1, 2.5, 0.5) / 2) but unbounded.
    const SignPartition part{2, 2, 1u | (1u << 4)};
    const auto rc = classify_lp(part);
    EXPECT_NE(rc.status, RegionStatus::bounded);
    EXPECT_FALSE(classify_combinatorial(part));
    EXPECT_EQ(rc.status, RegionStatus::unbounded);
    const std::vector<Rational> hand{Rational(-1), Rational(1, 2), Rational(5, 4), Rational(1, 4)};
    for (int f = 0; f < part.nforms(); ++f) EXPECT_GT(part.sign(f) * form_value(part, hand, f), 0) << f;
}

TEST(Arrangement, WitnessAndRayRespectSigns) {
    const auto regions = enumerate_regions(2, 2);
    for (const auto& rc : regions) {
        const auto& part = rc.partition;
        if (rc.status == RegionStatus::empty) continue;
        Rational total = 0;
        for (const auto& v : rc.witness) total += v;
        EXPECT_EQ(total, 1);
        for (int f = 0; f < part.nforms(); ++f) EXPECT_GT(part.sign(f) * form_value(part, rc.witness, f), 0);
        if (rc.status == RegionStatus::unbounded) {
            Rational rt = 0;
            bool nonzero = false;
            for (const auto& v : rc.ray) {
                rt += v;
                nonzero = nonzero || v != 0;
            }
            EXPECT_EQ(rt, 0);
            EXPECT_TRUE(nonzero);
            for (int f = 0; f < part.nforms(); ++f) EXPECT_GE(part.sign(f) * form_value(part, rc.ray, f), 0);
        }
    }
}

TEST(Arrangement, LpAndCombinatorialRulesAgree) {
    for (auto [m, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{2, 3}}) {
        const auto regions = enumerate_regions(m, n, 2);
        for (const auto& rc : regions)
            EXPECT_EQ(rc.status == RegionStatus::bounded, classify_combinatorial(rc.partition))
                << rc.partition.to_string();
    }
}

TEST(Arrangement, BoundedRegionCountsMatchFormula) {
    EXPECT_EQ(count_bounded_regions(1, 3), ml_degree(1, 3));
    EXPECT_EQ(count_bounded_regions(2, 2), 5);
    EXPECT_EQ(count_bounded_regions(2, 3, 2), 13);
}

TEST(Arrangement, EnumerationBoundIsEnforced) {
    EXPECT_THROW(enumerate_regions(3, 4), std::length_error);
}

TEST(Arrangement, CsvHeaderAndRowCount) {
    std::ostringstream os;
    write_regions_csv(os, enumerate_regions(1, 2));
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "mask,signs,status,depth,witness,ray");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 32);
}

TEST(DiscreteCritical, FiveRealPointsOneNonnegativeMatchingEm) {
    const CountTable tab{{{3, 5}, {7, 2}}, {4, 6}, {5, 3}};
    const auto pts = discrete_critical_points(tab);
    ASSERT_EQ(pts.size(), 5u);
    int nonneg = 0;
    const double total = tab.total();
    const auto em = em_multinomial(tab, 1e-12);
    for (const auto& pt : pts) {
        ASSERT_TRUE(pt.converged) << pt.error;
        EXPECT_NEAR(pt.p.total(), 1, 1e-12);
        // Stationarity recomputed here from the table.
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                const double g = tab.t[i][j] / pt.p.p[i][j] + tab.rvec[i] / pt.p.row_sum(i) +
                                 tab.svec[j] / pt.p.col_sum(j);
                EXPECT_NEAR(g / total, 1, 1e-8);
            }
        if (pt.nonnegative) {
            ++nonneg;
            EXPECT_TRUE(pt.region.negative == 0);
            EXPECT_LT(pt.p.max_abs_diff(em.final_table()), 1e-7);
        }
    }
    EXPECT_EQ(nonneg, 1);
}

TEST(DiscreteCritical, DistinctPointsForRandomTables) {
    std::mt19937_64 g(8);
    std::uniform_int_distribution<int> c(1, 30);
    for (int trial = 0; trial < 5; ++trial) {
        CountTable tab{{{double(c(g)), double(c(g))}, {double(c(g)), double(c(g))}},
                       {double(c(g)), double(c(g))},
                       {double(c(g)), double(c(g))}};
        const auto pts = discrete_critical_points(tab);
        ASSERT_EQ(pts.size(), 5u);
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b) EXPECT_GT(pts[a].p.max_abs_diff(pts[b].p), 1e-6);
    }
}

TEST(DiscreteCritical, TwoByThreeHasThirteen) {
    const CountTable tab{{{3, 5, 2}, {7, 2, 4}}, {4, 6}, {5, 3, 2}};
    const auto pts = discrete_critical_points(tab, 2);
    EXPECT_EQ(pts.size(), 13u);
    int nonneg = 0;
    for (const auto& pt : pts) {
        EXPECT_TRUE(pt.converged) << pt.region.to_string() << " " << pt.error;
        nonneg += pt.nonnegative;
    }
    EXPECT_EQ(nonneg, 1);
}

// Newton ends where the loglik gain is below roundoff
TEST(DiscreteCritical, ConvergesToTightResidual) {
    const CountTable tab{{{24, 7}, {11, 30}}, {11, 24}, {4, 27}};
    const auto pts = discrete_critical_points(tab);
    ASSERT_EQ(pts.size(), 5u);
    for (const auto& pt : pts) {
        EXPECT_TRUE(pt.converged) << pt.region.to_string() << " " << pt.error;
        EXPECT_LT(pt.residual, 1e-12);
    }
}
