#include <gtest/gtest.h>

#include <boost/multiprecision/gmp.hpp>

#include "mlmiss/rational_lp.hpp"

using namespace mlmiss;
using Q = boost::multiprecision::mpq_rational;

TEST(RationalLp, TextbookMaximization) {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
    LinearProgram<Q> lp;
    lp.nvars = 2;
    lp.c = {3, 5};
    lp.add({1, 0}, Relation::le, 4);
    lp.add({0, 2}, Relation::le, 12);
    lp.add({3, 2}, Relation::le, 18);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_EQ(r.value, 36);
    EXPECT_EQ(r.x[0], 2);
    EXPECT_EQ(r.x[1], 6);
}

TEST(RationalLp, ExactFractionalOptimum) {
    // max x + y, 3x + y <= 2, x + 3y <= 2 -> (1/2, 1/2)
    LinearProgram<Q> lp;
    lp.nvars = 2;
    lp.c = {1, 1};
    lp.add({3, 1}, Relation::le, 2);
    lp.add({1, 3}, Relation::le, 2);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_EQ(r.x[0], Q(1, 2));
    EXPECT_EQ(r.value, 1);
}

TEST(RationalLp, DetectsInfeasibility) {
    LinearProgram<Q> lp;
    lp.nvars = 1;
    lp.c = {1};
    lp.add({1}, Relation::ge, 3);
    lp.add({1}, Relation::le, 2);
    EXPECT_EQ(solve_lp(lp).status, LPStatus::infeasible);
}

TEST(RationalLp, DetectsUnboundedness) {
    LinearProgram<Q> lp;
    lp.nvars = 2;
    lp.c = {1, 0};
    lp.add({1, -1}, Relation::le, 1);
    EXPECT_EQ(solve_lp(lp).status, LPStatus::unbounded);
}

TEST(RationalLp, FreeVariablesAndEqualities) {
    // max -x, x free, x + y = -3, 0 <= y <= 1 -> y = 1, x = -4
    LinearProgram<Q> lp;
    lp.nvars = 2;
    lp.c = {-1, 0};
    lp.free = {true, false};
    lp.add({1, 1}, Relation::eq, -3);
    lp.add({0, 1}, Relation::le, 1);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_EQ(r.x[0], -4);
    EXPECT_EQ(r.x[1], 1);
    EXPECT_EQ(r.value, 4);
}

TEST(RationalLp, RedundantEqualitiesAreHandled) {
    LinearProgram<Q> lp;
    lp.nvars = 2;
    lp.c = {1, 2};
    lp.add({1, 1}, Relation::eq, 1);
    lp.add({2, 2}, Relation::eq, 2);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_EQ(r.value, 2);
}

TEST(RationalLp, DegenerateCycleProneProblemTerminates) {
    // Beale's example; cycles under the textbook largest-coefficient rule.
    LinearProgram<Q> lp;
    lp.nvars = 4;
    lp.c = {Q(3, 4), -150, Q(1, 50), -6};
    lp.add({Q(1, 4), -60, Q(-1, 25), 9}, Relation::le, 0);
    lp.add({Q(1, 2), -90, Q(-1, 50), 3}, Relation::le, 0);
    lp.add({0, 0, 1, 0}, Relation::le, 1);
    const auto r = solve_lp(lp);
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_EQ(r.value, Q(1, 20));
}
