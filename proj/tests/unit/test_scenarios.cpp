#include <gtest/gtest.h>

#include <sstream>

#include "mlmiss/scenarios.hpp"

using namespace mlmiss;

TEST(Scenarios, NoCensoringGivesCompleteData) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::mcar;
    spec.censor_prob = 0;
    spec.master_seed = 4;
    const SuffStats st = generate(spec, 0);
    EXPECT_EQ(st.n, spec.samples_per_trial);
    EXPECT_EQ(st.r, 0);
    EXPECT_EQ(st.s, 0);
}

TEST(Scenarios, MarWithZeroWeightEqualsMcar) {
    ScenarioSpec a, b;
    a.kind = ScenarioKind::mcar;
    b.kind = ScenarioKind::mar;
    b.mixture_weight = 0;
    a.master_seed = b.master_seed = 99;
    for (int t = 0; t < 20; ++t) EXPECT_EQ(generate(a, t).sums(), generate(b, t).sums());
}

TEST(Scenarios, McarCensoringFraction) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::mcar;
    spec.samples_per_trial = 100000;
    spec.master_seed = 5;
    const Dataset d = detail::scenario_dataset(spec, 0, 0);
    // Rows with both cells censored are dropped: 0.04 of rows.
    const double rows = spec.samples_per_trial;
    const double censored_cells = static_cast<double>(d.z.size() + d.w.size()) + 2 * (rows - static_cast<double>(d.y.size() + d.z.size() + d.w.size()));
    EXPECT_NEAR(censored_cells / (2 * rows), 0.2, 0.004);
}

TEST(Scenarios, GenerationIsDeterministicPerTrial) {
    for (auto kind : {ScenarioKind::mcar, ScenarioKind::mar, ScenarioKind::nmar, ScenarioKind::wild,
                      ScenarioKind::random_stats}) {
        ScenarioSpec spec;
        spec.kind = kind;
        spec.master_seed = 1234;
        EXPECT_EQ(generate(spec, 7).sums(), generate(spec, 7).sums());
        EXPECT_NE(generate(spec, 7).sums(), generate(spec, 8).sums());
    }
}

TEST(Scenarios, NmarCensorsOnlyBelowThreshold) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::nmar;
    spec.master_seed = 8;
    const Dataset d = detail::scenario_dataset(spec, 0, 0);
    for (const auto& y : d.y) {
        EXPECT_GE(y[0], spec.threshold);
        EXPECT_GE(y[1], spec.threshold);
    }
    for (double z : d.z) EXPECT_GE(z, spec.threshold);
    for (double w : d.w) EXPECT_GE(w, spec.threshold);
}

TEST(Scenarios, WildSecondCoordinateOnlyRowsComeFromTheInterval) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::wild;
    spec.master_seed = 9;
    const Dataset d = detail::scenario_dataset(spec, 0, 0);
    ASSERT_FALSE(d.w.empty());
    for (double w : d.w) {
        EXPECT_GE(w, 5);
        EXPECT_LE(w, 6);
    }
    bool z_outside = false;
    for (double z : d.z) z_outside = z_outside || z < 5 || z > 6;
    EXPECT_TRUE(z_outside);
    spec.wild_z = SampleDistribution::uniform;
    for (double z : detail::scenario_dataset(spec, 0, 0).z) {
        EXPECT_GE(z, 5);
        EXPECT_LE(z, 6);
    }
}

TEST(Scenarios, RandomStatsRanges) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::random_stats;
    spec.master_seed = 10;
    for (int t = 0; t < 50; ++t) {
        const SuffStats s = generate(spec, t);
        for (double c : {s.n, s.r, s.s}) {
            EXPECT_GE(c, 10);
            EXPECT_LE(c, 100);
            EXPECT_EQ(c, std::round(c));
        }
        for (double m : {s.my1, s.my2, s.mz1, s.mw1}) EXPECT_LE(std::abs(m), 3);
        EXPECT_GE(s.my11 - s.my1 * s.my1, 0.1);
        EXPECT_LE(s.mz2 - s.mz1 * s.mz1, 4);
    }
}

TEST(Scenarios, SpecValidation) {
    ScenarioSpec spec;
    spec.trials = 0;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = {};
    spec.samples_per_trial = 3;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = {};
    spec.mixture_weight = 1.5;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Scenarios, RunIsReproducibleAndIndependentOfJobs) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::mar;
    spec.trials = 6;
    spec.master_seed = 3;
    SolverOptions one, many;
    many.jobs = 3;
    const Histogram a = run(spec, one), b = run(spec, many);
    EXPECT_EQ(to_json_value(a).dump(), to_json_value(b).dump());
    int total = 0;
    for (const auto& [k, v] : a.counts) {
        EXPECT_EQ(k % 2, 1);
        total += v;
    }
    EXPECT_EQ(total + a.n_errors, spec.trials);
    std::ostringstream os;
    write_histogram_csv(os, a);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
              "trial,n,r,s,n_complex,n_real,n_relevant,n_relevant_max,method,error");
}
