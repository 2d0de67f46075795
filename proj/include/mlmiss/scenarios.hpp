#pragma once

// Seeded data generators for the censoring regimes and the experiment
// runner that tabulates real / relevant / maximum counts per trial.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "critical_system.hpp"
#include "homotopy_solver.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace mlmiss {

enum class ScenarioKind { mcar, mar, nmar, wild, random_stats };
enum class SampleDistribution { gaussian, uniform };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::mcar: return "mcar";
        case ScenarioKind::mar: return "mar";
        case ScenarioKind::nmar: return "nmar";
        case ScenarioKind::wild: return "wild";
        case ScenarioKind::random_stats: return "random_stats";
    }
    return "?";
}

inline ScenarioKind scenario_from_string(const std::string& s) {
    for (auto k : {ScenarioKind::mcar, ScenarioKind::mar, ScenarioKind::nmar, ScenarioKind::wild, ScenarioKind::random_stats})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown scenario '" + s + "'");
}

inline std::string to_string(SampleDistribution d) { return d == SampleDistribution::gaussian ? "gaussian" : "uniform"; }

inline SampleDistribution distribution_from_string(const std::string& s) {
    if (s == "gaussian") return SampleDistribution::gaussian;
    if (s == "uniform") return SampleDistribution::uniform;
    throw std::invalid_argument("unknown distribution '" + s + "'");
}

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::mcar;
    int samples_per_trial = 100;
    int trials = 200;
    std::uint64_t master_seed = 0;
    double mixture_weight = 0.5;                    // mar: share of rows under the threshold mechanism
    std::optional<GaussianParams> base_params;      // nullopt: drawn per trial
    SampleDistribution distribution = SampleDistribution::gaussian;  // mcar / mar
    double censor_prob = 0.2;                       // per-cell MCAR censoring
    double threshold = -1.0;                        // mar / nmar censoring threshold
    double nmar_correlation = -0.95;
    double nmar_mean = -0.5;                        // both coordinates
    double wild_low = 5.0, wild_high = 6.0;         // support of W in the wild scenario
    SampleDistribution wild_z = SampleDistribution::gaussian;  // uniform: Z also from the wild interval

    void validate() const {
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (kind != ScenarioKind::random_stats && samples_per_trial < 4)
            throw std::invalid_argument("samples_per_trial must be >= 4");
        if (!(mixture_weight >= 0 && mixture_weight <= 1)) throw std::invalid_argument("mixture_weight must lie in [0, 1]");
        if (!(censor_prob >= 0 && censor_prob < 1)) throw std::invalid_argument("censor_prob must lie in [0, 1)");
        if (!(std::abs(nmar_correlation) < 1)) throw std::invalid_argument("nmar_correlation must lie in (-1, 1)");
        if (!std::isfinite(nmar_mean)) throw std::invalid_argument("nmar_mean must be finite");
        if (!(wild_low < wild_high)) throw std::invalid_argument("wild interval is empty");
        if (base_params && !base_params->relevant()) throw std::invalid_argument("base_params must be positive definite");
    }
};

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream `stream` of attempt `attempt` of trial `trial`.
inline std::mt19937_64 trial_stream(std::uint64_t master, std::uint64_t trial, std::uint64_t attempt,
                                    std::uint64_t stream) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ trial);
    h = splitmix64(h ^ (attempt * 0x100000001b3ULL));
    h = splitmix64(h ^ (stream * 0xd6e8feb86659fd93ULL));
    return std::mt19937_64(h);
}

/// Uniform in (0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) { return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return lo + (hi - lo) * uniform01(g); }

/// Box-Muller; both variates are used.
inline std::array<double, 2> normal_pair(std::mt19937_64& g) {
    const double u1 = uniform01(g), u2 = uniform01(g);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    return {rad * std::cos(2 * std::numbers::pi * u2), rad * std::sin(2 * std::numbers::pi * u2)};
}

/// mu uniform in [-2, 2]^2; Sigma = A A^T + 0.1 I with A uniform in [-1, 1].
inline GaussianParams random_gaussian_params(std::mt19937_64& g) {
    const double m1 = uniform(g, -2, 2), m2 = uniform(g, -2, 2);
    double a[4];
    for (double& v : a) v = uniform(g, -1, 1);
    const Sym2 s{a[0] * a[0] + a[1] * a[1] + 0.1, a[0] * a[2] + a[1] * a[3], a[2] * a[2] + a[3] * a[3] + 0.1};
    return GaussianParams::from_mean_sigma(m1, m2, s);
}

/// x = mu + L e with L the Cholesky factor of Sigma.
inline std::array<double, 2> sample_gaussian(std::mt19937_64& g, const GaussianParams& p) {
    const Sym2 s = p.sigma();
    const double l11 = std::sqrt(s.a11), l21 = s.a12 / l11, l22 = std::sqrt(s.a22 - l21 * l21);
    const auto e = normal_pair(g);
    return {p.mu1 + l11 * e[0], p.mu2 + l21 * e[0] + l22 * e[1]};
}

// ---------------------------------------------------------------------------
// Generation

namespace detail {

enum Stream : std::uint64_t { kParams = 1, kData = 2, kCensor = 3, kMixture = 4, kStats = 5 };

inline GaussianParams scenario_params(const ScenarioSpec& spec, std::mt19937_64& g) {
    if (spec.base_params) return *spec.base_params;
    if (spec.kind == ScenarioKind::nmar) {
        const double rho = spec.nmar_correlation;
        return GaussianParams::from_mean_sigma(spec.nmar_mean, spec.nmar_mean, Sym2{1, rho, 1});
    }
    GaussianParams p = random_gaussian_params(g);
    if (spec.kind == ScenarioKind::wild) p = GaussianParams::from_mean_sigma(0, 0, p.sigma());
    return p;
}

inline void add_row(Dataset& d, double x1, double x2, bool miss1, bool miss2) {
    if (miss1 && miss2) return;
    if (miss2) d.z.push_back(x1);
    else if (miss1) d.w.push_back(x2);
    else d.y.push_back({x1, x2});
}

inline Dataset scenario_dataset(const ScenarioSpec& spec, std::uint64_t trial, std::uint64_t attempt) {
    auto gp = trial_stream(spec.master_seed, trial, attempt, kParams);
    auto gd = trial_stream(spec.master_seed, trial, attempt, kData);
    auto gc = trial_stream(spec.master_seed, trial, attempt, kCensor);
    auto gm = trial_stream(spec.master_seed, trial, attempt, kMixture);
    const GaussianParams p = scenario_params(spec, gp);
    Dataset d;
    for (int k = 0; k < spec.samples_per_trial; ++k) {
        std::array<double, 2> x;
        if (spec.distribution == SampleDistribution::uniform &&
            (spec.kind == ScenarioKind::mcar || spec.kind == ScenarioKind::mar))
            x = {uniform(gd, -1, 1), uniform(gd, -1, 1)};
        else
            x = sample_gaussian(gd, p);
        // Every row consumes the same number of draws from each stream.
        const bool c1 = uniform01(gc) < spec.censor_prob, c2 = uniform01(gc) < spec.censor_prob;
        const bool threshold_row = uniform01(gm) < spec.mixture_weight;
        const double wv = uniform(gd, spec.wild_low, spec.wild_high);
        const double zv = uniform(gd, spec.wild_low, spec.wild_high);
        switch (spec.kind) {
            case ScenarioKind::mcar: add_row(d, x[0], x[1], c1, c2); break;
            case ScenarioKind::mar:
                if (threshold_row) add_row(d, x[0], x[1], false, x[0] < spec.threshold);
                else add_row(d, x[0], x[1], c1, c2);
                break;
            case ScenarioKind::nmar: add_row(d, x[0], x[1], x[0] < spec.threshold, x[1] < spec.threshold); break;
            case ScenarioKind::wild:
                // Censoring pattern as in mcar; W-only rows ignore the Gaussian draw.
                add_row(d, c2 && spec.wild_z == SampleDistribution::uniform ? zv : x[0], c1 ? wv : x[1], c1, c2);
                break;
            case ScenarioKind::random_stats: break;
        }
    }
    return d;
}

inline SuffStats random_stats_draw(std::mt19937_64& g) {
    std::uniform_int_distribution<int> count(10, 100);
    SuffStats s;
    s.n = count(g);
    s.r = count(g);
    s.s = count(g);
    s.my1 = uniform(g, -3, 3);
    s.my2 = uniform(g, -3, 3);
    const double v1 = uniform(g, 0.1, 4), v2 = uniform(g, 0.1, 4);
    s.my11 = s.my1 * s.my1 + v1;
    s.my22 = s.my2 * s.my2 + v2;
    s.my12 = s.my1 * s.my2 + uniform(g, -0.9, 0.9) * std::sqrt(v1 * v2);
    s.mz1 = uniform(g, -3, 3);
    s.mz2 = s.mz1 * s.mz1 + uniform(g, 0.1, 4);
    s.mw1 = uniform(g, -3, 3);
    s.mw2 = s.mw1 * s.mw1 + uniform(g, 0.1, 4);
    return s;
}

/// Complete-case covariance (and each observed block variance) bounded away from zero.
inline bool usable(const SuffStats& st) {
    if (!(st.n > 0)) return false;
    const double v1 = st.my11 - st.my1 * st.my1, v2 = st.my22 - st.my2 * st.my2, c = st.my12 - st.my1 * st.my2;
    if (!(v1 > kVarianceTol && v2 > kVarianceTol && v1 * v2 - c * c > kVarianceTol * (v1 * v2))) return false;
    if (st.r > 0 && !(st.mz2 - st.mz1 * st.mz1 > kVarianceTol)) return false;
    if (st.s > 0 && !(st.mw2 - st.mw1 * st.mw1 > kVarianceTol)) return false;
    return st.all_finite();
}

}  // namespace detail

inline constexpr int kMaxRedraws = 100;

/// Deterministic in (master_seed, trial_index); degenerate draws are
/// replaced by the next attempt's streams.
inline SuffStats generate(const ScenarioSpec& spec, std::uint64_t trial_index) {
    spec.validate();
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        SuffStats st;
        if (spec.kind == ScenarioKind::random_stats) {
            auto g = trial_stream(spec.master_seed, trial_index, static_cast<std::uint64_t>(attempt), detail::kStats);
            st = detail::random_stats_draw(g);
        } else {
            st = reduce(detail::scenario_dataset(spec, trial_index, static_cast<std::uint64_t>(attempt)));
        }
        if (detail::usable(st)) return st;
    }
    throw std::runtime_error("scenario trial " + std::to_string(trial_index) + " stayed degenerate after " +
                             std::to_string(kMaxRedraws) + " redraws");
}

// ---------------------------------------------------------------------------
// Runner

struct TrialRecord {
    int trial = 0;
    SuffStats stats;
    int n_complex = 0, n_real = 0, n_relevant = 0, n_relevant_max = 0;
    std::string method;
    bool ok = false;
    std::string error;
};

struct Histogram {
    ScenarioSpec spec;
    std::vector<TrialRecord> records;
    std::map<int, int> counts;  // n_real -> trials, solved trials only
    int n_errors = 0;

    int solved() const { return static_cast<int>(records.size()) - n_errors; }

    double frequency(int n_real) const {
        auto it = counts.find(n_real);
        return (it == counts.end() || solved() == 0) ? 0.0 : static_cast<double>(it->second) / solved();
    }

    /// Fraction of solved trials with this exact (n_real, n_relevant, n_relevant_max).
    double pattern_frequency(int n_real, std::optional<int> n_relevant, std::optional<int> n_relevant_max) const {
        if (solved() == 0) return 0;
        int c = 0;
        for (const auto& r : records)
            if (r.ok && r.n_real == n_real && (!n_relevant || r.n_relevant == *n_relevant) &&
                (!n_relevant_max || r.n_relevant_max == *n_relevant_max))
                ++c;
        return static_cast<double>(c) / solved();
    }
};

/// Anchor once, then one parameter homotopy per trial. Solver errors are
/// recorded on the trial and excluded from the counts.
inline Histogram run(const ScenarioSpec& spec, const Anchor& anchor, const SolverOptions& opt = {}) {
    spec.validate();
    Histogram h;
    h.spec = spec;
    h.records.resize(static_cast<std::size_t>(spec.trials));
    SolverOptions inner = opt;
    inner.jobs = 1;  // parallelism is across trials
    parallel_for(h.records.size(), opt.jobs, [&](std::size_t i) {
        TrialRecord& rec = h.records[i];
        rec.trial = static_cast<int>(i);
        try {
            rec.stats = generate(spec, i);
            const std::uint64_t seed = splitmix64(spec.master_seed ^ splitmix64(0x736f6c76ULL + i));
            const SolveReport rep = solve_parameter_homotopy(build_full(rec.stats), anchor.report, anchor.stats, seed, inner);
            rec.n_complex = rep.n_complex;
            rec.n_real = rep.n_real;
            rec.n_relevant = rep.n_relevant;
            rec.n_relevant_max = rep.n_relevant_max;
            rec.method = rep.method;
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    });
    for (const auto& r : h.records) {
        if (r.ok) ++h.counts[r.n_real];
        else ++h.n_errors;
    }
    return h;
}

inline Histogram run(const ScenarioSpec& spec, const SolverOptions& opt = {}) {
    return run(spec, make_anchor(splitmix64(spec.master_seed ^ 0x616e63686f72ULL), opt), opt);
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
    os << "trial,n,r,s,n_complex,n_real,n_relevant,n_relevant_max,method,error\n";
    for (const auto& r : h.records) {
        os << r.trial << ',' << r.stats.n << ',' << r.stats.r << ',' << r.stats.s << ',' << r.n_complex << ','
           << r.n_real << ',' << r.n_relevant << ',' << r.n_relevant_max << ',' << r.method << ',';
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n') c = ' ';
        os << err << '\n';
    }
}

inline json to_json_value(const ScenarioSpec& s) {
    json j{{"kind", to_string(s.kind)},
           {"samples_per_trial", s.samples_per_trial},
           {"trials", s.trials},
           {"master_seed", s.master_seed},
           {"mixture_weight", s.mixture_weight},
           {"distribution", to_string(s.distribution)},
           {"censor_prob", s.censor_prob},
           {"threshold", s.threshold},
           {"nmar_correlation", s.nmar_correlation},
           {"nmar_mean", s.nmar_mean},
           {"wild_interval", {s.wild_low, s.wild_high}},
           {"wild_z", to_string(s.wild_z)}};
    if (s.base_params) j["base_params"] = *s.base_params;
    else j["base_params"] = "random";
    return j;
}

/// Aggregate: counts per n_real and, within each n_real, the joint
/// distribution of (n_relevant, n_relevant_max).
inline json to_json_value(const Histogram& h) {
    json counts = json::object(), patterns = json::object();
    for (int k : {1, 3, 5, 7, 9}) counts[std::to_string(k)] = 0;
    for (const auto& [k, c] : h.counts) counts[std::to_string(k)] = c;
    std::map<int, std::map<std::string, int>> pat;
    for (const auto& r : h.records)
        if (r.ok) ++pat[r.n_real]["relevant=" + std::to_string(r.n_relevant) + ",max=" + std::to_string(r.n_relevant_max)];
    for (const auto& [k, m] : pat) patterns[std::to_string(k)] = m;
    return json{{"spec", to_json_value(h.spec)},
                {"trials", h.records.size()},
                {"solved", h.solved()},
                {"errors", h.n_errors},
                {"counts", counts},
                {"patterns", patterns}};
}

}  // namespace mlmiss
