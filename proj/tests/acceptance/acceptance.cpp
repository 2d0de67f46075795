// Acceptance checks. Each criterion prints exactly one "criterion N: PASS|FAIL"
// line; lines starting with '#' are diagnostics. Criteria 2 and 3 aggregate
// the solves of criteria 1, 4 and 5, which are cached in the working
// directory and recomputed when missing or built by a different binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlmiss/arrangement.hpp"
#include "mlmiss/combinatorics.hpp"
#include "mlmiss/em.hpp"
#include "mlmiss/homotopy_solver.hpp"
#include "mlmiss/scenarios.hpp"

using namespace mlmiss;

namespace {

// Pinned settings.
constexpr std::uint64_t kSeedC1 = 20240611;
constexpr int kC1Instances = 100;
constexpr double kC1Residual = 1e-8;

constexpr std::uint64_t kSeedC4 = 1000;
constexpr int kC4Trials = 200;
constexpr double kC4Modal = 0.90;
constexpr double kC4Nmar = 0.55;
constexpr double kC4Wild = 0.65;
constexpr double kC4RandomLo = 0.03, kC4RandomHi = 0.35;

constexpr std::uint64_t kSeedC5 = 5005;
constexpr int kC5Datasets = 50;
constexpr double kC5Match = 1e-6;

constexpr std::uint64_t kSeedC10 = 1010;
constexpr int kC10Tables = 10;
constexpr double kC10Match = 1e-7;

constexpr std::uint64_t kSeedC11 = 1111;
constexpr int kC11Points = 100;
constexpr double kC11Score = 1e-5, kC11Hessian = 1e-4;

const std::string kBuildId = std::string(__DATE__) + " " + __TIME__;

unsigned g_jobs = 0;
std::filesystem::path g_cache_dir = ".";

struct SolveSummary {
    std::string suite;
    int n_complex = 0, n_real = 0, n_relevant = 0, n_relevant_max = 0;
};

void to_json(json& j, const SolveSummary& s) {
    j = json{{"suite", s.suite}, {"n_complex", s.n_complex}, {"n_real", s.n_real},
             {"n_relevant", s.n_relevant}, {"n_relevant_max", s.n_relevant_max}};
}
void from_json(const json& j, SolveSummary& s) {
    j.at("suite").get_to(s.suite);
    j.at("n_complex").get_to(s.n_complex);
    j.at("n_real").get_to(s.n_real);
    j.at("n_relevant").get_to(s.n_relevant);
    j.at("n_relevant_max").get_to(s.n_relevant_max);
}

SolveSummary summarize(const std::string& suite, const SolveReport& r) {
    return {suite, r.n_complex, r.n_real, r.n_relevant, r.n_relevant_max};
}

std::filesystem::path cache_path(int criterion) {
    return g_cache_dir / ("acceptance_solves_" + std::to_string(criterion) + ".json");
}

void save_cache(int criterion, const std::vector<SolveSummary>& solves) {
    std::filesystem::create_directories(g_cache_dir);
    const auto p = cache_path(criterion);
    const auto tmp = p.string() + ".tmp";
    std::ofstream(tmp) << json{{"build", kBuildId}, {"solves", solves}}.dump() << "\n";
    std::filesystem::rename(tmp, p);
}

std::optional<std::vector<SolveSummary>> load_cache(int criterion) {
    std::ifstream in(cache_path(criterion));
    if (!in) return std::nullopt;
    try {
        const json j = json::parse(in);
        if (j.at("build") != kBuildId) return std::nullopt;
        return j.at("solves").get<std::vector<SolveSummary>>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

bool report(int criterion, bool pass, const std::string& detail) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " " << detail << std::endl;
    return pass;
}

SolverOptions solver_options() {
    SolverOptions opt;
    opt.jobs = g_jobs;
    return opt;
}

// ---------------------------------------------------------------------------

bool criterion1() {
    std::mt19937_64 rng(kSeedC1);
    std::vector<SuffStats> inst(kC1Instances);
    for (auto& s : inst) s = random_integer_stats(rng);
    std::vector<SolveReport> reps(inst.size());
    std::vector<std::string> errors(inst.size());
    parallel_for(inst.size(), g_jobs, [&](std::size_t i) {
        try {
            reps[i] = solve_total_degree(inst[i], kSeedC1 + i);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    int good = 0;
    double worst = 0;
    std::vector<SolveSummary> solves;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        if (!errors[i].empty()) {
            std::cout << "# instance " << i << " error: " << errors[i] << "\n";
            continue;
        }
        double res = 0;
        for (const auto& p : reps[i].points) res = std::max(res, p.residual);
        worst = std::max(worst, res);
        const bool ok = reps[i].n_complex == 9 && res < kC1Residual;
        if (!ok) std::cout << "# instance " << i << " n_complex " << reps[i].n_complex << " max residual " << res
                           << " stats " << json(inst[i]).dump() << "\n";
        good += ok;
        solves.push_back(summarize("integer", reps[i]));
    }
    save_cache(1, solves);
    return report(1, good == kC1Instances,
                  std::to_string(good) + "/" + std::to_string(kC1Instances) +
                      " instances with 9 roots; worst residual " + fmt(worst));
}

struct SuiteResult {
    Histogram hist;
    int pattern_trials(int n_real, int n_relevant, int n_max) const {
        int c = 0;
        for (const auto& r : hist.records)
            c += r.ok && r.n_real == n_real && r.n_relevant == n_relevant && r.n_relevant_max == n_max;
        return c;
    }
};

bool criterion4() {
    std::vector<SolveSummary> solves;
    bool pass = true;
    std::ostringstream detail;
    int suite_index = 0;
    for (auto kind : {ScenarioKind::mcar, ScenarioKind::mar, ScenarioKind::nmar, ScenarioKind::wild,
                      ScenarioKind::random_stats}) {
        ScenarioSpec spec;
        spec.kind = kind;
        spec.trials = kC4Trials;
        spec.master_seed = kSeedC4 + static_cast<std::uint64_t>(suite_index++);
        const auto t0 = std::chrono::steady_clock::now();
        SuiteResult s{run(spec, solver_options())};
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const Histogram& h = s.hist;
        for (const auto& r : h.records)
            if (r.ok) solves.push_back({to_string(kind), r.n_complex, r.n_real, r.n_relevant, r.n_relevant_max});
        const double solved = std::max(1, h.solved());
        std::cout << "# " << to_string(kind) << ": counts " << to_json_value(h)["counts"].dump() << " patterns "
                  << to_json_value(h)["patterns"].dump() << " errors " << h.n_errors << " (" << secs << " s)\n";
        bool ok = false;
        double freq = 0;
        switch (kind) {
            case ScenarioKind::mcar:
            case ScenarioKind::mar:
                freq = h.frequency(1);
                ok = freq >= kC4Modal;
                break;
            case ScenarioKind::nmar:
                freq = s.pattern_trials(3, 3, 2) / solved;
                ok = freq >= kC4Nmar;
                break;
            case ScenarioKind::wild:
                freq = s.pattern_trials(7, 3, 2) / solved;
                ok = freq >= kC4Wild;
                break;
            case ScenarioKind::random_stats:
                freq = h.frequency(9);
                ok = freq >= kC4RandomLo && freq <= kC4RandomHi;
                break;
        }
        detail << to_string(kind) << "=" << freq << (ok ? "" : "(fail)") << " ";
        pass = pass && ok;
    }
    save_cache(4, solves);
    return report(4, pass, detail.str());
}

bool criterion5() {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::mar;
    spec.trials = kC5Datasets;
    spec.master_seed = kSeedC5;
    const Anchor anchor = make_anchor(kSeedC5);
    std::vector<int> ok(kC5Datasets, 0);
    std::vector<SolveSummary> solves(kC5Datasets);
    std::vector<std::string> notes(kC5Datasets);
    parallel_for(kC5Datasets, g_jobs, [&](std::size_t t) {
        try {
            const SuffStats st = generate(spec, t);
            const EMTrace tr = em_gaussian(st);
            const SolveReport rep = solve_parameter_homotopy(build_full(st), anchor.report, anchor.stats, t + 1);
            solves[t] = summarize("em_mar", rep);
            const auto em = tr.final_params().as_array();
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : rep.points) {
                if (!(p.is_relevant && p.hessian_class == HessianClass::max)) continue;
                const auto x = p.real_part();
                double d = 0;
                for (int i = 0; i < 5; ++i) d = std::max(d, std::abs(x[i] - em[i]) / (1 + std::abs(x[i])));
                best = std::min(best, d);
            }
            ok[t] = tr.converged && tr.monotone && best <= kC5Match;
            if (!ok[t])
                notes[t] = "converged " + std::to_string(tr.converged) + " monotone " + std::to_string(tr.monotone) +
                           " distance " + fmt(best);
        } catch (const std::exception& e) {
            notes[t] = e.what();
        }
    });
    int good = 0;
    for (int t = 0; t < kC5Datasets; ++t) {
        good += ok[t];
        if (!ok[t]) std::cout << "# dataset " << t << ": " << notes[t] << "\n";
    }
    save_cache(5, solves);
    return report(5, good == kC5Datasets, std::to_string(good) + "/" + std::to_string(kC5Datasets) +
                                              " EM limits match a relevant maximum");
}

std::vector<SolveSummary> all_solves() {
    std::vector<SolveSummary> all;
    for (int c : {1, 4, 5}) {
        auto cached = load_cache(c);
        if (!cached) {
            std::cout << "# cache for criterion " << c << " missing or stale; recomputing\n";
            if (c == 1) criterion1();
            if (c == 4) criterion4();
            if (c == 5) criterion5();
            cached = load_cache(c);
        }
        if (cached) all.insert(all.end(), cached->begin(), cached->end());
    }
    return all;
}

bool criterion2() {
    const auto all = all_solves();
    int bad = 0;
    for (const auto& s : all) bad += s.n_relevant_max < 1;
    return report(2, bad == 0 && !all.empty(),
                  std::to_string(bad) + " of " + std::to_string(all.size()) + " solves without a relevant maximum");
}

bool criterion3() {
    const auto all = all_solves();
    int bad = 0;
    std::map<int, int> seen;
    for (const auto& s : all) {
        const bool odd = s.n_real >= 1 && s.n_real <= 9 && s.n_real % 2 == 1;
        bad += !odd;
        ++seen[s.n_real];
    }
    std::string values;
    bool covered = true;
    for (int k : {1, 3, 5, 7, 9}) {
        values += std::to_string(k) + ":" + std::to_string(seen[k]) + " ";
        covered = covered && seen[k] > 0;
    }
    return report(3, bad == 0 && covered && !all.empty(),
                  std::to_string(bad) + " solves with n_real outside {1,3,5,7,9}; observed " + values);
}

bool criterion6() {
    int bad = 0;
    for (int n = 2; n <= 12; ++n) bad += ml_degree(2, n) != ipow(2, n + 1) - 3;
    return report(6, bad == 0, "ml_degree(2,n) = 2^(n+1) - 3 for n = 2..12, mismatches " + std::to_string(bad));
}

bool criterion7() {
    bool pass = true;
    std::string detail;
    for (auto [m, n] : {std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 3}}) {
        const auto t0 = std::chrono::steady_clock::now();
        const BigCount regions = count_bounded_regions(m, n, g_jobs);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const BigCount ml = ml_degree(m, n);
        std::cout << "# (" << m << "," << n << ") ml_degree " << ml << " bounded regions " << regions << " (" << secs
                  << " s)\n";
        pass = pass && regions == ml;
        detail += "(" + std::to_string(m) + "," + std::to_string(n) + ")=" + regions.str() + " ";
    }
    return report(7, pass, detail);
}

bool criterion8() {
    int bad = 0;
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 4; ++n) bad += count_lonesum(m, n, false, g_jobs) != poly_bernoulli(m, n);
    const bool b22 = poly_bernoulli(2, 2) == 14 && count_lonesum(2, 2, false) == 14;
    return report(8, bad == 0 && b22, "lonesum counts vs poly-Bernoulli for m,n <= 4, mismatches " + std::to_string(bad));
}

bool criterion9() {
    bool pass = true;
    std::string detail;
    for (auto [m, n] : {std::pair{2, 2}, std::pair{2, 3}}) {
        const auto regions = enumerate_regions(m, n, g_jobs);
        int disagree = 0;
        for (const auto& rc : regions)
            disagree += (rc.status == RegionStatus::bounded) != classify_combinatorial(rc.partition);
        pass = pass && disagree == 0;
        detail += std::to_string(regions.size()) + " partitions at (" + std::to_string(m) + "," + std::to_string(n) +
                  "): " + std::to_string(disagree) + " disagreements; ";
    }
    return report(9, pass, detail);
}

bool criterion10() {
    std::mt19937_64 rng(kSeedC10);
    std::uniform_int_distribution<int> cnt(1, 50);
    int good = 0;
    for (int k = 0; k < kC10Tables; ++k) {
        CountTable tab;
        tab.t = {{double(cnt(rng)), double(cnt(rng))}, {double(cnt(rng)), double(cnt(rng))}};
        tab.rvec = {double(cnt(rng)), double(cnt(rng))};
        tab.svec = {double(cnt(rng)), double(cnt(rng))};
        const auto pts = discrete_critical_points(tab, g_jobs);
        int converged = 0, nonneg = 0;
        double match = std::numeric_limits<double>::infinity();
        const auto em = em_multinomial(tab, 1e-12, 200000);
        for (const auto& p : pts) {
            converged += p.converged;
            if (p.converged && p.nonnegative) {
                ++nonneg;
                match = p.p.max_abs_diff(em.final_table());
            }
        }
        const bool ok = pts.size() == 5 && converged == 5 && nonneg == 1 && em.converged && match <= kC10Match;
        if (!ok)
            std::cout << "# table " << k << " " << json(tab).dump() << ": points " << pts.size() << " converged "
                      << converged << " nonnegative " << nonneg << " em distance " << match << "\n";
        good += ok;
    }
    return report(10, good == kC10Tables,
                  std::to_string(good) + "/" + std::to_string(kC10Tables) + " tables with 5 points, one nonnegative = EM");
}

bool criterion11() {
    std::mt19937_64 rng(kSeedC11);
    int bad_score = 0, bad_hess = 0;
    double worst_s = 0, worst_h = 0;
    for (int k = 0; k < kC11Points; ++k) {
        SuffStats st = random_generic_stats(rng);
        const GaussianParams p = random_gaussian_params(rng);
        const auto x = p.as_array();
        const auto sc = score(st, p).as_array();
        const Matrix5 hs = hessian(st, p);
        bool sok = true, hok = true;
        for (int j = 0; j < 5; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
            auto xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const GaussianParams pp = GaussianParams::from_array(xp), pm = GaussianParams::from_array(xm);
            const double fd = (loglik(st, pp) - loglik(st, pm)) / (2 * h);
            const double es = std::abs(sc[j] - fd) / std::max(1.0, std::abs(fd));
            worst_s = std::max(worst_s, es);
            sok = sok && es <= kC11Score;
            const auto sp = score(st, pp).as_array(), sm = score(st, pm).as_array();
            for (int i = 0; i < 5; ++i) {
                const double fdh = (sp[i] - sm[i]) / (2 * h);
                const double eh = std::abs(hs[i][j] - fdh) / std::max(1.0, std::abs(fdh));
                worst_h = std::max(worst_h, eh);
                hok = hok && eh <= kC11Hessian;
            }
        }
        bad_score += !sok;
        bad_hess += !hok;
    }
    return report(11, bad_score == 0 && bad_hess == 0,
                  "score mismatches " + std::to_string(bad_score) + " (worst " + fmt(worst_s) +
                      "), hessian mismatches " + std::to_string(bad_hess) + " (worst " + fmt(worst_h) + ")");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    int criterion = 0;
    std::string cache_dir = ".";
    app.add_option("--criterion", criterion, "criterion number 1..11 (0 = all)")->check(CLI::Range(0, 11));
    app.add_option("--jobs", g_jobs, "worker threads (0 = hardware concurrency)");
    app.add_option("--cache-dir", cache_dir, "directory for cached solve summaries");
    CLI11_PARSE(app, argc, argv);
    g_cache_dir = cache_dir;
    std::cout.precision(6);

    using Fn = bool (*)();
    const std::vector<Fn> fns{criterion1, criterion2, criterion3, criterion4, criterion5, criterion6,
                              criterion7, criterion8, criterion9, criterion10, criterion11};
    bool pass = true;
    try {
        if (criterion == 0) {
            for (const auto& f : fns) pass = f() && pass;
        } else {
            pass = fns[static_cast<std::size_t>(criterion - 1)]();
        }
    } catch (const std::exception& e) {
        std::cout << "criterion " << criterion << ": FAIL exception: " << e.what() << std::endl;
        return 1;
    }
    return pass ? 0 : 1;
}
