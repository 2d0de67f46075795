#pragma once

// Command-line front end. run_cli parses argv, dispatches a subcommand and
// maps failures to exit codes: 0 success, 2 input error, 3 solver error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "arrangement.hpp"
#include "combinatorics.hpp"
#include "critical_system.hpp"
#include "em.hpp"
#include "homotopy_solver.hpp"
#include "model.hpp"
#include "scenarios.hpp"

namespace mlmiss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;

/// Raised for malformed or unreadable inputs.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("malformed JSON in '" + path + "': " + e.what());
    }
}

/// Accepts either the object itself or {"stats": {...}} / {"dataset": {...}} wrappers.
template <class T>
T read_object(const std::string& path, const char* key) {
    json j = read_json_file(path);
    if (j.is_object() && j.contains(key)) j = j.at(key);
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("'") + path + "' is not a valid " + key + ": " + e.what());
    }
}

/// Write to path.tmp then rename, so a failed run leaves no partial file.
/// An empty path or "-" writes to `fallback`.
inline void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
    if (path.empty() || path == "-") {
        fallback << content;
        fallback.flush();
        return;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write '" + tmp + "'");
        out << content;
        out.flush();
        if (!out) throw InputError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw InputError("cannot move output into '" + path + "'");
    }
}

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct ToleranceFlags {
    SolverOptions opt;
    void attach(CLI::App* app) {
        app->add_option("--sat-tol", opt.sat_tol, "saturant (denominator) tolerance")->capture_default_str();
        app->add_option("--real-tol", opt.real_tol, "imaginary-part tolerance for realness")->capture_default_str();
        app->add_option("--cluster-tol", opt.cluster_tol, "root deduplication tolerance")->capture_default_str();
        app->add_option("--degen-tol", opt.degen_tol, "Hessian eigenvalue tolerance after diagonal scaling")->capture_default_str();
        app->add_option("--divergence-norm", opt.divergence_norm, "norm beyond which a root counts as diverged")
            ->capture_default_str();
        app->add_option("--retry-budget", opt.retry_budget, "extra total-degree attempts")->capture_default_str();
        auto& t = opt.tracker;
        app->add_option("--predictor-tol", t.predictor_tol, "path tracker local error tolerance")->capture_default_str();
        app->add_option("--corrector-tol", t.corrector_tol, "Newton corrector tolerance")->capture_default_str();
        app->add_option("--min-step", t.min_step, "smallest step before a path is declared failed")->capture_default_str();
        app->add_option("--max-steps", t.max_steps, "step cap per path")->capture_default_str();
        app->add_option("--endgame-cutoff", t.endgame_cutoff, "t below which stalled paths end as singular")
            ->capture_default_str();
        app->add_option("--singular-cond", t.singular_cond, "Jacobian condition number of a singular endpoint")
            ->capture_default_str();
    }
    json to_json() const {
        return json{{"sat_tol", opt.sat_tol},         {"real_tol", opt.real_tol},
                    {"cluster_tol", opt.cluster_tol}, {"degen_tol", opt.degen_tol},
                    {"divergence_norm", opt.divergence_norm}, {"retry_budget", opt.retry_budget},
                    {"predictor_tol", opt.tracker.predictor_tol}, {"corrector_tol", opt.tracker.corrector_tol},
                    {"min_step", opt.tracker.min_step},           {"max_steps", opt.tracker.max_steps},
                    {"endgame_cutoff", opt.tracker.endgame_cutoff}, {"singular_cond", opt.tracker.singular_cond}};
    }
};

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Maximum-likelihood structure of bivariate missing-data models"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)")->capture_default_str();

    // solve
    auto* solve = app.add_subcommand("solve", "all complex critical points of the Gaussian likelihood");
    std::string solve_stats, solve_dataset, solve_out, solve_method = "total-degree", solve_form = "profiled";
    std::optional<std::uint64_t> solve_seed;
    ToleranceFlags solve_tol;
    auto* s_stats = solve->add_option("--stats", solve_stats, "sufficient statistics JSON");
    auto* s_data = solve->add_option("--dataset", solve_dataset, "dataset JSON {y, z, w}");
    s_stats->excludes(s_data);
    solve->add_option("--seed", solve_seed, "solver seed (drawn and echoed if absent)");
    solve->add_option("--method", solve_method, "total-degree | parameter")
        ->check(CLI::IsMember({"total-degree", "parameter"}))->capture_default_str();
    solve->add_option("--formulation", solve_form, "full | reduced | profiled (total-degree only)")
        ->check(CLI::IsMember({"full", "reduced", "profiled"}))->capture_default_str();
    solve->add_option("--out", solve_out, "output path (default stdout)");
    solve_tol.attach(solve);

    // em
    auto* em = app.add_subcommand("em", "EM for Gaussian statistics or a multinomial table");
    std::string em_stats, em_dataset, em_table, em_init, em_out, em_trace;
    double em_tol = kEmTol;
    int em_iter = kEmMaxIter;
    auto* e_stats = em->add_option("--stats", em_stats, "sufficient statistics JSON");
    auto* e_data = em->add_option("--dataset", em_dataset, "dataset JSON {y, z, w}");
    auto* e_table = em->add_option("--table", em_table, "count table JSON {t, rvec, svec}");
    e_stats->excludes(e_data)->excludes(e_table);
    e_data->excludes(e_table);
    em->add_option("--init", em_init, "initial parameters JSON (GaussianParams or ProbTable)");
    em->add_option("--em-tol", em_tol, "stopping tolerance")->capture_default_str();
    em->add_option("--max-iter", em_iter, "iteration cap")->capture_default_str();
    em->add_option("--out", em_out, "result JSON path (default stdout)");
    em->add_option("--trace", em_trace, "per-iteration CSV path");

    // simulate
    auto* sim = app.add_subcommand("simulate", "scenario histogram of real-root counts");
    ScenarioSpec spec;
    std::string sim_kind = "mcar", sim_dist = "gaussian", sim_base, sim_out, sim_csv, sim_format = "json";
    std::optional<std::uint64_t> sim_seed;
    ToleranceFlags sim_tol;
    sim->add_option("--scenario", sim_kind, "mcar | mar | nmar | wild | random_stats")
        ->check(CLI::IsMember({"mcar", "mar", "nmar", "wild", "random_stats"}))->capture_default_str();
    sim->add_option("--trials", spec.trials, "number of trials")->capture_default_str();
    sim->add_option("--samples", spec.samples_per_trial, "samples per trial")->capture_default_str();
    sim->add_option("--seed", sim_seed, "master seed (drawn and echoed if absent)");
    sim->add_option("--mixture-weight", spec.mixture_weight, "mar: share of threshold-censored rows")->capture_default_str();
    sim->add_option("--censor-prob", spec.censor_prob, "per-cell MCAR censoring probability")->capture_default_str();
    sim->add_option("--threshold", spec.threshold, "mar / nmar censoring threshold")->capture_default_str();
    sim->add_option("--nmar-correlation", spec.nmar_correlation, "nmar correlation")->capture_default_str();
    sim->add_option("--nmar-mean", spec.nmar_mean, "nmar mean of both coordinates")->capture_default_str();
    std::string wild_z = "gaussian";
    sim->add_option("--wild-z", wild_z, "wild: Z-only rows gaussian | uniform (from the W interval)")
        ->check(CLI::IsMember({"gaussian", "uniform"}))->capture_default_str();
    sim->add_option("--distribution", sim_dist, "gaussian | uniform (mcar / mar)")
        ->check(CLI::IsMember({"gaussian", "uniform"}))->capture_default_str();
    sim->add_option("--base-params", sim_base, "GaussianParams JSON file; default: drawn per trial");
    sim->add_option("--out", sim_out, "output path (default stdout)");
    sim->add_option("--format", sim_format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sim->add_option("--csv", sim_csv, "additional per-trial CSV path");
    sim_tol.attach(sim);

    // mldegree
    auto* mld = app.add_subcommand("mldegree", "ML-degree of the m x n multinomial missing-data model");
    int mld_m = 2, mld_n = 2;
    bool mld_lonesum = false, mld_closed = false;
    int mld_max_cells = kLonesumMaxCells;
    mld->add_option("--m", mld_m, "rows")->required();
    mld->add_option("--n", mld_n, "columns")->required();
    mld->add_flag("--verify-lonesum", mld_lonesum, "compare B(m,n) with brute-force lonesum enumeration");
    mld->add_flag("--closed-form-check", mld_closed, "compare with 2^(n+1) - 3 when m = 2 (or n = 2)");
    mld->add_option("--max-cells", mld_max_cells, "lonesum enumeration bound on m*n")->capture_default_str();

    // count-regions
    auto* cr = app.add_subcommand("count-regions", "bounded regions of the sign-partition arrangement");
    int cr_m = 2, cr_n = 2;
    bool cr_cross = false;
    std::string cr_csv;
    cr->add_option("--m", cr_m, "rows")->required();
    cr->add_option("--n", cr_n, "columns")->required();
    cr->add_flag("--cross-check", cr_cross, "compare LP and combinatorial classification on every partition");
    cr->add_option("--csv", cr_csv, "per-region CSV dump path");

    // discrete-critical
    auto* dc = app.add_subcommand("discrete-critical", "one critical point per bounded region");
    std::string dc_table, dc_out, dc_csv;
    dc->add_option("--table", dc_table, "count table JSON {t, rvec, svec}")->required();
    dc->add_option("--out", dc_out, "output path (default stdout)");
    dc->add_option("--csv", dc_csv, "per-region CSV dump path");

    // discrete-mle
    auto* dm = app.add_subcommand("discrete-mle", "maximum-likelihood table by EM");
    std::string dm_table, dm_out;
    double dm_tol = kEmTol;
    dm->add_option("--table", dm_table, "count table JSON {t, rvec, svec}")->required();
    dm->add_option("--em-tol", dm_tol, "stopping tolerance")->capture_default_str();
    dm->add_option("--out", dm_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitInput;
    }

    try {
        if (*solve) {
            if (solve_stats.empty() && solve_dataset.empty()) throw InputError("solve needs --stats or --dataset");
            SuffStats st = solve_stats.empty() ? reduce(read_object<Dataset>(solve_dataset, "dataset"))
                                               : read_object<SuffStats>(solve_stats, "stats");
            st.validate();
            const std::uint64_t seed = resolve_seed(solve_seed);
            SolverOptions opt = solve_tol.opt;
            opt.jobs = jobs;
            SolveReport rep;
            if (solve_method == "parameter") {
                const Anchor anchor = make_anchor(seed, opt);
                rep = solve_parameter_homotopy(build_full(st), anchor.report, anchor.stats, seed, opt);
            } else {
                rep = solve_total_degree(st, seed, opt, formulation_from_string(solve_form));
            }
            json cfg{{"subcommand", "solve"}, {"seed", seed},       {"method", solve_method},
                     {"formulation", solve_form}, {"tolerances", solve_tol.to_json()}, {"stats", st}};
            emit(solve_out, dump(json{{"config", cfg}, {"report", to_json_value(rep)}}), out);
            return rep.solver_warning ? kExitSolver : kExitOk;
        }
        if (*em) {
            json cfg{{"subcommand", "em"}, {"em_tol", em_tol}, {"max_iter", em_iter}};
            if (!em_table.empty()) {
                const auto tab = read_object<CountTable>(em_table, "table");
                tab.validate();
                const ProbTable init = em_init.empty() ? ProbTable::uniform(tab.rows(), tab.cols())
                                                       : read_object<ProbTable>(em_init, "init");
                const auto tr = em_multinomial(tab, init, em_tol, em_iter);
                cfg["table"] = tab;
                cfg["init"] = init;
                json res{{"config", cfg},
                         {"p", tr.final_table()},
                         {"loglik", tr.iterates.back().loglik},
                         {"iterations", tr.iterations},
                         {"converged", tr.converged},
                         {"kkt_residual", tr.kkt_residual},
                         {"monotone", tr.monotone}};
                if (!em_trace.empty()) {
                    std::ostringstream csv;
                    write_trace_csv(csv, tr);
                    emit(em_trace, csv.str(), out);
                }
                emit(em_out, dump(res), out);
                return tr.converged ? kExitOk : kExitSolver;
            }
            if (em_stats.empty() && em_dataset.empty()) throw InputError("em needs --stats, --dataset or --table");
            SuffStats st = em_stats.empty() ? reduce(read_object<Dataset>(em_dataset, "dataset"))
                                            : read_object<SuffStats>(em_stats, "stats");
            st.validate();
            const GaussianParams init = em_init.empty() ? default_gaussian_init(st)
                                                        : read_object<GaussianParams>(em_init, "init");
            const auto tr = em_gaussian(st, init, em_tol, em_iter);
            cfg["stats"] = st;
            cfg["init"] = init;
            json res{{"config", cfg},
                     {"params", tr.final_params()},
                     {"loglik", tr.iterates.back().loglik},
                     {"iterations", tr.iterations},
                     {"converged", tr.converged},
                     {"score_norm", tr.score_norm},
                     {"monotone", tr.monotone}};
            if (!em_trace.empty()) {
                std::ostringstream csv;
                write_trace_csv(csv, tr);
                emit(em_trace, csv.str(), out);
            }
            emit(em_out, dump(res), out);
            return tr.converged ? kExitOk : kExitSolver;
        }
        if (*sim) {
            spec.kind = scenario_from_string(sim_kind);
            spec.distribution = distribution_from_string(sim_dist);
            spec.wild_z = distribution_from_string(wild_z);
            spec.master_seed = resolve_seed(sim_seed);
            if (!sim_base.empty()) spec.base_params = read_object<GaussianParams>(sim_base, "base_params");
            spec.validate();
            SolverOptions opt = sim_tol.opt;
            opt.jobs = jobs;
            const Histogram h = run(spec, opt);
            json agg = to_json_value(h);
            agg["config"] = json{{"subcommand", "simulate"}, {"spec", to_json_value(spec)}, {"tolerances", sim_tol.to_json()}};
            std::ostringstream csv;
            csv << "# config: " << agg["config"].dump() << "\n";
            write_histogram_csv(csv, h);
            if (!sim_csv.empty()) emit(sim_csv, csv.str(), out);
            emit(sim_out, sim_format == "csv" ? csv.str() : dump(agg), out);
            return kExitOk;
        }
        if (*mld) {
            if (mld_m < 1 || mld_n < 1) throw InputError("--m and --n must be positive");
            std::ostringstream s;
            s << "# config: " << json{{"subcommand", "mldegree"}, {"m", mld_m}, {"n", mld_n}}.dump() << "\n";
            const BigCount ml = ml_degree(mld_m, mld_n);
            bool ok = true;
            if (mld_lonesum) {
                const BigCount b = poly_bernoulli(mld_m, mld_n);
                const BigCount c = count_lonesum(mld_m, mld_n, false, jobs, mld_max_cells);
                s << "# poly_bernoulli " << b << " lonesum " << c << (b == c ? " agree" : " DISAGREE") << "\n";
                ok = ok && b == c;
            }
            if (mld_closed) {
                const int k = (mld_m == 2) ? mld_n : (mld_n == 2 ? mld_m : -1);
                if (k < 0) throw InputError("--closed-form-check needs m = 2 or n = 2");
                const BigCount cf = ipow(2, k + 1) - 3;
                s << "# closed form " << cf << (cf == ml ? " agree" : " DISAGREE") << "\n";
                ok = ok && cf == ml;
            }
            s << ml << "\n";
            emit("", s.str(), out);
            return ok ? kExitOk : kExitSolver;
        }
        if (*cr) {
            if (cr_m < 2 || cr_n < 2) throw InputError("region enumeration needs m, n >= 2");
            const auto regions = enumerate_regions(cr_m, cr_n, jobs);
            BigCount bounded = 0;
            std::size_t empty = 0, unbounded = 0, disagree = 0;
            for (const auto& rc : regions) {
                if (rc.status == RegionStatus::bounded) ++bounded;
                else if (rc.status == RegionStatus::empty) ++empty;
                else ++unbounded;
                if (cr_cross && (rc.status == RegionStatus::bounded) != classify_combinatorial(rc.partition)) ++disagree;
            }
            std::ostringstream s;
            s << "# config: " << json{{"subcommand", "count-regions"}, {"m", cr_m}, {"n", cr_n}}.dump() << "\n";
            s << "# partitions " << regions.size() << " empty " << empty << " unbounded " << unbounded << "\n";
            const BigCount ml = ml_degree(cr_m, cr_n);
            s << "# ml_degree " << ml << (ml == bounded ? " agree" : " DISAGREE") << "\n";
            if (cr_cross) s << "# combinatorial disagreements " << disagree << "\n";
            s << bounded << "\n";
            if (!cr_csv.empty()) {
                std::ostringstream csv;
                write_regions_csv(csv, regions);
                emit(cr_csv, csv.str(), out);
            }
            emit("", s.str(), out);
            return (ml == bounded && disagree == 0) ? kExitOk : kExitSolver;
        }
        if (*dc) {
            const auto tab = read_object<CountTable>(dc_table, "table");
            tab.validate();
            const auto pts = discrete_critical_points(tab, jobs);
            json arr = json::array();
            bool ok = true;
            for (const auto& c : pts) {
                arr.push_back(json{{"region", c.region.to_string()},
                                   {"p", c.p},
                                   {"loglik", c.loglik},
                                   {"residual", c.residual},
                                   {"iterations", c.iterations},
                                   {"converged", c.converged},
                                   {"nonnegative", c.nonnegative},
                                   {"error", c.error}});
                ok = ok && c.converged;
            }
            json res{{"config", {{"subcommand", "discrete-critical"}, {"table", tab}}},
                     {"ml_degree", ml_degree(static_cast<int>(tab.rows()), static_cast<int>(tab.cols())).str()},
                     {"n_critical", pts.size()},
                     {"points", arr}};
            if (!dc_csv.empty()) {
                std::ostringstream csv;
                csv << "region,converged,nonnegative,loglik,residual,p\n";
                csv.precision(17);
                for (const auto& c : pts) {
                    csv << c.region.to_string() << ',' << c.converged << ',' << c.nonnegative << ',' << c.loglik << ','
                        << c.residual << ',';
                    for (std::size_t i = 0; i < c.p.rows(); ++i)
                        for (std::size_t j = 0; j < c.p.cols(); ++j) csv << (i + j ? ";" : "") << c.p.p[i][j];
                    csv << '\n';
                }
                emit(dc_csv, csv.str(), out);
            }
            emit(dc_out, dump(res), out);
            return ok ? kExitOk : kExitSolver;
        }
        if (*dm) {
            const auto tab = read_object<CountTable>(dm_table, "table");
            tab.validate();
            const auto tr = em_multinomial(tab, dm_tol);
            json res{{"config", {{"subcommand", "discrete-mle"}, {"table", tab}, {"em_tol", dm_tol}}},
                     {"p", tr.final_table()},
                     {"loglik", tr.iterates.back().loglik},
                     {"iterations", tr.iterations},
                     {"converged", tr.converged},
                     {"kkt_residual", tr.kkt_residual}};
            emit(dm_out, dump(res), out);
            return tr.converged ? kExitOk : kExitSolver;
        }
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::length_error& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitOk;
}

}  // namespace mlmiss
