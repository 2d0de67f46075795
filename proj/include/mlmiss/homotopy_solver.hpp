#pragma once

// All complex critical points of the Gaussian missing-data likelihood by
// homotopy continuation, plus real / relevant / Hessian classification.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "critical_system.hpp"
#include "gaussian_likelihood.hpp"
#include "homotopy.hpp"

namespace mlmiss {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverOptions {
    double sat_tol = 1e-8;
    double real_tol = 1e-6;
    double cluster_tol = 1e-6;
    double degen_tol = 1e-7;          // relative to the spectral radius of the diagonally scaled Hessian
    double divergence_norm = 1e10;
    int retry_budget = 3;             // extra whole-solve attempts with a fresh gamma
    unsigned jobs = 1;
    std::size_t expected_roots = 9;   // only used to raise the anomaly flag
    TrackerOptions tracker;
};

enum class HessianClass { max, saddle, min, degenerate, none };

inline std::string to_string(HessianClass h) {
    switch (h) {
        case HessianClass::max: return "max";
        case HessianClass::saddle: return "saddle";
        case HessianClass::min: return "min";
        case HessianClass::degenerate: return "degenerate";
        case HessianClass::none: return "none";
    }
    return "none";
}

struct CriticalPoint {
    std::array<cplx, 5> coords{};  // mu1, mu2, g11, g12, g22
    double residual = 0;
    bool is_real = false;
    bool is_relevant = false;
    HessianClass hessian_class = HessianClass::none;  // none for non-real points
    int cluster_size = 1;

    double norm() const {
        double s = 0;
        for (const auto& c : coords) s += std::norm(c);
        return std::sqrt(s);
    }
    std::array<double, 5> real_part() const {
        std::array<double, 5> r{};
        for (std::size_t i = 0; i < 5; ++i) r[i] = coords[i].real();
        return r;
    }
    GaussianParams params() const { return GaussianParams::from_array(real_part()); }
};

struct SolveReport {
    std::vector<CriticalPoint> points;
    int n_complex = 0, n_real = 0, n_relevant = 0, n_relevant_max = 0;
    int paths_tracked = 0, paths_converged = 0, paths_failed = 0, paths_diverged = 0, paths_on_saturant = 0;
    int attempts = 0;
    bool solver_warning = false;  // failed paths remained after the retry budget
    bool anomaly = false;         // root count differs from expected_roots
    std::string method;

    void recount(std::size_t expected) {
        n_complex = static_cast<int>(points.size());
        n_real = n_relevant = n_relevant_max = 0;
        for (const auto& p : points) {
            n_real += p.is_real;
            n_relevant += p.is_relevant;
            n_relevant_max += p.is_relevant && p.hessian_class == HessianClass::max;
        }
        anomaly = static_cast<std::size_t>(n_complex) != expected;
    }
};

// ---------------------------------------------------------------------------
// Classification

inline double full_residual(const CompiledSystem& full, std::span<const cplx> x) {
    std::array<cplx, 5> vals{};
    full.evaluate(x, vals, {});
    double r = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double scale = full.term_magnitude(i, x);
        r = std::max(r, scale > 0 ? std::abs(vals[i]) / scale : std::abs(vals[i]));
    }
    return r;
}

/// Fill realness, relevance and Hessian class of `pt` for the data `stats`.
inline CriticalPoint classify(CriticalPoint pt, const SuffStats& stats, const SolverOptions& opt = {}) {
    double max_imag = 0;
    for (const auto& c : pt.coords) max_imag = std::max(max_imag, std::abs(c.imag()));
    pt.is_real = max_imag <= opt.real_tol * (1.0 + pt.norm());
    pt.is_relevant = false;
    pt.hessian_class = HessianClass::none;
    if (!pt.is_real) return pt;
    const GaussianParams p = pt.params();
    pt.is_relevant = p.relevant();
    if (p.g11 == 0 || p.g22 == 0 || p.det_gamma() == 0) {
        pt.hessian_class = HessianClass::degenerate;
        return pt;
    }
    const Matrix5 h = hessian_unchecked(stats, p);
    Eigen::Matrix<double, 5, 5> m;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) m(i, j) = h[i][j];
    // Congruence by a diagonal scaling keeps the inertia and removes the
    // mixed units of mean and precision coordinates.
    Eigen::Matrix<double, 5, 1> dscale;
    for (int i = 0; i < 5; ++i) dscale[i] = std::abs(m(i, i)) > 0 ? 1.0 / std::sqrt(std::abs(m(i, i))) : 1.0;
    m = dscale.asDiagonal() * m * dscale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> es(m, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    int neg = 0, pos = 0;
    bool degenerate = !(scale > 0);
    for (int i = 0; i < 5 && !degenerate; ++i) {
        if (std::abs(ev[i]) <= opt.degen_tol * scale) degenerate = true;
        neg += ev[i] < 0;
        pos += ev[i] > 0;
    }
    if (degenerate)
        pt.hessian_class = HessianClass::degenerate;
    else if (neg == 5)
        pt.hessian_class = HessianClass::max;
    else if (pos == 5)
        pt.hessian_class = HessianClass::min;
    else
        pt.hessian_class = HessianClass::saddle;
    return pt;
}

namespace detail {

inline std::mt19937_64 solver_rng(std::uint64_t seed, std::uint64_t attempt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(attempt), 0x6d6c6d73u};
    return std::mt19937_64(seq);
}

inline cplx random_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    return std::polar(1.0, u(rng));
}

inline CVector random_patch(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CVector a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = cplx(g(rng), g(rng));
    return a / a.norm();
}

inline CompiledSystem compile_homogeneous(const std::vector<ComplexPoly>& polys, std::size_t nvars) {
    std::vector<ComplexPoly> h;
    for (const auto& p : polys) h.push_back(homogenize(p, p.degree()));
    return CompiledSystem(h, nvars + 1);
}

inline void to_patch(CVector& x, const CVector& patch) { x /= patch.dot(x); }

/// Newton on the affine full system; returns false if it does not settle.
inline bool polish_full(const CompiledSystem& full, std::array<cplx, 5>& x, int iters = 6) {
    std::array<cplx, 5> vals{};
    std::array<cplx, 25> jac{};
    for (int it = 0; it < iters; ++it) {
        full.evaluate(x, vals, jac);
        Eigen::Matrix<cplx, 5, 5> j;
        Eigen::Matrix<cplx, 5, 1> f;
        for (int i = 0; i < 5; ++i) {
            f[i] = vals[i];
            for (int k = 0; k < 5; ++k) j(i, k) = jac[i * 5 + k];
        }
        const Eigen::Matrix<cplx, 5, 1> dx = j.fullPivLu().solve(-f);
        if (!dx.allFinite()) return false;
        double xn = 0;
        for (auto& c : x) xn += std::norm(c);
        for (int i = 0; i < 5; ++i) x[i] += dx[i];
        if (dx.norm() <= 1e-15 * (1.0 + std::sqrt(xn))) break;
    }
    for (const auto& c : x)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

/// First-order distance from x to the zero set of f, |f| / |grad f|,
/// relative to max(|x|, 1).
inline double factor_size(const ComplexPoly& f, std::span<const cplx> x) {
    double grad2 = 0, xn2 = 0;
    for (std::size_t i = 0; i < f.nvars(); ++i) {
        grad2 += std::norm(f.derivative(i).evaluate<cplx>(x));
        xn2 += std::norm(x[i]);
    }
    const double val = std::abs(f.evaluate<cplx>(x));
    if (val == 0) return 0;
    return grad2 > 0 ? val / std::sqrt(grad2) / std::max(std::sqrt(xn2), 1.0) : std::numeric_limits<double>::infinity();
}

enum class EndpointKind { root, diverged, on_saturant, failed };

struct Endpoint {
    EndpointKind kind = EndpointKind::failed;
    CriticalPoint point;
    bool singular = false;
};

inline constexpr double kRescueResidual = 1e-11;
inline constexpr double kRescueSatTol = 1e-6;

inline const std::array<ComplexPoly, 3>& score_denominators() {
    static const std::array<ComplexPoly, 3> den{ComplexPoly::variable(3, 0), ComplexPoly::variable(3, 2),
                                                ComplexPoly::variable(3, 0) * ComplexPoly::variable(3, 2) -
                                                    ComplexPoly::variable(3, 1) * ComplexPoly::variable(3, 1)};
    return den;
}

inline bool clear_of_denominators(const PolySystem& sys, std::span<const cplx> y, const std::array<cplx, 5>& x5,
                                  double tol) {
    for (const auto& f : sys.saturant_factors)
        if (factor_size(f, y) < tol) return false;
    const std::array<cplx, 3> g{x5[2], x5[3], x5[4]};
    for (const auto& f : score_denominators())
        if (factor_size(f, g) < tol) return false;
    return true;
}

inline Endpoint interpret_endpoint(const PathResult& pr, const PolySystem& sys, const CompiledSystem& full_affine,
                                   const SolverOptions& opt) {
    Endpoint ep;
    if (pr.status == PathStatus::failed) return ep;
    const bool singular = pr.status == PathStatus::singular_end;
    ep.singular = singular;
    const cplx x0 = pr.x[0];
    const double hn = pr.x.norm();
    const std::size_t nv = sys.nvars();
    std::vector<cplx> y(nv);
    double yn = 0;
    for (std::size_t i = 0; i < nv; ++i) {
        y[i] = pr.x[static_cast<Eigen::Index>(i + 1)] / x0;
        yn = std::max(yn, std::abs(y[i]));
    }
    // Paths into high-multiplicity solutions at infinity or on the saturant
    // converge like t^(1/c); at the end of tracking they are only known to a
    // few digits. Nonsingular roots never use the loose tolerances.
    const double inf_tol = singular ? 1e-2 : 1e-12;
    if (std::abs(x0) <= inf_tol * hn || !(yn < opt.divergence_norm)) {
        ep.kind = EndpointKind::diverged;
        return ep;
    }
    // An ill-conditioned but isolated root can stall the endpoint Newton step.
    // Accept it if the full system polishes cleanly away from all denominators.
    if (singular) {
        std::array<cplx, 5> x5 = lift_point(sys, y);
        if (polish_full(full_affine, x5, 12) && full_residual(full_affine, x5) <= kRescueResidual &&
            clear_of_denominators(sys, y, x5, kRescueSatTol)) {
            ep.point.coords = x5;
            ep.point.residual = full_residual(full_affine, x5);
            ep.kind = EndpointKind::root;
            return ep;
        }
    }
    const double sat_tol = singular ? 1e-2 : opt.sat_tol;
    for (const auto& f : sys.saturant_factors)
        if (factor_size(f, y) < sat_tol) {
            ep.kind = EndpointKind::on_saturant;
            return ep;
        }
    std::array<cplx, 5> x5 = lift_point(sys, y);
    if (!singular && !polish_full(full_affine, x5)) return ep;
    ep.point.coords = x5;
    ep.point.residual = full_residual(full_affine, x5);
    // Re-check the denominators of the score itself after polishing.
    const std::array<cplx, 3> g{x5[2], x5[3], x5[4]};
    for (const auto& f : score_denominators())
        if (factor_size(f, g) < sat_tol) {
            ep.kind = EndpointKind::on_saturant;
            return ep;
        }
    ep.kind = singular ? EndpointKind::failed : EndpointKind::root;
    return ep;
}

inline bool same_point(const CriticalPoint& a, const CriticalPoint& b, double tol) {
    double d = 0;
    for (std::size_t i = 0; i < 5; ++i) d = std::max(d, std::abs(a.coords[i] - b.coords[i]));
    return d <= tol * (1.0 + std::max(a.norm(), b.norm()));
}

/// Merge endpoints into clusters; the representative keeps the smallest residual.
inline std::vector<CriticalPoint> cluster(const std::vector<CriticalPoint>& pts, double tol) {
    std::vector<CriticalPoint> out;
    for (const auto& p : pts) {
        bool merged = false;
        for (auto& q : out)
            if (same_point(p, q, tol)) {
                q.cluster_size += p.cluster_size;
                if (p.residual < q.residual) {
                    const int cs = q.cluster_size;
                    q = p;
                    q.cluster_size = cs;
                }
                merged = true;
                break;
            }
        if (!merged) out.push_back(p);
    }
    return out;
}

inline void canonical_order(std::vector<CriticalPoint>& pts) {
    std::sort(pts.begin(), pts.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        for (std::size_t i = 0; i < 5; ++i) {
            if (a.coords[i].real() != b.coords[i].real()) return a.coords[i].real() < b.coords[i].real();
            if (a.coords[i].imag() != b.coords[i].imag()) return a.coords[i].imag() < b.coords[i].imag();
        }
        return false;
    });
}

struct AttemptResult {
    std::vector<CriticalPoint> roots;  // clustered
    int tracked = 0, converged = 0, failed = 0, diverged = 0, on_saturant = 0;
    bool clean() const {
        if (failed > 0) return false;
        for (const auto& r : roots)
            if (r.cluster_size > 1) return false;
        return true;
    }
};

inline AttemptResult tally(const std::vector<Endpoint>& eps, const SolverOptions& opt) {
    AttemptResult ar;
    ar.tracked = static_cast<int>(eps.size());
    std::vector<CriticalPoint> roots;
    for (const auto& e : eps) {
        switch (e.kind) {
            case EndpointKind::root:
                ++ar.converged;
                roots.push_back(e.point);
                break;
            case EndpointKind::diverged: ++ar.diverged; break;
            case EndpointKind::on_saturant: ++ar.on_saturant; break;
            case EndpointKind::failed: ++ar.failed; break;
        }
    }
    ar.roots = cluster(roots, opt.cluster_tol);
    return ar;
}

inline AttemptResult run_paths(const LinearHomotopy& hom, const std::vector<CVector>& starts, const PolySystem& sys,
                               const CompiledSystem& full_affine, const SolverOptions& opt) {
    std::vector<Endpoint> eps(starts.size());
    parallel_for(starts.size(), opt.jobs, [&](std::size_t i) {
        eps[i] = interpret_endpoint(track_path(hom, starts[i], opt.tracker), sys, full_affine, opt);
    });
    return tally(eps, opt);
}

inline SolveReport finish(const std::vector<AttemptResult>& attempts, const SuffStats& stats, const SolverOptions& opt,
                          std::string method) {
    SolveReport rep;
    rep.method = std::move(method);
    rep.attempts = static_cast<int>(attempts.size());
    const AttemptResult* chosen = nullptr;
    for (const auto& a : attempts)
        if (a.clean()) chosen = &a;
    std::vector<CriticalPoint> pts;
    if (chosen) {
        pts = chosen->roots;
    } else {
        // Union of every attempt: each member is a Newton-verified root.
        std::vector<CriticalPoint> all;
        for (const auto& a : attempts)
            for (auto r : a.roots) {
                r.cluster_size = 1;
                all.push_back(r);
            }
        pts = cluster(all, opt.cluster_tol);
        for (auto& p : pts) p.cluster_size = 1;
        for (const auto& a : attempts)
            for (const auto& r : a.roots)
                for (auto& p : pts)
                    if (same_point(p, r, opt.cluster_tol)) p.cluster_size = std::max(p.cluster_size, r.cluster_size);
        rep.solver_warning = attempts.back().failed > 0;
    }
    for (const auto& a : attempts) {
        rep.paths_tracked += a.tracked;
        rep.paths_converged += a.converged;
        rep.paths_failed += a.failed;
        rep.paths_diverged += a.diverged;
        rep.paths_on_saturant += a.on_saturant;
    }
    for (auto& p : pts) p = classify(p, stats, opt);
    canonical_order(pts);
    rep.points = std::move(pts);
    rep.recount(opt.expected_roots);
    return rep;
}

inline CompiledSystem compile_full_affine(const SuffStats& stats) {
    const PolySystem full = build_full(stats);
    return CompiledSystem(full.polys, 5);
}

}  // namespace detail

/// Total-degree homotopy from the start system x_i^{d_i} = c_i x_0^{d_i}.
inline SolveReport solve_total_degree(const PolySystem& sys, std::uint64_t seed, const SolverOptions& opt = {}) {
    const std::size_t nv = sys.nvars();
    if (sys.polys.size() != nv) throw std::invalid_argument("system must be square");
    const auto degs = sys.degrees();
    std::size_t npaths = 1;
    for (int d : degs) {
        if (d < 1) throw std::invalid_argument("every polynomial must have positive degree");
        npaths *= static_cast<std::size_t>(d);
    }
    const CompiledSystem target = detail::compile_homogeneous(sys.polys, nv);
    const CompiledSystem full_affine = detail::compile_full_affine(sys.stats);

    std::vector<detail::AttemptResult> attempts;
    for (int attempt = 0; attempt <= opt.retry_budget; ++attempt) {
        auto rng = detail::solver_rng(seed, static_cast<std::uint64_t>(attempt));
        const cplx gamma = detail::random_unit(rng);
        std::vector<cplx> c(nv);
        for (auto& ci : c) ci = detail::random_unit(rng);
        std::vector<ComplexPoly> start;
        for (std::size_t i = 0; i < nv; ++i) {
            ComplexPoly g(nv);
            Exponents e{};
            e[i] = static_cast<std::uint8_t>(degs[i]);
            g.add_term(e, cplx(1));
            g.add_term(Exponents{}, -c[i]);
            start.push_back(g);
        }
        const CVector patch = detail::random_patch(nv + 1, rng);
        LinearHomotopy hom(target, detail::compile_homogeneous(start, nv), gamma, patch);

        std::vector<CVector> starts(npaths);
        for (std::size_t idx = 0; idx < npaths; ++idx) {
            CVector x(nv + 1);
            x[0] = 1.0;
            std::size_t rem = idx;
            for (std::size_t i = 0; i < nv; ++i) {
                const auto d = static_cast<std::size_t>(degs[i]);
                const std::size_t k = rem % d;
                rem /= d;
                const double dd = static_cast<double>(d);
                x[static_cast<Eigen::Index>(i + 1)] =
                    std::pow(c[i], 1.0 / dd) * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / dd);
            }
            detail::to_patch(x, patch);
            starts[idx] = x;
        }
        attempts.push_back(detail::run_paths(hom, starts, sys, full_affine, opt));
        if (attempts.back().clean()) break;
    }
    return detail::finish(attempts, sys.stats, opt, "total_degree/" + to_string(sys.formulation));
}

inline SolveReport solve_total_degree(const SuffStats& stats, std::uint64_t seed, const SolverOptions& opt = {},
                                      Formulation formulation = Formulation::profiled) {
    PolySystem full = build_full(stats);
    switch (formulation) {
        case Formulation::full: return solve_total_degree(full, seed, opt);
        case Formulation::reduced: return solve_total_degree(eliminate_mu(full), seed, opt);
        case Formulation::profiled: break;
    }
    return solve_total_degree(profile_scale(full), seed, opt);
}

namespace detail {

inline std::vector<ComplexPoly> count_normalized(const PolySystem& s) {
    std::vector<ComplexPoly> out;
    const double k = 1.0 / s.stats.total();
    for (const auto& p : s.polys) out.push_back(p * cplx(k));
    return out;
}

inline std::vector<ComplexPoly> combine(const std::vector<ComplexPoly>& a, cplx ka, const std::vector<ComplexPoly>& b,
                                        cplx kb) {
    std::vector<ComplexPoly> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] * ka + b[i] * kb);
    return out;
}

}  // namespace detail

inline SuffStats random_generic_stats(std::mt19937_64& rng);

/// Parameter homotopy from a solved anchor instance. The cleared full system
/// is linear in the block sums, so after dividing by the total count every
/// complex combination of instances is again an instance. Paths run anchor ->
/// complex midpoint -> target; the midpoint is off the real parameter space,
/// which keeps both legs away from the real discriminant.
inline SolveReport solve_parameter_homotopy(const PolySystem& target, const SolveReport& anchor,
                                            const SuffStats& anchor_stats, std::uint64_t seed,
                                            const SolverOptions& opt = {}) {
    if (target.formulation != Formulation::full)
        throw std::invalid_argument("parameter homotopy runs on the full formulation");
    if (anchor.points.empty()) throw std::invalid_argument("anchor has no roots");
    auto rng = detail::solver_rng(seed, 0x70617261ULL);
    const auto fa = detail::count_normalized(build_full(anchor_stats));
    const auto ft = detail::count_normalized(target);
    const auto fr = detail::count_normalized(build_full(random_generic_stats(rng)));
    const auto fm = detail::combine(detail::combine(fa, 0.5, ft, 0.5), 1.0, fr, cplx(0, 0.5));
    const CVector patch = detail::random_patch(6, rng);
    const LinearHomotopy leg1(detail::compile_homogeneous(fm, 5), detail::compile_homogeneous(fa, 5), 1.0, patch);
    const LinearHomotopy leg2(detail::compile_homogeneous(ft, 5), detail::compile_homogeneous(fm, 5), 1.0, patch);
    const CompiledSystem full_affine(target.polys, 5);

    std::vector<detail::Endpoint> eps(anchor.points.size());
    parallel_for(anchor.points.size(), opt.jobs, [&](std::size_t i) {
        CVector x(6);
        x[0] = 1.0;
        for (int k = 0; k < 5; ++k) x[k + 1] = anchor.points[i].coords[static_cast<std::size_t>(k)];
        detail::to_patch(x, patch);
        const PathResult mid = track_path(leg1, x, opt.tracker);
        if (mid.status != PathStatus::converged) return;  // counted as failed
        eps[i] = detail::interpret_endpoint(track_path(leg2, mid.x, opt.tracker), target, full_affine, opt);
    });
    const auto ar = detail::tally(eps, opt);
    if (ar.clean() && ar.roots.size() == anchor.points.size())
        return detail::finish({ar}, target.stats, opt, "parameter");

    SolveReport fb = solve_total_degree(profile_scale(target), seed, opt);
    if (fb.solver_warning) throw SolverError("parameter homotopy and total-degree fallback both failed");
    fb.method = "parameter->" + fb.method;
    return fb;
}

/// A solved generic instance used as the start of parameter homotopies.
struct Anchor {
    SuffStats stats;
    SolveReport report;
};

inline SuffStats random_generic_stats(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(10, 100);
    std::uniform_real_distribution<double> first(-3, 3), var(0.1, 4), corr(-0.9, 0.9);
    SuffStats s;
    s.n = count(rng); s.r = count(rng); s.s = count(rng);
    s.my1 = first(rng); s.my2 = first(rng);
    const double v1 = var(rng), v2 = var(rng);
    s.my11 = s.my1 * s.my1 + v1;
    s.my22 = s.my2 * s.my2 + v2;
    s.my12 = s.my1 * s.my2 + corr(rng) * std::sqrt(v1 * v2);
    s.mz1 = first(rng); s.mz2 = s.mz1 * s.mz1 + var(rng);
    s.mw1 = first(rng); s.mw2 = s.mw1 * s.mw1 + var(rng);
    return s;
}

/// Statistics whose block sums are integers: counts in [10, 100]; each
/// coordinate sum an integer in [-3c, 3c]; each centred sum of squares an
/// integer in [c/10, 4c]; the complete-case cross sum rounded from a nonzero
/// correlation in {+-0.1, ..., +-0.9}. Moments are those sums over the count.
inline SuffStats random_integer_stats(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(10, 100), rho_tenths(1, 9), sign(0, 1);
    auto sum1 = [&](int c) { return static_cast<double>(std::uniform_int_distribution<int>(-3 * c, 3 * c)(rng)); };
    auto css = [&](int c) { return static_cast<double>(std::uniform_int_distribution<int>(std::max(1, c / 10), 4 * c)(rng)); };
    SuffStats s;
    const int n = count(rng), r = count(rng), w = count(rng);
    s.n = n; s.r = r; s.s = w;
    const double y1 = sum1(n), y2 = sum1(n), c11 = css(n), c22 = css(n);
    const double rho = (sign(rng) ? 1 : -1) * rho_tenths(rng) / 10.0;
    const double y11 = std::ceil(y1 * y1 / n + c11), y22 = std::ceil(y2 * y2 / n + c22);
    const double y12 = std::round(y1 * y2 / n + rho * std::sqrt((y11 - y1 * y1 / n) * (y22 - y2 * y2 / n)));
    s.my1 = y1 / n; s.my2 = y2 / n;
    s.my11 = y11 / n; s.my22 = y22 / n; s.my12 = y12 / n;
    const double z1 = sum1(r), z2 = std::ceil(z1 * z1 / r + css(r));
    s.mz1 = z1 / r; s.mz2 = z2 / r;
    const double w1 = sum1(w), w2 = std::ceil(w1 * w1 / w + css(w));
    s.mw1 = w1 / w; s.mw2 = w2 / w;
    return s;
}

/// Draw generic statistics until a total-degree solve yields a clean set of
/// expected_roots roots.
inline Anchor make_anchor(std::uint64_t seed, const SolverOptions& opt = {}) {
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
    for (int tries = 0; tries < 20; ++tries) {
        Anchor a;
        a.stats = random_generic_stats(rng);
        a.report = solve_total_degree(a.stats, seed + static_cast<std::uint64_t>(tries), opt);
        if (!a.report.anomaly && !a.report.solver_warning && a.report.attempts == 1) return a;
    }
    throw SolverError("could not construct a clean anchor instance");
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json_value(const CriticalPoint& p) {
    json c = json::array();
    for (const auto& v : p.coords) c.push_back({v.real(), v.imag()});
    return json{{"coords", c},
                {"residual", p.residual},
                {"is_real", p.is_real},
                {"is_relevant", p.is_relevant},
                {"hessian_class", to_string(p.hessian_class)},
                {"cluster_size", p.cluster_size}};
}

inline json to_json_value(const SolveReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back(to_json_value(p));
    return json{{"points", pts},
                {"n_complex", r.n_complex},
                {"n_real", r.n_real},
                {"n_relevant", r.n_relevant},
                {"n_relevant_max", r.n_relevant_max},
                {"paths_tracked", r.paths_tracked},
                {"paths_converged", r.paths_converged},
                {"paths_failed", r.paths_failed},
                {"paths_diverged", r.paths_diverged},
                {"paths_on_saturant", r.paths_on_saturant},
                {"attempts", r.attempts},
                {"solver_warning", r.solver_warning},
                {"anomaly", r.anomaly},
                {"method", r.method}};
}

}  // namespace mlmiss
