#pragma once

// Projective predictor-corrector path tracking for square polynomial systems.
//
// Every homotopy here is a straight line between a start system G and a
// target system F in homogeneous coordinates,
//     H(x, t) = (1 - t) F(x) + t gamma G(x),     t: 1 -> 0,
// closed by a random affine patch a . x = 1 so that paths heading to
// infinity stay finite.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "parallel.hpp"
#include "polynomial.hpp"

namespace mlmiss {

using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;

struct TrackerOptions {
    double initial_step = 0.02;
    double max_step = 0.1;
    double min_step = 1e-14;
    double predictor_tol = 1e-5;     // embedded error estimate, relative
    double corrector_tol = 1e-9;     // Newton update norm, relative
    int max_corrector_iters = 3;
    int max_steps = 50000;
    double endgame_cutoff = 1e-11;   // give up on singular endpoints below this t
    double singular_cond = 1e10;
};

enum class PathStatus { converged, singular_end, failed };

struct PathResult {
    CVector x;           // homogeneous endpoint (index 0 is the homogenizing coordinate)
    double t = 1.0;      // where tracking stopped
    PathStatus status = PathStatus::failed;
    int steps = 0;
    double condition = 0;
};

/// Straight-line homotopy between two homogeneous systems sharing variables.
class LinearHomotopy {
public:
    LinearHomotopy(CompiledSystem target, CompiledSystem start, cplx gamma, CVector patch)
        : target_(std::move(target)), start_(std::move(start)), gamma_(gamma), patch_(std::move(patch)) {
        n_ = target_.nvars();
    }

    std::size_t dim() const { return n_; }
    const CVector& patch() const { return patch_; }

    /// H, dH/dx (row-major into a dim x dim matrix) and dH/dt.
    void evaluate(const CVector& x, double t, CVector& h, CMatrix& hx, CVector& ht) const {
        const std::size_t m = n_ - 1;  // polynomial equations
        thread_local std::vector<cplx> buf_f, buf_g, jac_f, jac_g;
        buf_f.resize(m);
        buf_g.resize(m);
        jac_f.resize(m * n_);
        jac_g.resize(m * n_);
        std::span<const cplx> xs(x.data(), n_);
        target_.evaluate(xs, buf_f, jac_f);
        start_.evaluate(xs, buf_g, jac_g);
        h.resize(n_);
        ht.resize(n_);
        hx.resize(n_, n_);
        const double s = 1.0 - t;
        for (std::size_t i = 0; i < m; ++i) {
            h[i] = s * buf_f[i] + t * gamma_ * buf_g[i];
            ht[i] = gamma_ * buf_g[i] - buf_f[i];
            for (std::size_t k = 0; k < n_; ++k)
                hx(i, k) = s * jac_f[i * n_ + k] + t * gamma_ * jac_g[i * n_ + k];
        }
        h[m] = patch_.dot(x) - 1.0;  // dot conjugates its first argument
        ht[m] = 0;
        for (std::size_t k = 0; k < n_; ++k) hx(m, k) = std::conj(patch_[k]);
    }

private:
    CompiledSystem target_, start_;
    cplx gamma_;
    CVector patch_;
    std::size_t n_ = 0;
};

namespace detail {

inline double rel_norm(const CVector& dx, const CVector& x) { return dx.norm() / (1.0 + x.norm()); }

/// Newton at fixed t. Returns true if the update norm drops below tol
/// with monotone contraction.
inline bool newton(const LinearHomotopy& hom, CVector& x, double t, int max_iters, double tol, CVector& h, CMatrix& hx,
                   CVector& ht, double* last_update = nullptr) {
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        hom.evaluate(x, t, h, hx, ht);
        Eigen::PartialPivLU<CMatrix> lu(hx);
        const CVector dx = lu.solve(-h);
        if (!dx.allFinite()) return false;
        const double rn = rel_norm(dx, x);
        if (it > 0 && rn > 0.5 * prev && rn > tol) return false;
        x += dx;
        prev = rn;
        if (last_update) *last_update = rn;
        if (rn <= tol) return true;
    }
    return false;
}

inline double condition_number(const CMatrix& m) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& sv = svd.singularValues();
    const double lo = sv[sv.size() - 1];
    return lo > 0 ? sv[0] / lo : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Track one path from t = 1 to t = 0.
inline PathResult track_path(const LinearHomotopy& hom, CVector x, const TrackerOptions& opt = {}) {
    PathResult res;
    CVector h, ht, k1, k2, xe, xp;
    CMatrix hx;
    double t = 1.0;
    double step = opt.initial_step;
    auto velocity = [&](const CVector& at, double tt, CVector& out) {
        hom.evaluate(at, tt, h, hx, ht);
        Eigen::PartialPivLU<CMatrix> lu(hx);
        out = lu.solve(-ht);
        return out.allFinite();
    };

    while (t > 0) {
        if (++res.steps > opt.max_steps) break;
        step = std::min({step, opt.max_step, t});
        const double tn = (t - step < opt.min_step) ? 0.0 : t - step;
        const double dt = tn - t;  // negative
        bool ok = velocity(x, t, k1);
        if (ok) {
            xe = x + dt * k1;
            ok = velocity(xe, tn, k2);
        }
        double err = 0;
        if (ok) {
            xp = x + (0.5 * dt) * (k1 + k2);
            err = detail::rel_norm(xp - xe, x);
            ok = err <= opt.predictor_tol * 10;
        }
        if (ok) ok = detail::newton(hom, xp, tn, opt.max_corrector_iters, opt.corrector_tol, h, hx, ht);
        if (ok) {
            x = xp;
            t = tn;
            const double grow = err > 0 ? 0.9 * std::sqrt(opt.predictor_tol / err) : 2.0;
            step *= std::clamp(grow, 0.5, 2.0);
        } else {
            step *= 0.5;
            if (step < opt.min_step || (t < opt.endgame_cutoff)) break;
            // Inside the endgame region a stalled path is an ill-conditioned endpoint.
            if (step < 1e-3 * t && t < 1e-6) break;
        }
    }

    res.t = t;
    res.x = x;
    if (t == 0.0) {
        double upd = 0;
        const bool conv = detail::newton(hom, x, 0.0, 8, 1e-13, h, hx, ht, &upd) || upd < 1e-10;
        hom.evaluate(x, 0.0, h, hx, ht);
        res.condition = detail::condition_number(hx);
        res.x = x;
        res.status = (conv && res.condition < opt.singular_cond) ? PathStatus::converged : PathStatus::singular_end;
        return res;
    }
    if (t < 1e-4) {
        hom.evaluate(x, t, h, hx, ht);
        res.condition = detail::condition_number(hx);
        res.status = PathStatus::singular_end;
        return res;
    }
    res.status = PathStatus::failed;
    return res;
}

}  // namespace mlmiss
