#pragma once

// Dense two-phase tableau simplex with Bland's rule. Templated on the
// number type; used with exact rationals, where pivoting never needs a
// tolerance.

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mlmiss {

enum class Relation { le, ge, eq };

template <class Q>
struct LinearConstraint {
    std::vector<Q> a;
    Relation rel = Relation::le;
    Q b = 0;
};

/// maximize c.x subject to the constraints; every variable is >= 0 unless
/// listed as free.
template <class Q>
struct LinearProgram {
    std::size_t nvars = 0;
    std::vector<Q> c;
    std::vector<LinearConstraint<Q>> rows;
    std::vector<bool> free;  // empty means all nonnegative

    void add(std::vector<Q> a, Relation rel, Q b) {
        if (a.size() != nvars) throw std::invalid_argument("constraint length does not match the variable count");
        rows.push_back({std::move(a), rel, std::move(b)});
    }
};

enum class LPStatus { optimal, infeasible, unbounded };

template <class Q>
struct LPResult {
    LPStatus status = LPStatus::infeasible;
    Q value = 0;
    std::vector<Q> x;
    int pivots = 0;
};

namespace detail {

template <class Q>
class Tableau {
public:
    // rows x (cols + 1); last column is the right-hand side.
    std::vector<std::vector<Q>> t;
    std::vector<std::size_t> basis;
    std::size_t cols = 0;
    int pivots = 0;

    void pivot(std::size_t r, std::size_t c) {
        ++pivots;
        const Q inv = Q(1) / t[r][c];
        for (auto& v : t[r]) v *= inv;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i == r || t[i][c] == 0) continue;
            const Q f = t[i][c];
            for (std::size_t k = 0; k <= cols; ++k)
                if (t[r][k] != 0) t[i][k] -= f * t[r][k];
        }
        basis[r] = c;
    }

    /// Maximize obj.x over the current basis; columns with allowed[c] false
    /// never enter. Returns false if unbounded.
    bool optimize(const std::vector<Q>& obj, const std::vector<bool>& allowed) {
        for (;;) {
            // reduced cost of column c: obj[c] - sum_i obj[basis_i] t[i][c]
            std::size_t enter = cols;
            for (std::size_t c = 0; c < cols && enter == cols; ++c) {
                if (!allowed[c]) continue;
                Q rc = obj[c];
                for (std::size_t i = 0; i < t.size(); ++i)
                    if (t[i][c] != 0) rc -= obj[basis[i]] * t[i][c];
                if (rc > 0) enter = c;
            }
            if (enter == cols) return true;
            std::size_t leave = t.size();
            Q best = 0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (!(t[i][enter] > 0)) continue;
                const Q ratio = t[i][cols] / t[i][enter];
                if (leave == t.size() || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave == t.size()) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace detail

template <class Q>
LPResult<Q> solve_lp(const LinearProgram<Q>& lp) {
    const std::size_t n0 = lp.nvars;
    if (lp.c.size() != n0) throw std::invalid_argument("objective length does not match the variable count");
    std::vector<bool> is_free = lp.free;
    is_free.resize(n0, false);

    // Column layout: original (nonnegative part), negative parts of free
    // variables, slacks/surpluses, artificials.
    std::vector<std::size_t> neg_col(n0, 0);
    std::size_t ncol = n0;
    for (std::size_t j = 0; j < n0; ++j)
        if (is_free[j]) neg_col[j] = ncol++;
    const std::size_t m = lp.rows.size();
    std::vector<std::size_t> slack_col(m, 0);
    for (std::size_t i = 0; i < m; ++i)
        if (lp.rows[i].rel != Relation::eq) slack_col[i] = ncol++;
    const std::size_t first_art = ncol;

    // Rows are sign-normalized so that b >= 0; a row then starts from its
    // slack if it reads <=, otherwise from an artificial.
    std::vector<bool> flip(m, false), needs_art(m, false);
    std::vector<std::size_t> art_col(m, 0);
    std::size_t nart = 0;
    for (std::size_t i = 0; i < m; ++i) {
        flip[i] = lp.rows[i].b < 0;
        Relation eff = lp.rows[i].rel;
        if (flip[i] && eff != Relation::eq) eff = (eff == Relation::le) ? Relation::ge : Relation::le;
        needs_art[i] = eff != Relation::le;
        if (needs_art[i]) art_col[i] = first_art + nart++;
    }
    const std::size_t total_cols = first_art + nart;

    detail::Tableau<Q> tab;
    tab.cols = total_cols;
    tab.t.assign(m, std::vector<Q>(total_cols + 1, Q(0)));
    tab.basis.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& row = lp.rows[i];
        const Q sgn = flip[i] ? Q(-1) : Q(1);
        auto& r = tab.t[i];
        for (std::size_t j = 0; j < n0; ++j) {
            r[j] = sgn * row.a[j];
            if (is_free[j]) r[neg_col[j]] = -r[j];
        }
        r[total_cols] = sgn * row.b;
        if (row.rel != Relation::eq) r[slack_col[i]] = (row.rel == Relation::le) ? sgn : -sgn;
        if (needs_art[i]) {
            r[art_col[i]] = 1;
            tab.basis[i] = art_col[i];
        } else {
            tab.basis[i] = slack_col[i];
        }
    }

    LPResult<Q> res;
    std::vector<bool> allowed(total_cols, true);
    if (nart > 0) {
        std::vector<Q> phase1(total_cols, Q(0));
        for (std::size_t c = first_art; c < total_cols; ++c) phase1[c] = -1;
        tab.optimize(phase1, allowed);
        Q infeas = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (tab.basis[i] >= first_art) infeas += tab.t[i][total_cols];
        if (infeas != 0) {
            res.status = LPStatus::infeasible;
            res.pivots = tab.pivots;
            return res;
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        for (std::size_t i = 0; i < tab.t.size();) {
            if (tab.basis[i] < first_art) {
                ++i;
                continue;
            }
            std::size_t c = 0;
            while (c < first_art && tab.t[i][c] == 0) ++c;
            if (c < first_art) {
                tab.pivot(i, c);
                ++i;
            } else {
                tab.t.erase(tab.t.begin() + static_cast<std::ptrdiff_t>(i));
                tab.basis.erase(tab.basis.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        for (std::size_t c = first_art; c < total_cols; ++c) allowed[c] = false;
    }

    std::vector<Q> obj(total_cols, Q(0));
    for (std::size_t j = 0; j < n0; ++j) {
        obj[j] = lp.c[j];
        if (is_free[j]) obj[neg_col[j]] = -lp.c[j];
    }
    const bool bounded = tab.optimize(obj, allowed);
    res.pivots = tab.pivots;
    if (!bounded) {
        res.status = LPStatus::unbounded;
        return res;
    }
    std::vector<Q> full(total_cols, Q(0));
    for (std::size_t i = 0; i < tab.t.size(); ++i) full[tab.basis[i]] = tab.t[i][total_cols];
    res.x.assign(n0, Q(0));
    for (std::size_t j = 0; j < n0; ++j) res.x[j] = is_free[j] ? full[j] - full[neg_col[j]] : full[j];
    res.value = 0;
    for (std::size_t j = 0; j < n0; ++j) res.value += lp.c[j] * res.x[j];
    res.status = LPStatus::optimal;
    return res;
}

}  // namespace mlmiss
