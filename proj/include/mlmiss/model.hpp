#pragma once

// Domain types shared by every part of the library: raw bivariate data with a
// three-block censoring pattern, its sufficient statistics, Gaussian
// parameters in concentration-matrix coordinates, and multinomial tables.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mlmiss {

using json = nlohmann::json;

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Bivariate observations split by censoring pattern.
///   y: both coordinates observed
///   z: only coordinate 1 observed
///   w: only coordinate 2 observed
struct Dataset {
    std::vector<std::array<double, 2>> y;
    std::vector<double> z;
    std::vector<double> w;

    void validate() const {
        if (y.empty() && z.empty() && w.empty())
            throw std::invalid_argument("dataset has no observations");
        for (const auto& p : y)
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
                throw std::invalid_argument("dataset contains a non-finite complete case");
        for (double v : z)
            if (!std::isfinite(v)) throw std::invalid_argument("dataset contains a non-finite z value");
        for (double v : w)
            if (!std::isfinite(v)) throw std::invalid_argument("dataset contains a non-finite w value");
    }
};

/// The twelve sufficient statistics of the bivariate missing-data likelihood.
/// Counts are real so that directly-drawn statistics are representable.
/// Moments of a block whose count is zero carry no meaning.
struct SuffStats {
    double n = 0, r = 0, s = 0;
    double my1 = 0, my2 = 0, my11 = 0, my12 = 0, my22 = 0;
    double mz1 = 0, mz2 = 0;
    double mw1 = 0, mw2 = 0;

    double total() const { return n + r + s; }

    /// Block sums (count times mean), in the order
    /// n, r, s, Sy1, Sy2, Sy11, Sy12, Sy22, Sz1, Sz2, Sw1, Sw2.
    /// The cleared score equations are linear in this vector.
    std::array<double, 12> sums() const {
        return {n, r, s, n * my1, n * my2, n * my11, n * my12, n * my22,
                r * mz1, r * mz2, s * mw1, s * mw2};
    }

    bool all_finite() const {
        for (double v : {n, r, s, my1, my2, my11, my12, my22, mz1, mz2, mw1, mw2})
            if (!std::isfinite(v)) return false;
        return true;
    }

    void validate() const {
        if (!all_finite()) throw std::invalid_argument("sufficient statistics must be finite");
        if (n < 0 || r < 0 || s < 0) throw std::invalid_argument("block counts must be nonnegative");
        if (total() <= 0) throw std::invalid_argument("sufficient statistics describe no observations");
    }

    /// Swap the roles of the two coordinates (and of the z and w blocks).
    SuffStats swapped() const {
        SuffStats o;
        o.n = n; o.r = s; o.s = r;
        o.my1 = my2; o.my2 = my1; o.my11 = my22; o.my22 = my11; o.my12 = my12;
        o.mz1 = mw1; o.mz2 = mw2; o.mw1 = mz1; o.mw2 = mz2;
        return o;
    }
};

inline constexpr double kVarianceTol = 1e-9;

/// Reduce a dataset to its sufficient statistics (block means of the
/// required transforms, compensated single pass).
inline SuffStats reduce(const Dataset& d) {
    d.validate();
    SuffStats st;
    st.n = static_cast<double>(d.y.size());
    st.r = static_cast<double>(d.z.size());
    st.s = static_cast<double>(d.w.size());
    if (!d.y.empty()) {
        CompensatedSum s1, s2, s11, s12, s22;
        for (const auto& p : d.y) {
            s1.add(p[0]);
            s2.add(p[1]);
            s11.add(p[0] * p[0]);
            s12.add(p[0] * p[1]);
            s22.add(p[1] * p[1]);
        }
        st.my1 = s1.value() / st.n;
        st.my2 = s2.value() / st.n;
        st.my11 = s11.value() / st.n;
        st.my12 = s12.value() / st.n;
        st.my22 = s22.value() / st.n;
    }
    auto block = [](const std::vector<double>& v, double& m1, double& m2) {
        if (v.empty()) return;
        CompensatedSum a, b;
        for (double x : v) {
            a.add(x);
            b.add(x * x);
        }
        m1 = a.value() / static_cast<double>(v.size());
        m2 = b.value() / static_cast<double>(v.size());
    };
    block(d.z, st.mz1, st.mz2);
    block(d.w, st.mw1, st.mw2);
    return st;
}

/// Symmetric 2x2 matrix stored as (a11, a12, a22).
struct Sym2 {
    double a11 = 0, a12 = 0, a22 = 0;
    double det() const { return a11 * a22 - a12 * a12; }
    bool positive_definite() const { return a11 > 0 && det() > 0; }
};

/// Inverse of a positive-definite symmetric 2x2 matrix (adjugate over determinant).
inline Sym2 inverse_pd(const Sym2& m) {
    if (!std::isfinite(m.a11) || !std::isfinite(m.a12) || !std::isfinite(m.a22) || !m.positive_definite())
        throw std::domain_error("matrix is not positive definite");
    const double d = m.det();
    return {m.a22 / d, -m.a12 / d, m.a11 / d};
}

inline Sym2 gamma_from_sigma(const Sym2& sigma) { return inverse_pd(sigma); }
inline Sym2 sigma_from_gamma(const Sym2& gamma) { return inverse_pd(gamma); }

/// Mean and concentration matrix Gamma = Sigma^{-1}.
struct GaussianParams {
    double mu1 = 0, mu2 = 0;
    double g11 = 1, g12 = 0, g22 = 1;

    Sym2 gamma() const { return {g11, g12, g22}; }
    double det_gamma() const { return g11 * g22 - g12 * g12; }
    /// (mu, Gamma) lies in R^2 x PD_2.
    bool relevant() const { return g11 > 0 && det_gamma() > 0; }
    Sym2 sigma() const { return sigma_from_gamma(gamma()); }

    std::array<double, 5> as_array() const { return {mu1, mu2, g11, g12, g22}; }
    static GaussianParams from_array(const std::array<double, 5>& x) {
        return {x[0], x[1], x[2], x[3], x[4]};
    }
    static GaussianParams from_mean_sigma(double mu1, double mu2, const Sym2& sigma) {
        const Sym2 g = gamma_from_sigma(sigma);
        return {mu1, mu2, g.a11, g.a12, g.a22};
    }
};

/// Multinomial missing-data counts: complete table t (m x n), row-only
/// observations rvec (m) and column-only observations svec (n).
struct CountTable {
    std::vector<std::vector<double>> t;
    std::vector<double> rvec;
    std::vector<double> svec;

    std::size_t rows() const { return t.size(); }
    std::size_t cols() const { return t.empty() ? 0 : t.front().size(); }

    double total() const {
        CompensatedSum acc;
        for (const auto& row : t)
            for (double v : row) acc.add(v);
        for (double v : rvec) acc.add(v);
        for (double v : svec) acc.add(v);
        return acc.value();
    }

    void validate() const {
        const std::size_t m = rows(), n = cols();
        if (m == 0 || n == 0) throw std::invalid_argument("count table must be at least 1x1");
        for (const auto& row : t)
            if (row.size() != n) throw std::invalid_argument("count table rows have unequal length");
        if (rvec.size() != m) throw std::invalid_argument("rvec length must equal the number of rows");
        if (svec.size() != n) throw std::invalid_argument("svec length must equal the number of columns");
        auto ok = [](double v) { return std::isfinite(v) && v >= 0; };
        for (const auto& row : t)
            for (double v : row)
                if (!ok(v)) throw std::invalid_argument("table counts must be finite and nonnegative");
        for (double v : rvec)
            if (!ok(v)) throw std::invalid_argument("rvec counts must be finite and nonnegative");
        for (double v : svec)
            if (!ok(v)) throw std::invalid_argument("svec counts must be finite and nonnegative");
        if (total() <= 0) throw std::invalid_argument("count table is empty");
    }
};

/// Joint probability table p_ij with margin helpers.
struct ProbTable {
    std::vector<std::vector<double>> p;

    static ProbTable uniform(std::size_t m, std::size_t n) {
        const double v = 1.0 / static_cast<double>(m * n);
        return {std::vector<std::vector<double>>(m, std::vector<double>(n, v))};
    }

    std::size_t rows() const { return p.size(); }
    std::size_t cols() const { return p.empty() ? 0 : p.front().size(); }

    double row_sum(std::size_t i) const {
        double acc = 0;
        for (double v : p[i]) acc += v;
        return acc;
    }
    double col_sum(std::size_t j) const {
        double acc = 0;
        for (const auto& row : p) acc += row[j];
        return acc;
    }
    double total() const {
        double acc = 0;
        for (const auto& row : p)
            for (double v : row) acc += v;
        return acc;
    }
    bool nonnegative() const {
        for (const auto& row : p)
            for (double v : row)
                if (v < 0) return false;
        return true;
    }
    double max_abs_diff(const ProbTable& o) const {
        double d = 0;
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j) d = std::max(d, std::abs(p[i][j] - o.p[i][j]));
        return d;
    }
};

// ---------------------------------------------------------------------------
// JSON (field names match the struct members; grids are row-major arrays)

inline void to_json(json& j, const Dataset& d) {
    j = json{{"y", json::array()}, {"z", d.z}, {"w", d.w}};
    for (const auto& p : d.y) j["y"].push_back({p[0], p[1]});
}

inline void from_json(const json& j, Dataset& d) {
    d = Dataset{};
    if (j.contains("y"))
        for (const auto& p : j.at("y")) {
            if (!p.is_array() || p.size() != 2) throw std::invalid_argument("each y entry must be a pair");
            d.y.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    if (j.contains("z")) d.z = j.at("z").get<std::vector<double>>();
    if (j.contains("w")) d.w = j.at("w").get<std::vector<double>>();
}

inline void to_json(json& j, const SuffStats& s) {
    j = json{{"n", s.n},       {"r", s.r},       {"s", s.s},       {"my1", s.my1},
             {"my2", s.my2},   {"my11", s.my11}, {"my12", s.my12}, {"my22", s.my22},
             {"mz1", s.mz1},   {"mz2", s.mz2},   {"mw1", s.mw1},   {"mw2", s.mw2}};
}

inline void from_json(const json& j, SuffStats& s) {
    s = SuffStats{};
    s.n = j.at("n").get<double>();
    s.r = j.at("r").get<double>();
    s.s = j.at("s").get<double>();
    auto opt = [&](const char* key, double& out) {
        if (j.contains(key)) out = j.at(key).get<double>();
    };
    opt("my1", s.my1); opt("my2", s.my2); opt("my11", s.my11); opt("my12", s.my12); opt("my22", s.my22);
    opt("mz1", s.mz1); opt("mz2", s.mz2); opt("mw1", s.mw1); opt("mw2", s.mw2);
}

inline void to_json(json& j, const GaussianParams& g) {
    j = json{{"mu1", g.mu1}, {"mu2", g.mu2}, {"g11", g.g11}, {"g12", g.g12}, {"g22", g.g22}};
}

inline void from_json(const json& j, GaussianParams& g) {
    g.mu1 = j.at("mu1").get<double>();
    g.mu2 = j.at("mu2").get<double>();
    g.g11 = j.at("g11").get<double>();
    g.g12 = j.at("g12").get<double>();
    g.g22 = j.at("g22").get<double>();
}

inline void to_json(json& j, const CountTable& c) {
    j = json{{"t", c.t}, {"rvec", c.rvec}, {"svec", c.svec}};
}

inline void from_json(const json& j, CountTable& c) {
    c.t = j.at("t").get<std::vector<std::vector<double>>>();
    c.rvec = j.at("rvec").get<std::vector<double>>();
    c.svec = j.at("svec").get<std::vector<double>>();
}

inline void to_json(json& j, const ProbTable& p) { j = json{{"p", p.p}}; }

inline void from_json(const json& j, ProbTable& p) {
    p.p = j.at("p").get<std::vector<std::vector<double>>>();
}

}  // namespace mlmiss
