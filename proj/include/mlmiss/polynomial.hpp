#pragma once

// Sparse multivariate polynomials over an arbitrary coefficient ring, plus a
// flattened complex evaluator (values and Jacobian) used by path tracking.

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlmiss {

inline constexpr std::size_t kMaxVars = 8;
using Exponents = std::array<std::uint8_t, kMaxVars>;
using cplx = std::complex<double>;

inline int total_degree(const Exponents& e) {
    int d = 0;
    for (auto v : e) d += v;
    return d;
}

template <class Coeff>
class Polynomial {
public:
    using Terms = std::map<Exponents, Coeff>;

    Polynomial() = default;
    explicit Polynomial(std::size_t nvars) : nvars_(nvars) {
        if (nvars > kMaxVars) throw std::invalid_argument("too many polynomial variables");
    }

    static Polynomial constant(std::size_t nvars, const Coeff& c) {
        Polynomial p(nvars);
        p.add_term(Exponents{}, c);
        return p;
    }
    static Polynomial variable(std::size_t nvars, std::size_t index) {
        Polynomial p(nvars);
        Exponents e{};
        e.at(index) = 1;
        p.add_term(e, Coeff(1));
        return p;
    }

    std::size_t nvars() const { return nvars_; }
    const Terms& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const Exponents& e, const Coeff& c) {
        if (c == Coeff(0)) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == Coeff(0)) terms_.erase(it);
        }
    }

    int degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
        return d;
    }
    int degree_in(std::size_t var) const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max<int>(d, e[var]);
        return d;
    }

    Polynomial& operator+=(const Polynomial& o) {
        adopt_nvars(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        adopt_nvars(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    Polynomial& operator*=(const Coeff& k) {
        if (k == Coeff(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= k;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator-(Polynomial a) { return a *= Coeff(-1); }
    friend Polynomial operator*(Polynomial a, const Coeff& k) { return a *= k; }
    friend Polynomial operator*(const Coeff& k, Polynomial a) { return a *= k; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial out(std::max(a.nvars_, b.nvars_));
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                Exponents e;
                for (std::size_t i = 0; i < kMaxVars; ++i) e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
                out.add_term(e, ca * cb);
            }
        return out;
    }
    Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

    Polynomial pow(unsigned k) const {
        Polynomial out = constant(nvars_, Coeff(1));
        for (unsigned i = 0; i < k; ++i) out *= *this;
        return out;
    }

    Polynomial derivative(std::size_t var) const {
        Polynomial out(nvars_);
        for (const auto& [e, c] : terms_) {
            if (e[var] == 0) continue;
            Exponents d = e;
            --d[var];
            out.add_term(d, c * Coeff(static_cast<int>(e[var])));
        }
        return out;
    }

    template <class T>
    T evaluate(std::span<const T> x) const {
        T acc(0);
        for (const auto& [e, c] : terms_) {
            T m = T(c);
            for (std::size_t i = 0; i < nvars_; ++i)
                for (int k = 0; k < e[i]; ++k) m *= x[i];
            acc += m;
        }
        return acc;
    }

    template <class Out, class F>
    Polynomial<Out> map_coefficients(F&& f) const {
        Polynomial<Out> out(nvars_);
        for (const auto& [e, c] : terms_) out.add_term(e, f(c));
        return out;
    }

    /// Exact quotient by `d`. Throws std::domain_error if `d` does not divide.
    /// Uses the lexicographic leading term, so it is only meant for exact
    /// coefficient rings.
    Polynomial exact_divide(const Polynomial& d) const {
        if (d.is_zero()) throw std::domain_error("division by the zero polynomial");
        const auto& [lead_e, lead_c] = *d.terms_.rbegin();
        Polynomial rem = *this;
        Polynomial quot(std::max(nvars_, d.nvars_));
        while (!rem.is_zero()) {
            const auto& [re, rc] = *rem.terms_.rbegin();
            Exponents q{};
            for (std::size_t i = 0; i < kMaxVars; ++i) {
                if (re[i] < lead_e[i]) throw std::domain_error("polynomial division is not exact");
                q[i] = static_cast<std::uint8_t>(re[i] - lead_e[i]);
            }
            Polynomial mono(quot.nvars());
            mono.add_term(q, rc / lead_c);
            quot += mono;
            rem -= mono * d;
        }
        return quot;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

private:
    void adopt_nvars(const Polynomial& o) { nvars_ = std::max(nvars_, o.nvars_); }

    std::size_t nvars_ = 0;
    Terms terms_;
};

/// A square-or-not list of complex polynomials flattened for repeated
/// evaluation of values and Jacobians.
class CompiledSystem {
public:
    CompiledSystem() = default;

    explicit CompiledSystem(const std::vector<Polynomial<cplx>>& polys, std::size_t nvars)
        : nvars_(nvars), npolys_(polys.size()) {
        offsets_.push_back(0);
        for (const auto& p : polys) {
            for (const auto& [e, c] : p.terms()) {
                coeffs_.push_back(c);
                for (std::size_t i = 0; i < nvars_; ++i) {
                    exps_.push_back(e[i]);
                    max_exp_ = std::max<int>(max_exp_, e[i]);
                }
            }
            offsets_.push_back(coeffs_.size());
        }
    }

    std::size_t nvars() const { return nvars_; }
    std::size_t npolys() const { return npolys_; }

    /// values[i] = f_i(x); jac[i * nvars + k] = d f_i / d x_k (jac may be empty).
    void evaluate(std::span<const cplx> x, std::span<cplx> values, std::span<cplx> jac) const {
        const std::size_t stride = static_cast<std::size_t>(max_exp_) + 1;
        // powers[k * stride + e] = x_k^e
        cplx powers[kMaxVars * 16];
        std::vector<cplx> heap;
        cplx* pw = powers;
        if (nvars_ * stride > kMaxVars * 16) {
            heap.resize(nvars_ * stride);
            pw = heap.data();
        }
        for (std::size_t k = 0; k < nvars_; ++k) {
            pw[k * stride] = 1.0;
            for (std::size_t e = 1; e < stride; ++e) pw[k * stride + e] = pw[k * stride + e - 1] * x[k];
        }
        const bool want_jac = !jac.empty();
        if (want_jac) std::fill(jac.begin(), jac.end(), cplx(0));
        cplx prefix[kMaxVars + 1];
        cplx suffix[kMaxVars + 1];
        for (std::size_t i = 0; i < npolys_; ++i) {
            cplx acc = 0;
            for (std::size_t t = offsets_[i]; t < offsets_[i + 1]; ++t) {
                const std::uint8_t* e = &exps_[t * nvars_];
                const cplx c = coeffs_[t];
                if (!want_jac) {
                    cplx m = c;
                    for (std::size_t k = 0; k < nvars_; ++k)
                        if (e[k]) m *= pw[k * stride + e[k]];
                    acc += m;
                    continue;
                }
                prefix[0] = c;
                for (std::size_t k = 0; k < nvars_; ++k)
                    prefix[k + 1] = e[k] ? prefix[k] * pw[k * stride + e[k]] : prefix[k];
                acc += prefix[nvars_];
                suffix[nvars_] = 1.0;
                for (std::size_t k = nvars_; k-- > 0;)
                    suffix[k] = e[k] ? suffix[k + 1] * pw[k * stride + e[k]] : suffix[k + 1];
                for (std::size_t k = 0; k < nvars_; ++k) {
                    if (!e[k]) continue;
                    jac[i * nvars_ + k] += static_cast<double>(e[k]) * prefix[k] * pw[k * stride + e[k] - 1] * suffix[k + 1];
                }
            }
            values[i] = acc;
        }
    }

    /// Sum over terms of |c| |x^a| for polynomial i (the natural scale of f_i(x)).
    double term_magnitude(std::size_t i, std::span<const cplx> x) const {
        double acc = 0;
        for (std::size_t t = offsets_[i]; t < offsets_[i + 1]; ++t) {
            double m = std::abs(coeffs_[t]);
            for (std::size_t k = 0; k < nvars_; ++k)
                for (int p = 0; p < exps_[t * nvars_ + k]; ++p) m *= std::abs(x[k]);
            acc += m;
        }
        return acc;
    }

private:
    std::size_t nvars_ = 0;
    std::size_t npolys_ = 0;
    int max_exp_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<cplx> coeffs_;
    std::vector<std::uint8_t> exps_;
};

/// Homogenize p to degree `deg` using a new variable inserted at index 0.
template <class Coeff>
Polynomial<Coeff> homogenize(const Polynomial<Coeff>& p, int deg) {
    if (p.nvars() + 1 > kMaxVars) throw std::invalid_argument("too many variables to homogenize");
    Polynomial<Coeff> out(p.nvars() + 1);
    for (const auto& [e, c] : p.terms()) {
        Exponents h{};
        const int d = total_degree(e);
        if (d > deg) throw std::invalid_argument("homogenization degree below polynomial degree");
        h[0] = static_cast<std::uint8_t>(deg - d);
        for (std::size_t i = 0; i < p.nvars(); ++i) h[i + 1] = e[i];
        out.add_term(h, c);
    }
    return out;
}

}  // namespace mlmiss
