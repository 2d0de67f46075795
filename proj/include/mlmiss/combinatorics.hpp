#pragma once

// Exact counting: Stirling numbers of the second kind, negative-index
// poly-Bernoulli numbers, the bivariate multinomial ML-degree, and a
// brute-force lonesum enumerator used as an independent oracle.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "parallel.hpp"

namespace mlmiss {

using BigCount = boost::multiprecision::cpp_int;

inline constexpr int kLonesumMaxCells = 25;

inline BigCount binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigCount c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

inline BigCount factorial(int n) {
    BigCount f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline BigCount ipow(int base, int e) {
    return boost::multiprecision::pow(BigCount(base), static_cast<unsigned>(e));
}

/// S(l,k) = (1/k!) sum_{i=0}^{k} (-1)^{k-i} C(k,i) i^l, with 0^0 = 1.
inline BigCount stirling2(int l, int k) {
    if (l < 0 || k < 0) throw std::invalid_argument("stirling2 needs nonnegative arguments");
    BigCount sum = 0;
    for (int i = 0; i <= k; ++i) {
        BigCount term = binomial(k, i) * ipow(i, l);
        if ((k - i) % 2) sum -= term;
        else sum += term;
    }
    return sum / factorial(k);
}

/// Triangle of S(l,k) for 0 <= k <= l <= lmax by S(l,k) = k S(l-1,k) + S(l-1,k-1).
inline std::vector<std::vector<BigCount>> stirling2_table(int lmax) {
    if (lmax < 0) throw std::invalid_argument("stirling2_table needs lmax >= 0");
    std::vector<std::vector<BigCount>> s(lmax + 1, std::vector<BigCount>(lmax + 1, 0));
    s[0][0] = 1;
    for (int l = 1; l <= lmax; ++l)
        for (int k = 1; k <= l; ++k) s[l][k] = k * s[l - 1][k] + s[l - 1][k - 1];
    return s;
}

/// B(l,k) = sum_{i=0}^{l} (-1)^{l-i} i! S(l,i) (i+1)^k.
inline BigCount poly_bernoulli(int l, int k) {
    if (l < 0 || k < 0) throw std::invalid_argument("poly_bernoulli needs nonnegative arguments");
    BigCount sum = 0;
    for (int i = 0; i <= l; ++i) {
        BigCount term = factorial(i) * stirling2(l, i) * ipow(i + 1, k);
        if ((l - i) % 2) sum -= term;
        else sum += term;
    }
    return sum;
}

/// ML(m,n) = sum_{k=0}^{m} sum_{l=0}^{n} (-1)^{k+l} C(m,k) C(n,l) B(m-k, n-l):
/// inclusion-exclusion over k rows and l columns forced to zero, counting
/// lonesum matrices with all margins positive. With the exponent m+n-k-l
/// instead, the sum picks up a factor (-1)^(m+n) (e.g. -13 at (2,3)).
inline BigCount ml_degree(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("ml_degree needs m, n >= 1");
    BigCount sum = 0;
    for (int k = 0; k <= m; ++k)
        for (int l = 0; l <= n; ++l) {
            BigCount term = binomial(m, k) * binomial(n, l) * poly_bernoulli(m - k, n - l);
            if ((k + l) % 2) sum -= term;
            else sum += term;
        }
    return sum;
}

/// Row bitmasks of a binary m x n matrix; lonesum iff the rows are totally
/// ordered by inclusion (no 2x2 identity or anti-identity submatrix).
inline bool is_lonesum(const std::vector<std::uint32_t>& rows) {
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            const std::uint32_t x = rows[a], y = rows[b];
            if ((x & ~y) && (y & ~x)) return false;
        }
    return true;
}

/// Brute force over all 2^(mn) binary matrices.
inline BigCount count_lonesum(int m, int n, bool require_positive_margins, unsigned jobs = 1,
                              int max_cells = kLonesumMaxCells) {
    if (m < 0 || n < 0) throw std::invalid_argument("count_lonesum needs nonnegative sizes");
    if (m * n > max_cells)
        throw std::length_error("count_lonesum: m*n = " + std::to_string(m * n) + " exceeds the enumeration bound " +
                                std::to_string(max_cells));
    if (n > 31) throw std::length_error("count_lonesum: n too large for row bitmasks");
    const int cells = m * n;
    const std::uint64_t total = std::uint64_t{1} << cells;
    const std::uint32_t rowmask = (n == 0) ? 0u : static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
    // Shard by the top bits; each shard writes its own slot.
    const int shard_bits = std::min(cells, 6);
    const std::uint64_t shards = std::uint64_t{1} << shard_bits;
    const std::uint64_t per = total / shards;
    std::vector<std::uint64_t> counts(shards, 0);
    parallel_for(shards, jobs, [&](std::size_t sh) {
        std::vector<std::uint32_t> rows(m);
        std::uint64_t c = 0;
        for (std::uint64_t code = sh * per; code < (sh + 1) * per; ++code) {
            std::uint32_t cols = 0;
            bool zero_row = false;
            for (int i = 0; i < m; ++i) {
                rows[i] = static_cast<std::uint32_t>(code >> (i * n)) & rowmask;
                cols |= rows[i];
                if (rows[i] == 0) zero_row = true;
            }
            if (require_positive_margins && (zero_row || cols != rowmask)) continue;
            if (is_lonesum(rows)) ++c;
        }
        counts[sh] = c;
    });
    BigCount sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

}  // namespace mlmiss
