#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace physec {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Sample variance (ddof = 1); returns 0 for a single element.
inline double variance(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("variance: empty input");
    if (xs.size() == 1) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

// Linear-interpolation empirical quantile (R/numpy type 7).
inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty input");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile: p outside [0,1]");
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson: need two equal-length series");
    const double ma = mean(a), mb = mean(b);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

// Two-sided p-value of a binomial(n, 1/2) count under the normal
// approximation; used for "indistinguishable from chance" checks.
inline double binomial_half_pvalue(std::size_t successes, std::size_t n) {
    if (n == 0) throw std::invalid_argument("binomial_half_pvalue: n = 0");
    const double z = (static_cast<double>(successes) - 0.5 * static_cast<double>(n)) /
                     std::sqrt(0.25 * static_cast<double>(n));
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

} // namespace physec
