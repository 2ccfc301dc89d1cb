#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

// Shared oracle helpers for the test suites. Everything here is written
// independently of the library internals it checks.

namespace testsupport {

/// Dense Poisson pmf over n = 0..n_max via the log form, term by term.
inline std::vector<double> poisson_pmf(double mean, std::size_t n_max) {
    std::vector<double> out(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        if (mean == 0.0) {
            out[n] = n == 0 ? 1.0 : 0.0;
            continue;
        }
        const double logp = static_cast<double>(n) * std::log(mean) - mean -
                            std::lgamma(static_cast<double>(n) + 1.0);
        out[n] = std::exp(logp);
    }
    return out;
}

/// Two-sided Kolmogorov-Smirnov statistic of samples against an analytic CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
    }
    return d;
}

/// Asymptotic KS p-value: Q(lambda) = 2 sum_k (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double ks_p_value(double d, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lambda = (rn + 0.12 + 0.11 / rn) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace testsupport
