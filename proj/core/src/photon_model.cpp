#include "nvrti/photon_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "nvrti/errors.hpp"

namespace nvrti {

const char* to_string(ChargeState s) {
    return s == ChargeState::negative ? "negative" : "neutral";
}

double PhotonDistribution::total() const {
    return std::accumulate(pmf.begin(), pmf.end(), 0.0);
}

double PhotonDistribution::mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) m += static_cast<double>(n) * pmf[n];
    return m;
}

double log_poisson_pmf(double mean, std::int64_t n) {
    if (mean < 0.0) throw std::domain_error("Poisson mean must be non-negative");
    if (n < 0) throw std::domain_error("photon count must be non-negative");
    if (mean == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double nd = static_cast<double>(n);
    return nd * std::log(mean) - mean - std::lgamma(nd + 1.0);
}

namespace {

constexpr double kSeriesCutoff = 30.0;

// Ascending series sum_k (x/2)^(2k+nu) / (k! (k+nu)!).
double bessel_series(int order, double x) {
    const double q = 0.25 * x * x;
    double term = order == 0 ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k < 400; ++k) {
        term *= q / (static_cast<double>(k) * (k + order));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

// Large-argument expansion e^x/sqrt(2 pi x) * sum_k (-1)^k a_k(nu)/x^k,
// truncated where the terms stop shrinking.
double bessel_asymptotic(int order, double x) {
    const double mu = 4.0 * order * order;
    double term = 1.0;
    double sum = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * x * k);
        if (std::abs(term) >= prev) break;
        sum += term;
        prev = std::abs(term);
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(x) / std::sqrt(2.0 * M_PI * x) * sum;
}

// I1(z) / (z/2): entire in z^2, equals 1 at z = 0. Working with this ratio
// removes the 0 * inf ambiguity of the even-parity integrand at both the
// tau = t_R endpoint and the zero-rate limit.
double bessel_i1_over_half_z(double z) {
    if (z <= kSeriesCutoff) {
        const double q = 0.25 * z * z;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 400; ++k) {
            term *= q / (static_cast<double>(k) * (k + 1));
            sum += term;
            if (term < 1e-16 * sum) break;
        }
        return sum;
    }
    return bessel_asymptotic(1, z) / (0.5 * z);
}

// Dense Poisson pmf over n = 0..n_max. Multiplicative recurrence from
// p(0) = exp(-mean) for moderate means, per-term log evaluation otherwise.
void poisson_row(double mean, int n_max, std::vector<double>& row) {
    row.resize(static_cast<std::size_t>(n_max) + 1);
    if (mean == 0.0) {
        std::fill(row.begin(), row.end(), 0.0);
        row[0] = 1.0;
        return;
    }
    if (mean < 500.0) {
        double p = std::exp(-mean);
        row[0] = p;
        for (int n = 1; n <= n_max; ++n) {
            p *= mean / static_cast<double>(n);
            row[static_cast<std::size_t>(n)] = p;
        }
    } else {
        for (int n = 0; n <= n_max; ++n)
            row[static_cast<std::size_t>(n)] = std::exp(log_poisson_pmf(mean, n));
    }
}

// Truncation cutoff: smallest n whose cumulative Poisson tail at the largest
// relevant mean drops below 1e-12, plus 10 spare bins.
int support_cutoff(double max_mean) {
    if (max_mean <= 0.0) return 10;
    double p = std::exp(-max_mean);
    if (p == 0.0) {
        // extremely large mean; use a generous normal-tail bound instead
        return static_cast<int>(max_mean + 12.0 * std::sqrt(max_mean)) + 10;
    }
    double cdf = p;
    int n = 0;
    while (1.0 - cdf > 1e-12 && n < 100000) {
        ++n;
        p *= max_mean / static_cast<double>(n);
        cdf += p;
    }
    return n + 10;
}

struct BranchWeights {
    double odd;
    double even;
};

// Probability-weighted densities of the two transition-parity branches at
// initial-state occupation time tau.
BranchWeights parity_weights(double a, double b, double tau, double t) {
    const double w = std::exp(-a * tau - b * (t - tau));
    const double arg2 = 4.0 * a * b * tau * (t - tau);
    const double arg = std::sqrt(std::max(arg2, 0.0));
    BranchWeights bw;
    bw.odd = a * bessel_i(0, arg) * w;
    bw.even = a * b * tau * bessel_i1_over_half_z(arg) * w;
    return bw;
}

} // namespace

double bessel_i(int order, double x) {
    if (order != 0 && order != 1) throw std::domain_error("bessel_i supports orders 0 and 1");
    if (x < 0.0) throw std::domain_error("bessel_i requires x >= 0");
    if (x <= kSeriesCutoff) return bessel_series(order, x);
    return bessel_asymptotic(order, x);
}

PhotonDistribution distribution_conditional(const RateSet& rates, double t_r_s,
                                            ChargeState initial) {
    rates.validate();
    if (!(t_r_s > 0.0)) throw std::domain_error("readout duration must be positive");

    // Work in the frame of the initial state: `a` is its exit rate, `g_init`
    // its emission rate. The neutral case is the swapped negative case.
    const RateSet eff = initial == ChargeState::negative ? rates : swapped(rates);
    const double a = eff.gamma_ion_hz;
    const double b = eff.gamma_rec_hz;
    const double g_init = eff.gamma_minus_hz;
    const double g_other = eff.gamma_zero_hz;

    const double max_mean = std::max(rates.gamma_minus_hz, rates.gamma_zero_hz) * t_r_s;
    const int n_max = support_cutoff(max_mean);
    const std::size_t bins = static_cast<std::size_t>(n_max) + 1;

    PhotonDistribution dist;
    dist.n_max = n_max;
    dist.rates = rates;
    dist.t_r_s = t_r_s;
    dist.initial = to_string(initial);
    dist.pmf.assign(bins, 0.0);

    // No-transition term.
    std::vector<double> row;
    poisson_row(g_init * t_r_s, n_max, row);
    const double survival = std::exp(-a * t_r_s);
    for (std::size_t n = 0; n < bins; ++n) dist.pmf[n] = survival * row[n];

    if (a * t_r_s < 1e-14) return dist;  // transitions negligible: exact Poisson

    // Composite Simpson over tau in [0, t_R] with panel doubling. The
    // integrand is analytic on the closed interval (the even branch's
    // apparent endpoint singularity cancels inside parity_weights), so the
    // rule converges at full order.
    auto integrate = [&](std::size_t panels, std::vector<double>& out) {
        out.assign(bins, 0.0);
        const double h = t_r_s / static_cast<double>(panels);
        std::vector<double> prow;
        for (std::size_t j = 0; j <= panels; ++j) {
            const double tau = (j == panels) ? t_r_s : h * static_cast<double>(j);
            const double simpson_c = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            const BranchWeights bw = parity_weights(a, b, tau, t_r_s);
            const double weight = (bw.odd + bw.even) * simpson_c;
            if (weight == 0.0) continue;
            poisson_row(g_init * tau + g_other * (t_r_s - tau), n_max, prow);
            for (std::size_t n = 0; n < bins; ++n) out[n] += weight * prow[n];
        }
        const double scale = h / 3.0;
        for (double& v : out) v *= scale;
    };

    constexpr std::size_t max_panels = std::size_t{1} << 20;
    std::vector<double> current, previous;
    std::size_t panels = 16;
    integrate(panels, current);
    double achieved = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (panels < max_panels) {
        panels *= 2;
        previous.swap(current);
        integrate(panels, current);
        double peak = 0.0;
        double change = 0.0;
        for (std::size_t n = 0; n < bins; ++n) {
            peak = std::max(peak, current[n]);
            change = std::max(change, std::abs(current[n] - previous[n]));
        }
        achieved = peak > 0.0 ? change / peak : 0.0;
        if (achieved < 1e-9) {
            converged = true;
            break;
        }
    }
    if (!converged) throw numerical_error("photon distribution quadrature did not converge",
                                          achieved);

    for (std::size_t n = 0; n < bins; ++n) dist.pmf[n] += current[n];

    // Quadrature round-off can push the sum a hair above one; rescale so the
    // stored pmf stays a distribution.
    const double total = dist.total();
    if (total > 1.0)
        for (double& v : dist.pmf) v /= total;
    return dist;
}

PhotonDistribution distribution_mixture(const RateSet& rates, double t_r_s, double p_minus) {
    if (p_minus < 0.0 || p_minus > 1.0) throw std::domain_error("p_minus must lie in [0,1]");
    PhotonDistribution minus = distribution_conditional(rates, t_r_s, ChargeState::negative);
    PhotonDistribution zero = distribution_conditional(rates, t_r_s, ChargeState::neutral);
    PhotonDistribution out = minus;
    out.initial = "mixture p=" + std::to_string(p_minus);
    const std::size_t bins = std::max(minus.pmf.size(), zero.pmf.size());
    out.pmf.assign(bins, 0.0);
    out.n_max = static_cast<int>(bins) - 1;
    for (std::size_t n = 0; n < bins; ++n) {
        const double pm = n < minus.pmf.size() ? minus.pmf[n] : 0.0;
        const double pz = n < zero.pmf.size() ? zero.pmf[n] : 0.0;
        out.pmf[n] = p_minus * pm + (1.0 - p_minus) * pz;
    }
    return out;
}

double tail_probability(const PhotonDistribution& dist, std::int64_t nu) {
    if (nu < 0) throw std::domain_error("threshold must be non-negative");
    if (nu > dist.n_max) return 0.0;
    double tail = 0.0;
    for (std::size_t n = dist.pmf.size(); n-- > static_cast<std::size_t>(nu);)
        tail += dist.pmf[n];
    return std::clamp(tail, 0.0, 1.0);
}

ThresholdChoice optimal_charge_threshold(const PhotonDistribution& dist_minus,
                                         const PhotonDistribution& dist_zero, double prior) {
    if (prior < 0.0 || prior > 1.0) throw std::domain_error("prior must lie in [0,1]");
    const std::int64_t top = std::max(dist_minus.n_max, dist_zero.n_max) + 1;
    ThresholdChoice best{0, -1.0};
    for (std::int64_t nu = 0; nu <= top; ++nu) {
        const double hit = tail_probability(dist_minus, nu);
        const double reject = 1.0 - tail_probability(dist_zero, nu);
        const double fidelity = prior * hit + (1.0 - prior) * reject;
        if (fidelity > best.fidelity) best = {nu, fidelity};
    }
    return best;
}

void write_distribution_csv(const PhotonDistribution& dist, std::ostream& out) {
    out << "n,probability\n";
    char buf[64];
    for (std::size_t n = 0; n < dist.pmf.size(); ++n) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", n, dist.pmf[n]);
        out << buf;
    }
}

} // namespace nvrti
