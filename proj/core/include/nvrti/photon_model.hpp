#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nvrti/charge_dynamics.hpp"

namespace nvrti {

enum class ChargeState { negative, neutral };

const char* to_string(ChargeState s);

/// Discrete photon-count distribution for one readout window.
///
/// pmf[n] is the probability of detecting exactly n photons during the
/// window. The support is truncated at n_max such that the discarded tail is
/// far below the quadrature tolerance; the truncation deficit 1 - sum(pmf)
/// stays under 1e-6 by construction.
struct PhotonDistribution {
    std::vector<double> pmf;
    int n_max = 0;

    // provenance of the evaluation
    RateSet rates;
    double t_r_s = 0.0;
    std::string initial;  // "negative", "neutral" or "mixture p=..."

    double total() const;
    double mean() const;
};

/// log Poisson pmf: n*ln(mean) - mean - lgamma(n+1).
/// mean = 0 degenerates to a point mass at n = 0.
double log_poisson_pmf(double mean, std::int64_t n);

/// Modified Bessel function of the first kind, orders 0 and 1 only.
/// Ascending power series below x = 30, asymptotic expansion above;
/// relative accuracy ~1e-13 over the supported range.
double bessel_i(int order, double x);

/// Photon-count distribution conditioned on the charge state at the start of
/// the window. The distribution is assembled from the no-transition term plus
/// the quadrature over the initial-state occupation time, split into the
/// odd- and even-transition-parity branches; the two branch masses together
/// carry the full probability, so the assembled pmf is their sum.
/// The neutral case is the negative case with both rate pairs swapped.
PhotonDistribution distribution_conditional(const RateSet& rates, double t_r_s,
                                            ChargeState initial);

/// Mixture over the initial charge state: p_minus*p(n|-) + (1-p_minus)*p(n|0).
PhotonDistribution distribution_mixture(const RateSet& rates, double t_r_s, double p_minus);

/// P(n >= nu), clamped to [0,1]. nu beyond the truncated support gives 0.
double tail_probability(const PhotonDistribution& dist, std::int64_t nu);

struct ThresholdChoice {
    std::int64_t threshold = 0;
    double fidelity = 0.0;
};

/// Exhaustive scan for the count threshold that maximizes the prior-weighted
/// assignment fidelity  prior*P(n>=nu | -) + (1-prior)*P(n<nu | 0).
/// Ties break toward the smaller threshold.
ThresholdChoice optimal_charge_threshold(const PhotonDistribution& dist_minus,
                                         const PhotonDistribution& dist_zero,
                                         double prior = 0.5);

/// Two-column CSV (n,probability) suitable for plotting.
void write_distribution_csv(const PhotonDistribution& dist, std::ostream& out);

} // namespace nvrti
