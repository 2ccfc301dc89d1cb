#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/photon_model.hpp"

namespace nvrti {

/// SplitMix64: a counter-based generator (Weyl sequence plus a 64-bit mix).
/// Identical seeds give identical streams on every platform, and substreams
/// derived via `substream` are independent of evaluation order, which keeps
/// parallel shot loops bit-reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Exponential with the given rate (rate 0 maps to +infinity).
    double exponential(double rate_hz);

    bool bernoulli(double p) { return uniform() < p; }

    /// Exact Poisson sample (sequential inversion; recursive halving keeps the
    /// start probability representable for large means).
    std::uint64_t poisson(double mean);

    /// Deterministic per-index substream seed:
    /// mix(master XOR mix((index+1) * 0x9E3779B97F4A7C15)).
    static std::uint64_t substream(std::uint64_t master, std::uint64_t index);

private:
    std::uint64_t state_;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// One dwell interval of the charge telegraph process.
struct TrajectorySegment {
    ChargeState state;
    double dwell_s;
    std::uint64_t photons;
};

/// A single realized charge trajectory with per-segment photon counts.
struct TrajectoryRecord {
    std::vector<TrajectorySegment> segments;
    std::uint64_t seed = 0;
    double duration_s = 0.0;

    std::uint64_t total_photons() const;
    ChargeState final_state() const;
};

/// Simulates the two-state telegraph process for `duration_s`: dwell times are
/// exponential with the occupied state's exit rate (ionization out of the
/// negative state, recombination out of the neutral one) and each segment
/// emits Poisson(emission rate x dwell) photons.
TrajectoryRecord simulate_trajectory(const RateSet& rates, double duration_s,
                                     ChargeState initial, std::uint64_t seed);

/// Same process, but photon emission is resolved into arrival timestamps
/// (exponential gaps at the occupied state's emission rate). Timestamps are
/// sorted and lie in [0, duration_s). Used by the controller emulation, which
/// needs the time at which a count threshold is crossed.
struct TimedTrajectory {
    std::vector<double> photon_times_s;
    ChargeState final_state;
    /// Charge state at a given time, reconstructed from the dwell sequence.
    std::vector<TrajectorySegment> segments;

    ChargeState state_at(double t_s) const;
};

TimedTrajectory simulate_timed_trajectory(const RateSet& rates, double duration_s,
                                          ChargeState initial, SplitMix64& rng);

/// Histogram of total photon counts over independent shots.
struct EmpiricalDistribution {
    std::map<std::uint64_t, std::uint64_t> counts;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;

    /// Empirical probability of exactly n photons.
    double probability(std::uint64_t n) const;
};

/// Initial condition for an ensemble: a fixed state or a Bernoulli mixture.
struct InitialCondition {
    static InitialCondition fixed(ChargeState s) { return {false, 0.0, s}; }
    static InitialCondition mixture(double p_minus) {
        return {true, p_minus, ChargeState::negative};
    }
    bool is_mixture = false;
    double p_minus = 1.0;
    ChargeState state = ChargeState::negative;
};

/// Runs `shots` independent trajectories; shot i draws its RNG from
/// SplitMix64::substream(seed, i), so aggregation order cannot matter.
EmpiricalDistribution empirical_distribution(const RateSet& rates, double t_r_s,
                                             InitialCondition initial, std::uint64_t shots,
                                             std::uint64_t seed);

/// 0.5 * sum |a(n) - b(n)| over the union support.
double total_variation_distance(const EmpiricalDistribution& a, const PhotonDistribution& b);
double total_variation_distance(const std::vector<double>& a, const std::vector<double>& b);

/// CSV round trip (schema: header "n,count", one row per occupied bin).
void write_histogram_csv(const EmpiricalDistribution& d, std::ostream& out);
EmpiricalDistribution read_histogram_csv(std::istream& in);

} // namespace nvrti
