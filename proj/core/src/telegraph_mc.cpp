#include "nvrti/telegraph_mc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "nvrti/errors.hpp"

namespace nvrti {

double SplitMix64::exponential(double rate_hz) {
    if (rate_hz < 0.0) throw std::domain_error("exponential rate must be non-negative");
    if (rate_hz == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform_pos()) / rate_hz;
}

std::uint64_t SplitMix64::poisson(double mean) {
    if (mean < 0.0) throw std::domain_error("Poisson mean must be non-negative");
    if (mean == 0.0) return 0;
    if (mean > 500.0) {
        // Poisson is infinitely divisible; halve until the sequential walk
        // starts from a representable p(0).
        const double half = 0.5 * mean;
        return poisson(half) + poisson(mean - half);
    }
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    const std::uint64_t k_cap =
        static_cast<std::uint64_t>(mean + 40.0 * std::sqrt(mean) + 60.0);
    while (u > cdf && k < k_cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

std::uint64_t SplitMix64::substream(std::uint64_t master, std::uint64_t index) {
    return mix(master ^ mix((index + 1) * 0x9E3779B97F4A7C15ULL));
}

std::uint64_t TrajectoryRecord::total_photons() const {
    std::uint64_t total = 0;
    for (const auto& seg : segments) total += seg.photons;
    return total;
}

ChargeState TrajectoryRecord::final_state() const {
    return segments.empty() ? ChargeState::negative : segments.back().state;
}

namespace {

double exit_rate(const RateSet& rates, ChargeState s) {
    return s == ChargeState::negative ? rates.gamma_ion_hz : rates.gamma_rec_hz;
}

double emission_rate(const RateSet& rates, ChargeState s) {
    return s == ChargeState::negative ? rates.gamma_minus_hz : rates.gamma_zero_hz;
}

ChargeState flipped(ChargeState s) {
    return s == ChargeState::negative ? ChargeState::neutral : ChargeState::negative;
}

} // namespace

TrajectoryRecord simulate_trajectory(const RateSet& rates, double duration_s,
                                     ChargeState initial, std::uint64_t seed) {
    rates.validate();
    if (!(duration_s > 0.0)) throw std::domain_error("trajectory duration must be positive");

    SplitMix64 rng(seed);
    TrajectoryRecord record;
    record.seed = seed;
    record.duration_s = duration_s;

    ChargeState state = initial;
    double elapsed = 0.0;
    while (elapsed < duration_s) {
        const double dwell_draw = rng.exponential(exit_rate(rates, state));
        // Truncate the final segment so dwell times sum exactly to duration.
        const double remaining = duration_s - elapsed;
        const bool last = !(dwell_draw < remaining);
        const double dwell = last ? remaining : dwell_draw;
        const std::uint64_t photons = rng.poisson(emission_rate(rates, state) * dwell);
        record.segments.push_back({state, dwell, photons});
        elapsed += dwell;
        if (last) break;
        state = flipped(state);
    }
    return record;
}

ChargeState TimedTrajectory::state_at(double t_s) const {
    double edge = 0.0;
    for (const auto& seg : segments) {
        edge += seg.dwell_s;
        if (t_s < edge) return seg.state;
    }
    return segments.empty() ? ChargeState::negative : segments.back().state;
}

TimedTrajectory simulate_timed_trajectory(const RateSet& rates, double duration_s,
                                          ChargeState initial, SplitMix64& rng) {
    rates.validate();
    if (!(duration_s > 0.0)) throw std::domain_error("trajectory duration must be positive");

    TimedTrajectory out;
    ChargeState state = initial;
    double elapsed = 0.0;
    while (elapsed < duration_s) {
        const double dwell_draw = rng.exponential(exit_rate(rates, state));
        const double remaining = duration_s - elapsed;
        const bool last = !(dwell_draw < remaining);
        const double dwell = last ? remaining : dwell_draw;

        // Photon arrivals inside this segment: exponential gaps at the
        // state's emission rate.
        const double rate = emission_rate(rates, state);
        std::uint64_t emitted = 0;
        if (rate > 0.0) {
            double t = elapsed + rng.exponential(rate);
            while (t < elapsed + dwell) {
                out.photon_times_s.push_back(t);
                ++emitted;
                t += rng.exponential(rate);
            }
        }
        out.segments.push_back({state, dwell, emitted});
        elapsed += dwell;
        if (last) break;
        state = flipped(state);
    }
    out.final_state = out.segments.back().state;
    return out;
}

double EmpiricalDistribution::probability(std::uint64_t n) const {
    auto it = counts.find(n);
    if (it == counts.end() || shots == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(shots);
}

EmpiricalDistribution empirical_distribution(const RateSet& rates, double t_r_s,
                                             InitialCondition initial, std::uint64_t shots,
                                             std::uint64_t seed) {
    if (shots < 1) throw std::domain_error("at least one shot required");
    if (initial.is_mixture && (initial.p_minus < 0.0 || initial.p_minus > 1.0))
        throw std::domain_error("mixture fraction must lie in [0,1]");

    EmpiricalDistribution hist;
    hist.shots = shots;
    hist.seed = seed;
    for (std::uint64_t i = 0; i < shots; ++i) {
        SplitMix64 rng(SplitMix64::substream(seed, i));
        ChargeState start = initial.state;
        if (initial.is_mixture)
            start = rng.bernoulli(initial.p_minus) ? ChargeState::negative
                                                   : ChargeState::neutral;
        // Inline trajectory: only the total count matters here.
        ChargeState state = start;
        double elapsed = 0.0;
        std::uint64_t total = 0;
        while (elapsed < t_r_s) {
            const double dwell_draw = rng.exponential(exit_rate(rates, state));
            const double remaining = t_r_s - elapsed;
            const bool last = !(dwell_draw < remaining);
            const double dwell = last ? remaining : dwell_draw;
            total += rng.poisson(emission_rate(rates, state) * dwell);
            elapsed += dwell;
            if (last) break;
            state = flipped(state);
        }
        ++hist.counts[total];
    }
    return hist;
}

double total_variation_distance(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t top = std::max(a.size(), b.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < top; ++n) {
        const double pa = n < a.size() ? a[n] : 0.0;
        const double pb = n < b.size() ? b[n] : 0.0;
        acc += std::abs(pa - pb);
    }
    return 0.5 * acc;
}

double total_variation_distance(const EmpiricalDistribution& a, const PhotonDistribution& b) {
    double acc = 0.0;
    const double shots = static_cast<double>(a.shots);
    for (const auto& [n, c] : a.counts) {
        const double pa = static_cast<double>(c) / shots;
        const double pb = n < b.pmf.size() ? b.pmf[n] : 0.0;
        acc += std::abs(pa - pb);
    }
    for (std::size_t n = 0; n < b.pmf.size(); ++n)
        if (a.counts.find(n) == a.counts.end()) acc += b.pmf[n];
    return 0.5 * acc;
}

void write_histogram_csv(const EmpiricalDistribution& d, std::ostream& out) {
    out << "n,count\n";
    for (const auto& [n, c] : d.counts) out << n << "," << c << "\n";
}

EmpiricalDistribution read_histogram_csv(std::istream& in) {
    EmpiricalDistribution d;
    std::string line;
    bool header_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("n,count", 0) != 0)
                throw validation_error("histogram CSV must start with header 'n,count'");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string n_text, c_text;
        if (!std::getline(row, n_text, ',') || !std::getline(row, c_text))
            throw validation_error("malformed histogram row at line " + std::to_string(lineno));
        const std::uint64_t n = std::stoull(n_text);
        const std::uint64_t c = std::stoull(c_text);
        d.counts[n] += c;
        d.shots += c;
    }
    if (!header_seen) throw validation_error("empty histogram CSV");
    return d;
}

} // namespace nvrti
