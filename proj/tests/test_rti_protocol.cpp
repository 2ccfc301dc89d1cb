#include <doctest.h>

#include <cmath>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/errors.hpp"
#include "nvrti/photon_model.hpp"
#include "nvrti/rti_protocol.hpp"

using namespace nvrti;

namespace {

const CalibrationConstants& cal() {
    static const CalibrationConstants c = CalibrationConstants::defaults();
    return c;
}

RateSet table_rates(double power_uw) { return rates_at_power(cal(), Power{power_uw}); }

ProtocolConfig config(double power_uw, double probe_us, std::int64_t nu) {
    ProtocolConfig c;
    c.probe_power_uw = power_uw;
    c.probe_duration_s = probe_us * 1e-6;
    c.threshold = nu;
    return c;
}

} // namespace

TEST_SUITE("rti-protocol") {

TEST_CASE("config validation") {
    CHECK_NOTHROW(config(100.0, 5.0, 1).validate());
    CHECK_THROWS_AS(config(100.0, 5.0, 0).validate(), validation_error);
    CHECK_THROWS_AS(config(100.0, 5.0, 64).validate(), validation_error);
    CHECK_THROWS_AS(config(100.0, 0.0, 1).validate(), validation_error);
    ProtocolConfig bad = config(100.0, 5.0, 1);
    bad.prior_p_minus = 1.5;
    CHECK_THROWS_AS(bad.validate(), validation_error);
}

TEST_CASE("threshold error") {
    SUBCASE("pure negative prior cannot false-trigger") {
        CHECK(threshold_error(table_rates(100.0), 5e-6, 1, 1.0) == 0.0);
    }
    SUBCASE("silent neutral state cannot false-trigger") {
        const RateSet r{5000.0, 0.0, 100.0, 0.0};
        CHECK(threshold_error(r, 5e-6, 1, 0.75) == 0.0);
    }
    SUBCASE("reference point") {
        const double e = threshold_error(table_rates(100.0), 5e-6, 1, 0.75);
        CHECK(e == doctest::Approx(0.008).epsilon(0.25));  // 0.008 +- 0.002
    }
    SUBCASE("unreachable threshold") {
        const RateSet r{0.0, 0.0, 0.0, 0.0};
        CHECK_THROWS_AS(threshold_error(r, 1e-6, 5, 0.75), unreachable_threshold_error);
    }
}

TEST_CASE("delay error") {
    CHECK(delay_error(0.0, 550e-9) == 0.0);
    CHECK(delay_error(53600.0, 0.0) == 0.0);
    CHECK(delay_error(53600.0, 550e-9) == doctest::Approx(0.029049).epsilon(1e-3));
}

TEST_CASE("fidelity composition") {
    SUBCASE("no error sources means unit fidelity") {
        ProtocolConfig c = config(100.0, 5.0, 1);
        c.prior_p_minus = 1.0;  // eps_T = 0
        c.delay_s = 0.0;        // eps_D = 0
        CHECK(predict_protocol(c, cal()).fidelity == doctest::Approx(1.0));
    }
    SUBCASE("fidelity equals the two-term product") {
        const ProtocolPrediction p = predict_protocol(config(53.0, 5.0, 1), cal());
        CHECK(p.fidelity ==
              doctest::Approx((1.0 - p.epsilon_t) * (1.0 - p.epsilon_d)).epsilon(1e-15));
    }
    SUBCASE("zero delay reduces fidelity to 1 - eps_T") {
        ProtocolConfig c = config(53.0, 5.0, 1);
        c.delay_s = 0.0;
        const ProtocolPrediction p = predict_protocol(c, cal());
        CHECK(p.fidelity == doctest::Approx(1.0 - p.epsilon_t).epsilon(1e-15));
    }
    SUBCASE("low-power plateau at nu = 1") {
        for (double pw : {1.0, 2.0, 6.0, 10.0}) {
            const ProtocolPrediction p = predict_protocol(config(pw, 5.0, 1), cal());
            CHECK(std::abs(p.fidelity - 0.986) < 0.0102);
        }
    }
    SUBCASE("raised threshold purifies past 0.99") {
        const ProtocolPrediction p = predict_protocol(config(6.0, 9.0, 2), cal());
        CHECK(p.fidelity >= 0.99);
    }
}

TEST_CASE("average attempts and initialization time") {
    SUBCASE("certain trigger collapses to a single attempt") {
        // nu = 0 makes the per-attempt trigger certain; the inverse-tail
        // formula collapses to one attempt (the protocol enforces nu >= 1)
        const RateSet r = table_rates(6.0);
        const PhotonDistribution minus =
            distribution_conditional(r, 9e-6, ChargeState::negative);
        const PhotonDistribution zero =
            distribution_conditional(r, 9e-6, ChargeState::neutral);
        const double q = 0.75 * tail_probability(minus, 0) + 0.25 * tail_probability(zero, 0);
        CHECK(1.0 / q == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("high-threshold settings: value pinned by the controller ensemble") {
        const double n_bar = average_attempts(config(6.0, 9.0, 2), cal());
        CHECK(n_bar == doctest::Approx(1180.0).epsilon(0.02));
        const double t = initialization_time(config(6.0, 9.0, 2), n_bar);
        CHECK(t == doctest::Approx(n_bar * 11e-6).epsilon(1e-12));
    }
    SUBCASE("explicit product") {
        CHECK(initialization_time(config(6.0, 9.0, 2), 700.0) ==
              doctest::Approx(7.7e-3).epsilon(1e-12));
        CHECK(initialization_time(config(100.0, 5.0, 1), 1.0) ==
              doctest::Approx(7e-6).epsilon(1e-12));
        CHECK_THROWS_AS(initialization_time(config(100.0, 5.0, 1), 0.5), std::domain_error);
    }
    SUBCASE("fast probe initializes in tens of microseconds") {
        const ProtocolPrediction p = predict_protocol(config(100.0, 5.0, 1), cal());
        CHECK(p.init_time_s > 20e-6);
        CHECK(p.init_time_s < 50e-6);
    }
}

TEST_CASE("error structure across the parameter grid") {
    // eps_D depends only on power (through the ionization rate) and delay
    const double ed = delay_error(table_rates(53.0).gamma_ion_hz, 550e-9);
    for (double t_us : {1.0, 5.0, 9.0}) {
        for (std::int64_t nu : {1, 2, 3}) {
            const ProtocolPrediction p = predict_protocol(config(53.0, t_us, nu), cal());
            CHECK(p.epsilon_d == doctest::Approx(ed).epsilon(1e-12));
        }
    }
    // eps_T is non-increasing in nu; n_bar non-decreasing in nu
    for (double pw : {6.0, 22.0, 100.0}) {
        double prev_et = 2.0;
        double prev_nbar = 0.0;
        for (std::int64_t nu : {1, 2, 3}) {
            const ProtocolPrediction p = predict_protocol(config(pw, 5.0, nu), cal());
            CHECK(p.epsilon_t <= prev_et);
            CHECK(p.avg_attempts >= prev_nbar);
            prev_et = p.epsilon_t;
            prev_nbar = p.avg_attempts;
        }
    }
    // n_bar is non-increasing in power at fixed probe and threshold
    double prev = 1e12;
    for (double pw : {6.0, 10.0, 22.0, 53.0, 100.0}) {
        const double n_bar = average_attempts(config(pw, 5.0, 1), cal());
        CHECK(n_bar <= prev);
        prev = n_bar;
    }
}

TEST_CASE("controller: immediate trigger regime") {
    // an extremely bright emitter starting negative triggers on the first attempt
    CalibrationConstants bright = cal();
    bright.c_minus_hz_per_uw = 1e7;  // 1 GHz at 100 uW
    ProtocolConfig c = config(100.0, 5.0, 1);
    c.prior_p_minus = 1.0;
    std::uint64_t negatives = 0;
    constexpr int runs = 4000;
    for (int i = 0; i < runs; ++i) {
        const ControllerOutcome out = run_controller(c, bright, SplitMix64::substream(5, i));
        CHECK(out.attempts == 1);
        CHECK(out.elapsed_s >= c.pump_duration_s + c.overhead_s);
        negatives += out.success_state == ChargeState::negative ? 1 : 0;
    }
    const double eps_d =
        delay_error(rates_at_power(bright, Power{100.0}).gamma_ion_hz, c.delay_s);
    const double frac = static_cast<double>(negatives) / runs;
    CHECK(frac == doctest::Approx(1.0 - eps_d).epsilon(0.02));
}

TEST_CASE("controller ensembles match the closed-form predictions") {
    const ProtocolConfig c = config(22.0, 5.0, 1);
    const ProtocolPrediction pred = predict_protocol(c, cal());
    const ProtocolStats stats = estimate_protocol_stats(c, cal(), 20000, 2025);
    CHECK(std::abs(stats.fidelity - pred.fidelity) < 4.0 * stats.fidelity_se);
    CHECK(std::abs(stats.attempts_mean - pred.avg_attempts) < 4.0 * stats.attempts_se);
    // probes terminate early on trigger, so realized time stays below the
    // full-probe bound
    CHECK(stats.elapsed_mean_s < pred.init_time_s);
}

TEST_CASE("controller: counter semantics") {
    SUBCASE("6-bit wraparound cannot mask a low threshold") {
        // ~64 expected photons per probe; the per-edge comparison fires at the
        // first edge regardless of later wraps
        CalibrationConstants bright = cal();
        bright.c_minus_hz_per_uw = 1.28e5;  // mean 64 photons in 5 us at 100 uW
        ProtocolConfig c = config(100.0, 5.0, 1);
        ControllerOptions opts;
        opts.record_counters = true;
        const ControllerOutcome out = run_controller(c, bright, 99, opts);
        CHECK(out.attempts == 1);
        REQUIRE(out.counter_trace.has_value());
        CHECK(out.counter_trace->back() == 1);
    }
    SUBCASE("thresholds beyond the register width are rejected") {
        CHECK_THROWS_AS(config(100.0, 5.0, 77).validate(), validation_error);
    }
}

TEST_CASE("controller: attempt budget") {
    ProtocolConfig c = config(1.0, 1.0, 3);  // dim probe at a high threshold
    ControllerOptions opts;
    opts.max_attempts = 10;
    CHECK_THROWS_AS(run_controller(c, cal(), 1, opts), non_convergence_error);
}

TEST_CASE("controller: history mode stays consistent") {
    ProtocolConfig c = config(22.0, 5.0, 1);
    ControllerOptions opts;
    opts.pump_reset_probability = 0.5;
    const ControllerOutcome a = run_controller(c, cal(), 11, opts);
    const ControllerOutcome b = run_controller(c, cal(), 11, opts);
    CHECK(a.attempts == b.attempts);
    CHECK(a.elapsed_s == b.elapsed_s);
    CHECK(a.success_state == b.success_state);
    // red relaxation is weak at this power, so attempt statistics stay close
    // to the fixed-prior model even without full pump resets
    const ProtocolStats stats = estimate_protocol_stats(c, cal(), 5000, 77, opts);
    const ProtocolPrediction pred = predict_protocol(c, cal());
    CHECK(stats.attempts_mean == doctest::Approx(pred.avg_attempts).epsilon(0.1));
}

TEST_CASE("estimate_protocol_stats contracts") {
    const ProtocolConfig c = config(100.0, 5.0, 1);
    SUBCASE("single shot is degenerate") {
        const ProtocolStats s = estimate_protocol_stats(c, cal(), 1, 4);
        CHECK(s.degenerate);
        CHECK(std::isinf(s.fidelity_se));
        CHECK(std::isinf(s.attempts_se));
    }
    SUBCASE("zero shots rejected") {
        CHECK_THROWS_AS(estimate_protocol_stats(c, cal(), 0, 4), std::domain_error);
    }
}

TEST_CASE("fidelity decreases with power once the delay error dominates") {
    double prev = 1.0;
    for (double pw : {55.0, 70.0, 85.0, 100.0, 130.0, 160.0, 200.0}) {
        const double f = predict_protocol(config(pw, 5.0, 1), cal()).fidelity;
        CHECK(f < prev);
        prev = f;
    }
    // the emulated ensemble shows the same decline, well beyond its errors
    const ProtocolStats lo = estimate_protocol_stats(config(55.0, 5.0, 1), cal(), 5000, 61);
    const ProtocolStats hi = estimate_protocol_stats(config(150.0, 5.0, 1), cal(), 5000, 62);
    CHECK(lo.fidelity - hi.fidelity >
          3.0 * std::sqrt(lo.fidelity_se * lo.fidelity_se + hi.fidelity_se * hi.fidelity_se));
    // and average attempts keep falling with power at a fixed probe
    const ProtocolStats faster = estimate_protocol_stats(config(100.0, 5.0, 1), cal(), 5000, 63);
    CHECK(faster.attempts_mean < lo.attempts_mean);
}

} // TEST_SUITE
