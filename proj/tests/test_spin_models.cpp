#include <doctest.h>

#include <cmath>
#include <vector>

#include "nvrti/charge_dynamics.hpp"
#include "nvrti/errors.hpp"
#include "nvrti/spin_models.hpp"

using namespace nvrti;

TEST_SUITE("spin-models") {

TEST_CASE("observable versus fidelity") {
    const SpinObservableModel pl = SpinObservableModel::pl_defaults();
    CHECK(observable_with_fidelity(pl, 0, 1.0) == doctest::Approx(pl.s_tilde_0));
    CHECK(observable_with_fidelity(pl, 1, 0.0) == doctest::Approx(pl.epsilon));
    CHECK(observable_with_fidelity(pl, 0, 0.75) ==
          doctest::Approx(0.09664 * 0.75 + 2.703e-6 * 0.25).epsilon(1e-12));
    CHECK_THROWS_AS(observable_with_fidelity(pl, 2, 0.5), std::domain_error);
    CHECK_THROWS_AS(observable_with_fidelity(pl, 0, 1.5), std::domain_error);

    // affine in F
    const double f1 = observable_with_fidelity(pl, 0, 0.2);
    const double f2 = observable_with_fidelity(pl, 0, 0.6);
    const double f3 = observable_with_fidelity(pl, 0, 0.4);
    CHECK(0.5 * (f1 + f2) == doctest::Approx(f3).epsilon(1e-14));
}

TEST_CASE("Poissonian SNR") {
    CHECK(pl_snr(0.3, 0.3) == 0.0);
    CHECK(pl_snr(0.09664, 0.05254) == doctest::Approx(0.114).epsilon(0.005));
    CHECK_THROWS_AS(pl_snr(0.0, 0.0), std::domain_error);
    // homogeneity: SNR(k s0, k s1) = sqrt(k) SNR(s0, s1)
    const double base = pl_snr(0.09664, 0.05254);
    for (double k : {0.5, 2.0, 10.0, 1000.0}) {
        CHECK(pl_snr(k * 0.09664, k * 0.05254) ==
              doctest::Approx(std::sqrt(k) * base).epsilon(1e-12));
    }
}

TEST_CASE("Binomial SNR") {
    CHECK(scc_snr(0.3, 0.3) == 0.0);
    CHECK(scc_snr(0.1581, 0.4778) == doctest::Approx(0.52).epsilon(0.06));
    CHECK_THROWS_AS(scc_snr(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(scc_snr(-0.1, 0.5), std::domain_error);
}

TEST_CASE("observed probability through the thresholded charge readout") {
    const RateSet rates = rates_at_power(CalibrationConstants::defaults(), Power{22.0});
    SUBCASE("pure inputs reduce to the conditional tails") {
        const PhotonDistribution minus =
            distribution_conditional(rates, 127e-6, ChargeState::negative);
        const PhotonDistribution zero =
            distribution_conditional(rates, 127e-6, ChargeState::neutral);
        CHECK(scc_observed_probability(1.0, rates, 127e-6, 1) ==
              doctest::Approx(tail_probability(minus, 1)).epsilon(1e-9));
        CHECK(scc_observed_probability(0.0, rates, 127e-6, 1) ==
              doctest::Approx(tail_probability(zero, 1)).epsilon(1e-9));
    }
    SUBCASE("perfect discrimination recovers the input probability") {
        const RateSet separated{5e7, 0.0, 0.0, 0.0};  // 50 photons mean, silent neutral
        for (double b : {0.1, 0.42, 0.9}) {
            CHECK(scc_observed_probability(b, separated, 1e-6, 1) ==
                  doctest::Approx(b).epsilon(1e-9));
        }
    }
    SUBCASE("monotone in the true probability") {
        double prev = -1.0;
        for (double b = 0.0; b <= 1.0; b += 0.1) {
            const double o = scc_observed_probability(b, rates, 127e-6, 1);
            CHECK(o >= prev);
            prev = o;
        }
    }
}

TEST_CASE("SNR is non-decreasing in fidelity for the shipped defaults") {
    const SpinObservableModel pl = SpinObservableModel::pl_defaults();
    const SpinObservableModel scc = SpinObservableModel::scc_defaults();
    double prev_pl = -1.0, prev_scc = -1.0;
    for (double f = 0.0; f <= 1.0001; f += 0.05) {
        const double fid = std::min(f, 1.0);
        const double spl = pl_snr(observable_with_fidelity(pl, 0, fid),
                                  observable_with_fidelity(pl, 1, fid));
        const double sscc = scc_snr(observable_with_fidelity(scc, 0, fid),
                                    observable_with_fidelity(scc, 1, fid));
        CHECK(spl >= prev_pl);
        CHECK(sscc >= prev_scc);
        prev_pl = spl;
        prev_scc = sscc;
    }
}

TEST_CASE("polarization contrast adjustment") {
    SUBCASE("identity at the calibration polarization") {
        const auto pair = polarization_adjusted_pair(0.4, 0.1, 0.944, 0.944);
        CHECK(pair[0] == doctest::Approx(0.4).epsilon(1e-14));
        CHECK(pair[1] == doctest::Approx(0.1).epsilon(1e-14));
    }
    SUBCASE("midpoint preserved, contrast scaled") {
        const auto pair = polarization_adjusted_pair(0.4, 0.1, 0.915, 0.944);
        CHECK(0.5 * (pair[0] + pair[1]) == doctest::Approx(0.25).epsilon(1e-14));
        const double scale = (2.0 * 0.915 - 1.0) / (2.0 * 0.944 - 1.0);
        CHECK(pair[0] - pair[1] == doctest::Approx(0.3 * scale).epsilon(1e-12));
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(polarization_adjusted_pair(0.4, 0.1, 0.3, 0.944), std::domain_error);
    }
}

TEST_CASE("population vectors") {
    SUBCASE("perfect inversion of a pure state") {
        const PopulationVectors v = populations_before_after(1.0, 1.0);
        CHECK(v.after[0] == doctest::Approx(0.0));
        CHECK(v.after[1] == doctest::Approx(1.0));
        CHECK(v.after[2] == doctest::Approx(0.0));
    }
    SUBCASE("identity pulse changes nothing") {
        const PopulationVectors v = populations_before_after(0.92, 0.0);
        for (int i = 0; i < 3; ++i) CHECK(v.after[i] == doctest::Approx(v.before[i]));
    }
    SUBCASE("reference arithmetic") {
        const PopulationVectors v = populations_before_after(0.915, 0.88);
        CHECK(v.after[2] == doctest::Approx(0.915 * 0.12 + 0.0425 * 0.88).epsilon(1e-12));
    }
    SUBCASE("both vectors sum to one exactly") {
        for (double p0 : {0.0, 0.3, 0.915, 1.0}) {
            for (double fpi : {0.0, 0.5, 0.88, 1.0}) {
                const PopulationVectors v = populations_before_after(p0, fpi);
                CHECK(v.before[0] + v.before[1] + v.before[2] == doctest::Approx(1.0).epsilon(1e-15));
                CHECK(v.after[0] + v.after[1] + v.after[2] == doctest::Approx(1.0).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("lifetime response") {
    LifetimeModel m;
    m.p0 = 0.915;
    m.f_pi = 0.88;
    m.gamma0_hz = 1.0 / 12.50e-9;
    m.gamma1_hz = 1.0 / 7.48e-9;
    m.amplitude_before = 2.0;
    m.amplitude_after = 1.7;
    m.background = 0.05;

    SUBCASE("t = 0 gives amplitude plus background") {
        CHECK(lifetime_response(m, LifetimeBranch::before, {0.0})[0] ==
              doctest::Approx(2.05).epsilon(1e-12));
        CHECK(lifetime_response(m, LifetimeBranch::after, {0.0})[0] ==
              doctest::Approx(1.75).epsilon(1e-12));
    }
    SUBCASE("equal rates collapse to a single exponential") {
        LifetimeModel deg = m;
        deg.gamma1_hz = deg.gamma0_hz;
        const std::vector<double> t{0.0, 5e-9, 20e-9};
        const std::vector<double> y = lifetime_response(deg, LifetimeBranch::before, t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(y[i] == doctest::Approx(2.0 * std::exp(-deg.gamma0_hz * t[i]) + 0.05)
                              .epsilon(1e-12));
        }
    }
    SUBCASE("negative time rejected") {
        CHECK_THROWS_AS(lifetime_response(m, LifetimeBranch::before, {-1e-9}),
                        std::domain_error);
    }
}

TEST_CASE("IRF convolution") {
    SUBCASE("delta kernel is the identity") {
        const std::vector<double> signal{1.0, 2.0, 3.0, 2.0, 1.0};
        const std::vector<double> out = convolve_with_irf(signal, 1e-9, {1.0}, 1e-9);
        for (std::size_t i = 0; i < signal.size(); ++i)
            CHECK(out[i] == doctest::Approx(signal[i]).epsilon(1e-15));
    }
    SUBCASE("constant signal is preserved in the interior") {
        const std::vector<double> signal(64, 3.5);
        const std::vector<double> irf{0.2, 0.3, 0.3, 0.2};
        const std::vector<double> out = convolve_with_irf(signal, 1e-9, irf, 1e-9);
        for (std::size_t i = irf.size(); i < signal.size(); ++i)
            CHECK(out[i] == doctest::Approx(3.5).epsilon(1e-9));
    }
    SUBCASE("kernel must be normalized") {
        CHECK_THROWS_AS(convolve_with_irf({1.0, 2.0}, 1e-9, {0.4, 0.4}, 1e-9),
                        validation_error);
    }
    SUBCASE("mismatched sampling intervals rejected") {
        CHECK_THROWS_AS(convolve_with_irf({1.0, 2.0}, 1e-9, {1.0}, 2e-9), std::domain_error);
    }
}

TEST_CASE("coherence models") {
    SUBCASE("ramsey at zero evolution time with zero phase") {
        CoherenceModel m;
        m.kind = CoherenceModel::Kind::ramsey;
        m.offset = 0.1;
        m.amplitude = 0.05;
        m.timescale_s = 2.24e-6;
        m.detuning_hz = 5e6;
        m.hyperfine_hz = 2.16e6;
        m.phase_rad = 0.0;
        CHECK(coherence_model_eval(m, 0.0) == doctest::Approx(0.1 + 3.0 * 0.05).epsilon(1e-12));
    }
    SUBCASE("hahn at the coherence time") {
        CoherenceModel m;
        m.kind = CoherenceModel::Kind::hahn;
        m.offset = 0.2;
        m.amplitude = 0.6;
        m.timescale_s = 852e-6;
        m.stretch = 2.85;
        CHECK(coherence_model_eval(m, 852e-6) ==
              doctest::Approx(0.2 + 0.6 / M_E).epsilon(1e-12));
    }
    SUBCASE("t1 single exponential") {
        CoherenceModel m;
        m.kind = CoherenceModel::Kind::t1;
        m.offset = 0.0;
        m.amplitude = 1.0;
        m.timescale_s = 5.3e-3;
        CHECK(coherence_model_eval(m, 5.3e-3) == doctest::Approx(1.0 / M_E).epsilon(1e-12));
    }
    SUBCASE("invariants") {
        CoherenceModel m;
        m.timescale_s = 0.0;
        CHECK_THROWS_AS(coherence_model_eval(m, 1e-6), validation_error);
    }
}

TEST_CASE("spin model config parsing") {
    const char* text = R"({
      "spin": {
        "pl": {"s0": 0.0966, "s1": 0.0525, "epsilon": 2.7e-6},
        "scc": {"b0": 0.158, "b1": 0.478, "epsilon": 0.053},
        "polarization_ssi": 0.90
      }
    })";
    const SpinModelSet set = parse_spin_models_json(text);
    CHECK(set.pl.s_tilde_0 == doctest::Approx(0.0966));
    CHECK(set.scc.s_tilde_1 == doctest::Approx(0.478));
    CHECK(set.polarization_ssi == doctest::Approx(0.90));
    CHECK(set.polarization_rti == doctest::Approx(0.944));
    CHECK_THROWS_AS(parse_spin_models_json("nope"), validation_error);
}

} // TEST_SUITE
