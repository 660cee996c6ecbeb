#include "catch_amalgamated.hpp"

#include "heps/converter.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace heps;
using Catch::Approx;

namespace {

ConverterSpec design_case() { return ConverterSpec{}; }

// Unit-gain SPS: ramp from -I to +I over Do*Ts/2, then flat.
double sps_unit_gain_peak(const ConverterSpec& s, double Do) { return s.V1 * Do * s.period() / (2.0 * s.Lr); }

double sps_power(const ConverterSpec& s, double V2, double Do) {
    return s.n * s.V1 * V2 * Do * (1.0 - Do) / (2.0 * s.fs * s.Lr);
}

}  // namespace

TEST_CASE("leakage inductance bound for the design case", "[converter]") {
    CHECK(design_leakage_inductance(1.0, 200.0, 160.0, 20e3, 1000.0) == Approx(200e-6).epsilon(1e-12));
    CHECK(design_case().Lr <= design_leakage_inductance(1.0, 200.0, 160.0, 20e3, 1000.0));
    CHECK_THROWS_AS(design_leakage_inductance(1.0, 200.0, 0.0, 20e3, 1000.0), std::domain_error);
}

TEST_CASE("unit-gain SPS steady state", "[converter]") {
    const ConverterSpec spec = design_case();
    const double Do = 0.212;
    const PiecewiseWaveform wf = solve_steady_state(spec, {Strategy::EPS1, Do, 1.0}, 200.0);
    const double I = sps_unit_gain_peak(spec, Do);
    REQUIRE(I == Approx(6.347).epsilon(1e-3));

    CHECK(wf.current_at(0.0) == Approx(-I).epsilon(1e-12));
    const double h = spec.half_period();
    for (double frac : {0.0, 0.3, 0.7, 0.999}) {
        const double t = Do * h + frac * (1.0 - Do) * h;
        CHECK(wf.current_at(t) == Approx(I).epsilon(1e-12));
    }
    CHECK(wf.peak_current() == Approx(I).epsilon(1e-12));
    CHECK(rms_current(wf) == Approx(I * std::sqrt(1.0 - 2.0 * Do / 3.0)).epsilon(1e-12));
    CHECK(rms_current(wf) == Approx(5.88).epsilon(2e-3));
    CHECK(average_power(wf) == Approx(sps_power(spec, 200.0, Do)).epsilon(1e-12));
}

TEST_CASE("SPS power follows the closed form", "[converter]") {
    const ConverterSpec spec = design_case();
    for (double V2 : {160.0, 185.0, 200.0, 240.0}) {
        for (double Do : {0.02, 0.1, 0.25, 0.4, 0.5}) {
            for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
                const auto wf = solve_steady_state(spec, {s, Do, 1.0}, V2);
                CHECK(average_power(wf) == Approx(sps_power(spec, V2, Do)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("zero phase shift at unit gain carries no current", "[converter]") {
    const auto wf = solve_steady_state(design_case(), {Strategy::EPS1, 0.0, 1.0}, 200.0);
    for (const Segment& s : wf.segments) {
        CHECK(s.i_start == 0.0);
        CHECK(s.slope == 0.0);
    }
    CHECK(average_power(wf) == 0.0);
}

TEST_CASE("outer shift for rated power", "[converter]") {
    const ConverterSpec spec = design_case();
    const auto Do = solve_outer_shift(spec, Strategy::EPS1, 1.0, 200.0, 1000.0);
    REQUIRE(Do.has_value());
    const double root = 0.5 * (1.0 - std::sqrt(1.0 - 8.0 * spec.fs * spec.Lr * 1000.0 / (spec.V1 * 200.0)));
    CHECK(*Do == Approx(root).margin(1e-6));
    CHECK(*Do == Approx(0.2119).margin(1e-3));
    CHECK(average_power(solve_steady_state(spec, {Strategy::EPS1, *Do, 1.0}, 200.0)) ==
          Approx(1000.0).margin(0.01));

    // 1500 W needs Do beyond 0.5 at 160 V (P_max = 1197.6 W).
    CHECK_FALSE(solve_outer_shift(spec, Strategy::EPS1, 1.0, 160.0, 1500.0).has_value());
    // EPS1 with a collapsed primary pulse transfers nothing.
    CHECK_FALSE(solve_outer_shift(spec, Strategy::EPS1, 0.0, 200.0, 100.0).has_value());
    CHECK_THROWS_AS(solve_outer_shift(spec, Strategy::EPS1, 1.0, 200.0, -1.0), std::invalid_argument);
}

TEST_CASE("gate schedule keeps every leg at 50% duty", "[converter]") {
    const ConverterSpec spec = design_case();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const ModulationPoint m{u(rng) < 0.5 ? Strategy::EPS1 : Strategy::EPS2, 0.5 * u(rng), u(rng)};
        const SwitchingSchedule s = gate_schedule(spec, m);
        for (Leg leg : kLegs) {
            const LegTiming& t = s[leg];
            CHECK(t.rising >= 0.0);
            CHECK(t.rising < s.period);
            CHECK(std::fmod(t.falling - t.rising + s.period, s.period) ==
                  Approx(spec.half_period()).epsilon(1e-12));
        }
    }
}

TEST_CASE("inner shift places a zero plateau ahead of the pulse", "[converter]") {
    const ConverterSpec spec = design_case();
    const double h = spec.half_period();
    const double din = 0.6;
    const auto wf = solve_steady_state(spec, {Strategy::EPS1, 0.1, din}, 200.0);
    CHECK(wf.primary_voltage_at(0.2 * h) == 0.0);
    CHECK(wf.primary_voltage_at(0.5 * h) == spec.V1);
    CHECK(wf.primary_voltage_at(h + 0.2 * h) == 0.0);
    CHECK(wf.primary_voltage_at(h + 0.5 * h) == -spec.V1);

    // EPS2 leaves the primary as a full square wave and notches the secondary.
    const auto wf2 = solve_steady_state(spec, {Strategy::EPS2, 0.1, 0.0}, 200.0);
    for (double f : {0.05, 0.3, 0.6, 0.95}) {
        CHECK(std::abs(wf2.primary_voltage_at(f * h)) == spec.V1);
        CHECK(wf2.secondary_voltage_at(f * h) == 0.0);
    }
    const auto wf1 = solve_steady_state(spec, {Strategy::EPS1, 0.1, 0.0}, 200.0);
    for (double f : {0.05, 0.3, 0.6, 0.95}) CHECK(wf1.primary_voltage_at(f * h) == 0.0);
}

TEST_CASE("Din = 1 is the same waveform under both strategies", "[converter]") {
    const ConverterSpec spec = design_case();
    const auto a = solve_steady_state(spec, {Strategy::EPS1, 0.23, 1.0}, 217.0);
    const auto b = solve_steady_state(spec, {Strategy::EPS2, 0.23, 1.0}, 217.0);
    for (int i = 0; i < 100; ++i) {
        const double t = a.period * i / 100.0;
        CHECK(a.current_at(t) == Approx(b.current_at(t)).margin(1e-12));
    }
}

TEST_CASE("steady state is periodic and half-wave antisymmetric", "[converter][property]") {
    const ConverterSpec spec = design_case();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const ModulationPoint m{u(rng) < 0.5 ? Strategy::EPS1 : Strategy::EPS2, 0.5 * u(rng), u(rng)};
        const double V2 = 160.0 + 80.0 * u(rng);
        const auto wf = solve_steady_state(spec, m, V2);
        const double ipk = std::max(wf.peak_current(), 1e-12);
        CHECK(std::abs(wf.segments.back().i_end() - wf.segments.front().i_start) <= 1e-9 * ipk);
        for (int i = 0; i < 40; ++i) {
            const double t = wf.period * 0.5 * i / 40.0;
            CHECK(std::abs(wf.current_at(t) + wf.current_at(t + 0.5 * wf.period)) <= 1e-9 * ipk);
        }
        // Segments tile the period without gaps.
        for (std::size_t i = 1; i < wf.segments.size(); ++i) {
            CHECK(wf.segments[i].t_start == wf.segments[i - 1].t_end);
            CHECK(wf.segments[i].i_start == Approx(wf.segments[i - 1].i_end()).margin(1e-9 * ipk));
        }
    }
}

TEST_CASE("power rises monotonically with the outer shift", "[converter][property]") {
    const ConverterSpec spec = design_case();
    for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
        for (double din : {0.2, 0.5, 0.8, 1.0}) {
            for (double V2 : {160.0, 200.0, 240.0}) {
                double prev = -1e300;
                for (int i = 0; i <= 100; ++i) {
                    const double p = average_power(solve_steady_state(spec, {s, 0.005 * i, din}, V2));
                    CHECK(p >= prev - 1e-9);
                    prev = p;
                }
            }
        }
    }
}

TEST_CASE("fundamental current matches phasor arithmetic", "[converter][harmonic]") {
    const ConverterSpec spec = design_case();
    const double Do = 0.212;
    const HarmonicSeries hs = harmonic_spectrum(spec, {Strategy::EPS1, Do, 1.0}, 200.0, 1);
    REQUIRE(hs.terms.size() == 1);
    const double w0 = 2.0 * std::numbers::pi * spec.fs;
    // |4V/pi (1 - exp(-j pi Do))| / (w0 Lr)
    const double expected = 4.0 * spec.V1 / std::numbers::pi * 2.0 * std::sin(std::numbers::pi * Do / 2.0) /
                            (w0 * spec.Lr);
    CHECK(hs.terms[0].il_amplitude == Approx(expected).epsilon(1e-12));
    CHECK(hs.terms[0].vp_amplitude == Approx(4.0 * spec.V1 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("harmonic series converges to the piecewise current", "[converter][harmonic]") {
    const ConverterSpec spec = design_case();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const ModulationPoint m{u(rng) < 0.5 ? Strategy::EPS1 : Strategy::EPS2, 0.5 * u(rng), u(rng)};
        const double V2 = 160.0 + 80.0 * u(rng);
        const auto wf = solve_steady_state(spec, m, V2);
        double prev = 1e300;
        for (int K : {1, 11, 101, 301}) {
            const auto hs = harmonic_spectrum(spec, m, V2, K);
            double err = 0.0;
            for (int i = 0; i < 500; ++i) {
                const double t = wf.period * i / 500.0;
                err = std::max(err, std::abs(eval_harmonic_current(hs, t) - wf.current_at(t)));
            }
            CHECK(err <= prev * (1.0 + 1e-9) + 1e-12);
            prev = err;
        }
        CHECK(prev <= 0.01 * wf.peak_current());
    }
    CHECK_THROWS_AS(harmonic_spectrum(spec, {}, 200.0, 4), std::domain_error);
}

TEST_CASE("transient oracle reproduces the steady state", "[converter][transient]") {
    const ConverterSpec spec = design_case();
    const auto zero = simulate_transient(spec, {Strategy::EPS1, 0.0, 1.0}, 200.0, spec.period() / 20000.0);
    for (double s : zero.samples) CHECK(s == 0.0);

    const ModulationPoint m{Strategy::EPS1, 0.212, 1.0};
    const auto tr = simulate_transient(spec, m, 200.0, spec.period() / 20000.0);
    double ss = 0.0;
    for (double s : tr.samples) ss += s * s;
    const double rms = std::sqrt(ss / tr.samples.size());
    CHECK(rms == Approx(rms_current(solve_steady_state(spec, m, 200.0))).epsilon(5e-3));

    CHECK_THROWS_AS(simulate_transient(spec, m, 200.0, spec.period() / 1000.0), std::domain_error);
}

TEST_CASE("invalid inputs are rejected", "[converter][errors]") {
    ConverterSpec spec = design_case();
    CHECK_THROWS_AS(solve_steady_state(spec, {Strategy::EPS1, 0.6, 1.0}, 200.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_steady_state(spec, {Strategy::EPS1, 0.2, 1.2}, 200.0), std::invalid_argument);
    spec.Lr = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK(parse_strategy("EPS2") == Strategy::EPS2);
    CHECK_THROWS(parse_strategy("TPS"));
}
