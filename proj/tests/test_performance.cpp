#include "catch_amalgamated.hpp"

#include "heps/performance.hpp"

#include <cmath>
#include <random>

using namespace heps;
using Catch::Approx;

namespace {

ConverterSpec sign_only() {
    ConverterSpec s;
    s.loss.zvs_criterion = ZvsCriterion::SignOnly;
    return s;
}

std::vector<SwitchingEvent> events_at(const ConverterSpec& spec, const ModulationPoint& m, double V2) {
    return commutation_currents(solve_steady_state(spec, m, V2), gate_schedule(spec, m), spec.n, spec.V1);
}

}  // namespace

TEST_CASE("device naming per leg and edge", "[performance]") {
    CHECK(incoming_device(Leg::A, Edge::Rising) == Device::S1);
    CHECK(incoming_device(Leg::A, Edge::Falling) == Device::S2);
    CHECK(incoming_device(Leg::B, Edge::Rising) == Device::S3);
    CHECK(incoming_device(Leg::D, Edge::Falling) == Device::Q4);
    CHECK(outgoing_device(Leg::C, Edge::Rising) == Device::Q2);
    CHECK(to_string(Device::Q3) == "Q3");
}

TEST_CASE("commutation currents of unit-gain SPS", "[performance]") {
    const ConverterSpec spec = sign_only();
    const auto ev = events_at(spec, {Strategy::EPS1, 0.212, 1.0}, 200.0);
    REQUIRE(ev.size() == 8);
    const double I = spec.V1 * 0.212 * spec.period() / (2.0 * spec.Lr);
    CHECK(ev[0].leg == Leg::A);
    CHECK(ev[0].edge == Edge::Rising);
    CHECK(ev[0].time == 0.0);
    CHECK(ev[0].current == Approx(-I).epsilon(1e-12));
    CHECK(ev[0].current == Approx(-6.35).epsilon(2e-3));
    for (const auto& e : ev) CHECK(std::abs(e.current) == Approx(I).epsilon(1e-12));

    for (const auto& e : events_at(spec, {Strategy::EPS1, 0.0, 1.0}, 200.0)) CHECK(e.current == 0.0);
}

TEST_CASE("unit-gain SPS soft-switches all eight devices", "[performance][zvs]") {
    const ConverterSpec spec = sign_only();
    for (int k = 1; k <= 50; ++k) {
        const double Do = 0.01 * k;
        const ZvsReport z = zvs_count(events_at(spec, {Strategy::EPS1, Do, 1.0}, 200.0), spec);
        CHECK(z.n_zvs == 8);
        CHECK(z.threshold_primary == 0.0);
    }
}

TEST_CASE("sign-only ZVS is invariant under current scaling", "[performance][zvs][property]") {
    ConverterSpec a = sign_only();
    ConverterSpec b = a;
    b.Lr = a.Lr * 3.7;  // iL scales by 1/3.7 at the same modulation
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const ModulationPoint m{u(rng) < 0.5 ? Strategy::EPS1 : Strategy::EPS2, 0.5 * u(rng), u(rng)};
        const double V2 = 160.0 + 80.0 * u(rng);
        CHECK(zvs_count(events_at(a, m, V2), a).n_zvs == zvs_count(events_at(b, m, V2), b).n_zvs);
    }
}

TEST_CASE("charge-criterion threshold", "[performance][zvs]") {
    ConverterSpec spec;
    CHECK(zvs_threshold(spec, 200.0) == Approx(2.0 * 100e-12 * 200.0 / 400e-9).epsilon(1e-12));
    CHECK(zvs_threshold(spec, 200.0) == Approx(0.1).epsilon(1e-12));
    spec.loss.zvs_criterion = ZvsCriterion::SignOnly;
    CHECK(zvs_threshold(spec, 200.0) == 0.0);

    // A commutation current below the threshold fails the charge test but
    // passes the sign test.
    ConverterSpec charge;
    std::vector<SwitchingEvent> ev(1);
    ev[0].leg = Leg::A;
    ev[0].edge = Edge::Rising;
    ev[0].incoming = Device::S1;
    ev[0].current = -0.05;
    ev[0].v_dc = 200.0;
    CHECK(zvs_count(ev, charge).n_zvs == 0);
    CHECK(zvs_count(ev, spec).n_zvs == 1);
}

TEST_CASE("ZVS degrades monotonically at light load away from unit gain", "[performance][zvs][property]") {
    const ConverterSpec spec = sign_only();
    for (int iv = 0; iv < 20; ++iv) {
        const double V2 = 160.0 + 80.0 * iv / 19.0;
        if (std::abs(V2 - 200.0) < 1e-9) continue;
        int prev = 9;
        for (int ip = 19; ip >= 0; --ip) {
            const double P = 100.0 + 900.0 * ip / 19.0;
            const auto r = evaluate_operating_point(spec, P, V2, Strategy::EPS1, 1.0);
            REQUIRE(r.feasible);
            CHECK(r.n_zvs <= prev);
            prev = r.n_zvs;
        }
    }
}

TEST_CASE("one hard turn-on at 200 V and 5 A", "[performance][loss]") {
    ConverterSpec spec;
    spec.loss = LossModelParams{};
    spec.loss.k_on = 5e-8;
    spec.loss.k_off = 0.0;
    const auto wf = solve_steady_state(spec, {Strategy::EPS1, 0.0, 1.0}, 200.0);  // zero current
    std::vector<SwitchingEvent> ev(1);
    ev[0].incoming = Device::S1;
    ev[0].current = 5.0;
    ev[0].v_dc = 200.0;
    ZvsReport z;  // nothing soft-switched
    const LossBreakdown l = loss_breakdown(spec, wf, ev, z);
    CHECK(l.switching == Approx(1.0).epsilon(1e-12));
    CHECK(l.conduction == 0.0);
    CHECK(l.total == Approx(1.0).epsilon(1e-12));

    z.zvs[0] = true;
    CHECK(loss_breakdown(spec, wf, ev, z).switching == 0.0);
    spec.loss.k_off = 2e-8;
    CHECK(loss_breakdown(spec, wf, ev, z).switching == Approx(20e3 * 2e-8 * 1000.0).epsilon(1e-12));
}

TEST_CASE("conduction and copper losses follow the RMS current", "[performance][loss]") {
    ConverterSpec spec;
    spec.n = 1.3;
    const ModulationPoint m{Strategy::EPS2, 0.2, 0.7};
    const auto wf = solve_steady_state(spec, m, 190.0);
    const auto ev = commutation_currents(wf, gate_schedule(spec, m), spec.n, spec.V1);
    const LossBreakdown l = loss_breakdown(spec, wf, ev, zvs_count(ev, spec));
    const double I = rms_current(wf);
    CHECK(l.conduction == Approx(I * I * 2 * spec.loss.Rds_on * (1.0 + spec.n * spec.n)).epsilon(1e-12));
    CHECK(l.copper == Approx(I * I * spec.loss.R_w).epsilon(1e-12));
    CHECK(l.core == 0.0);
    CHECK(l.total == Approx(l.conduction + l.copper + l.switching).epsilon(1e-12));
}

TEST_CASE("Steinmetz core loss from the primary volt-seconds", "[performance][loss]") {
    ConverterSpec spec;
    spec.loss.k_c = 2.0;
    const auto wf = solve_steady_state(spec, {Strategy::EPS1, 0.2, 1.0}, 200.0);
    const LossBreakdown l = loss_breakdown(spec, wf, {}, ZvsReport{});
    const double bpk = spec.V1 * spec.half_period() / (2.0 * 20.0 * 1e-4);
    CHECK(l.core == Approx(2.0 * std::pow(20e3, 1.5) * std::pow(bpk, 2.5) * 1e-5).epsilon(1e-12));
}

TEST_CASE("operating-point evaluation", "[performance]") {
    const ConverterSpec spec;
    const auto rated = evaluate_operating_point(spec, 1000.0, 200.0, Strategy::EPS1, 1.0);
    REQUIRE(rated.feasible);
    CHECK(rated.outer == Approx(0.2119).margin(1e-3));
    CHECK(rated.n_zvs == 8);
    CHECK(rated.efficiency >= 0.94);
    CHECK(rated.efficiency <= 0.985);
    CHECK(rated.efficiency == Approx(1000.0 / (1000.0 + rated.P_loss)).epsilon(1e-14));

    const auto again = evaluate_operating_point(spec, 1000.0, 200.0, Strategy::EPS1, 1.0);
    CHECK(again.P_loss == rated.P_loss);
    CHECK(again.outer == rated.outer);

    const auto dead = evaluate_operating_point(spec, 500.0, 180.0, Strategy::EPS1, 0.0);
    CHECK_FALSE(dead.feasible);
    CHECK(dead.P_loss == 0.0);
    CHECK(dead.n_zvs == 0);
    CHECK(dead.efficiency == 0.0);
    CHECK_THROWS_AS(evaluate_operating_point(spec, 500.0, 180.0, Strategy::EPS1, 1.5), std::invalid_argument);
}
