#include "heps/converter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace heps {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double t, double period) {
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

// Center and width of the positive pulse of V*(x - y) where x, y are 50%
// duty legs rising at rx and ry.
struct Pulse {
    double center;
    double width;
};

Pulse bridge_pulse(double rx, double ry, double period) {
    const double half = 0.5 * period;
    const double delta = wrap(ry - rx, period);
    const double width = delta <= half ? delta : period - delta;
    return {rx + 0.5 * delta, width};
}

}  // namespace

std::string_view to_string(Strategy s) { return s == Strategy::EPS1 ? "EPS1" : "EPS2"; }

Strategy parse_strategy(std::string_view text) {
    if (text == "EPS1" || text == "eps1" || text == "0") return Strategy::EPS1;
    if (text == "EPS2" || text == "eps2" || text == "1") return Strategy::EPS2;
    throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

void LossModelParams::validate() const {
    require(Rds_on >= 0.0, "Rds_on", "must be >= 0");
    require(Coss_eff >= 0.0, "Coss_eff", "must be >= 0");
    require(k_on >= 0.0, "k_on", "must be >= 0");
    require(k_off >= 0.0, "k_off", "must be >= 0");
    require(R_w >= 0.0, "R_w", "must be >= 0");
    require(k_c >= 0.0, "k_c", "must be >= 0");
    require(alpha >= 0.0, "alpha", "must be >= 0");
    require(beta >= 0.0, "beta", "must be >= 0");
    require(core_area > 0.0 || k_c == 0.0, "core_area", "must be > 0 when core loss is enabled");
    require(core_turns > 0.0 || k_c == 0.0, "core_turns", "must be > 0 when core loss is enabled");
    require(core_volume >= 0.0, "core_volume", "must be >= 0");
}

void ConverterSpec::validate() const {
    require(V1 > 0.0, "V1", "must be > 0");
    require(n > 0.0, "n", "must be > 0");
    require(Lr > 0.0, "Lr", "must be > 0");
    require(fs > 0.0 && std::isfinite(fs), "fs", "must be > 0");
    require(t_dead >= 0.0 && t_dead < period() / 20.0, "t_dead", "must be in [0, Ts/20)");
    loss.validate();
}

void ModulationPoint::validate() const {
    require(outer >= 0.0 && outer <= 0.5, "Do", "must be in [0, 0.5]");
    require(inner >= 0.0 && inner <= 1.0, "Din", "must be in [0, 1]");
}

bool SwitchingSchedule::high(Leg leg, double t) const {
    return wrap(t - (*this)[leg].rising, period) < 0.5 * period;
}

double design_leakage_inductance(double n, double V1, double V2_min, double fs, double P_max) {
    if (!(n > 0.0 && V1 > 0.0 && V2_min > 0.0 && fs > 0.0 && P_max > 0.0)) {
        throw std::domain_error("design_leakage_inductance: all arguments must be > 0");
    }
    return n * V1 * V2_min / (8.0 * fs * P_max);
}

SwitchingSchedule gate_schedule(const ConverterSpec& spec, const ModulationPoint& mod) {
    mod.validate();
    const double Ts = spec.period();
    const double h = spec.half_period();

    std::array<double, 4> rising{};
    rising[0] = 0.0;
    if (mod.strategy == Strategy::EPS1) {
        // Zero plateau of (1 - Din) Ts/2 precedes the +V1 pulse of Din Ts/2.
        rising[1] = (2.0 - mod.inner) * h;
        rising[2] = mod.outer * h;
        rising[3] = mod.outer * h + h;
    } else {
        rising[1] = h;
        rising[2] = mod.outer * h;
        rising[3] = (mod.outer + mod.inner) * h;
    }

    SwitchingSchedule sched;
    sched.period = Ts;
    for (int i = 0; i < 4; ++i) {
        sched.legs[i].rising = wrap(rising[i], Ts);
        sched.legs[i].falling = wrap(rising[i] + h, Ts);
    }
    return sched;
}

PiecewiseWaveform solve_steady_state(const ConverterSpec& spec, const ModulationPoint& mod, double V2) {
    if (!(V2 > 0.0)) throw std::invalid_argument("V2: must be > 0");
    const SwitchingSchedule sched = gate_schedule(spec, mod);
    const double Ts = sched.period;
    const double h = 0.5 * Ts;

    // Every leg switches once per half period, so the first-half breakpoints
    // shifted by h give the second half.
    std::vector<double> first_half{0.0};
    for (Leg leg : kLegs) first_half.push_back(std::fmod(sched[leg].rising, h));
    std::sort(first_half.begin(), first_half.end());
    first_half.erase(std::unique(first_half.begin(), first_half.end()), first_half.end());

    std::vector<double> bps = first_half;
    for (double t : first_half) bps.push_back(t + h);
    bps.push_back(Ts);

    PiecewiseWaveform wf;
    wf.period = Ts;
    wf.V2 = V2;
    wf.segments.reserve(bps.size() - 1);
    for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
        if (!(bps[i + 1] > bps[i])) continue;
        Segment seg;
        seg.t_start = bps[i];
        seg.t_end = bps[i + 1];
        const double mid = 0.5 * (seg.t_start + seg.t_end);
        const double a = sched.high(Leg::A, mid) ? 1.0 : 0.0;
        const double b = sched.high(Leg::B, mid) ? 1.0 : 0.0;
        const double c = sched.high(Leg::C, mid) ? 1.0 : 0.0;
        const double d = sched.high(Leg::D, mid) ? 1.0 : 0.0;
        seg.vp = spec.V1 * (a - b);
        seg.vs = V2 * (c - d);
        seg.slope = (seg.vp - spec.n * seg.vs) / spec.Lr;
        wf.segments.push_back(seg);
    }

    // Half-wave antisymmetry: iL(h) = -iL(0).
    double rise = 0.0;
    for (const Segment& seg : wf.segments) {
        if (seg.t_start >= h) break;
        rise += seg.slope * seg.duration();
    }
    double i = -0.5 * rise;
    for (Segment& seg : wf.segments) {
        seg.i_start = i;
        i = seg.i_end();
    }
    return wf;
}

namespace {

const Segment& segment_at(const PiecewiseWaveform& wf, double t) {
    auto it = std::upper_bound(wf.segments.begin(), wf.segments.end(), t,
                               [](double v, const Segment& s) { return v < s.t_start; });
    if (it != wf.segments.begin()) --it;
    return *it;
}

}  // namespace

double PiecewiseWaveform::current_at(double t) const {
    const double tw = wrap(t, period);
    const Segment& s = segment_at(*this, tw);
    return s.i_start + s.slope * (tw - s.t_start);
}

double PiecewiseWaveform::primary_voltage_at(double t) const { return segment_at(*this, wrap(t, period)).vp; }

double PiecewiseWaveform::secondary_voltage_at(double t) const {
    return segment_at(*this, wrap(t, period)).vs;
}

double PiecewiseWaveform::peak_current() const {
    double pk = 0.0;
    for (const Segment& s : segments) pk = std::max({pk, std::abs(s.i_start), std::abs(s.i_end())});
    return pk;
}

double average_power(const PiecewiseWaveform& wf) {
    double energy = 0.0;
    for (const Segment& s : wf.segments) energy += s.vp * 0.5 * (s.i_start + s.i_end()) * s.duration();
    return energy / wf.period;
}

double rms_current(const PiecewiseWaveform& wf) {
    double acc = 0.0;
    for (const Segment& s : wf.segments) {
        const double a = s.i_start;
        const double b = s.i_end();
        acc += s.duration() * (a * a + a * b + b * b) / 3.0;
    }
    return std::sqrt(std::max(acc, 0.0) / wf.period);
}

std::optional<double> solve_outer_shift(const ConverterSpec& spec, Strategy strategy, double inner,
                                        double V2, double P_target) {
    if (!(P_target >= 0.0)) throw std::invalid_argument("P_target: must be >= 0");
    const double tol = std::max(0.01, 1e-6 * P_target);
    auto power_at = [&](double outer) {
        return average_power(solve_steady_state(spec, {strategy, outer, inner}, V2));
    };

    const double p_hi = power_at(0.5);
    if (p_hi < P_target - tol) return std::nullopt;
    const double p_lo = power_at(0.0);
    if (std::abs(p_lo - P_target) <= tol) return 0.0;
    if (p_lo > P_target) return std::nullopt;
    if (std::abs(p_hi - P_target) <= tol) return 0.5;

    double lo = 0.0;
    double hi = 0.5;
    double mid = 0.25;
    for (int it = 0; it < 60; ++it) {
        mid = 0.5 * (lo + hi);
        const double p = power_at(mid);
        if (std::abs(p - P_target) <= tol) return mid;
        if (p < P_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

HarmonicSeries harmonic_spectrum(const ConverterSpec& spec, const ModulationPoint& mod, double V2,
                                 int max_order) {
    if (max_order < 1 || max_order % 2 == 0) {
        throw std::domain_error("harmonic_spectrum: max order must be odd and >= 1");
    }
    const SwitchingSchedule sched = gate_schedule(spec, mod);
    const double Ts = sched.period;
    const double h = 0.5 * Ts;

    const Pulse p = bridge_pulse(sched[Leg::A].rising, sched[Leg::B].rising, Ts);
    const Pulse s = bridge_pulse(sched[Leg::C].rising, sched[Leg::D].rising, Ts);

    HarmonicSeries hs;
    hs.max_order = max_order;
    hs.omega0 = 2.0 * kPi * spec.fs;
    hs.phi_outer = kPi * mod.outer;
    hs.phi_primary = kPi * (1.0 - p.width / h);
    hs.phi_secondary = kPi * (1.0 - s.width / h);

    auto phase_of = [&](int k, double center) {
        double ph = -k * hs.omega0 * center + 0.5 * kPi;
        if (((k - 1) / 2) % 2 == 1) ph += kPi;
        return std::remainder(ph, 2.0 * kPi);
    };

    for (int k = 1; k <= max_order; k += 2) {
        HarmonicTerm t;
        t.k = k;
        t.vp_amplitude = 4.0 * spec.V1 / (k * kPi) * std::cos(k * hs.phi_primary / 2.0);
        t.vp_phase = phase_of(k, p.center);
        t.vs_amplitude = 4.0 * V2 / (k * kPi) * std::cos(k * hs.phi_secondary / 2.0);
        t.vs_phase = phase_of(k, s.center);

        const std::complex<double> vp = std::polar(1.0, t.vp_phase) * t.vp_amplitude;
        const std::complex<double> vs = std::polar(1.0, t.vs_phase) * t.vs_amplitude;
        const std::complex<double> il = (vp - spec.n * vs) / std::complex<double>(0.0, k * hs.omega0 * spec.Lr);
        t.il_amplitude = std::abs(il);
        t.il_phase = std::arg(il);
        hs.terms.push_back(t);
    }
    return hs;
}

double eval_harmonic_current(const HarmonicSeries& series, double t) {
    double sum = 0.0;
    for (const HarmonicTerm& term : series.terms) {
        sum += term.il_amplitude * std::sin(term.k * series.omega0 * t + term.il_phase);
    }
    return sum;
}

TransientTrace simulate_transient(const ConverterSpec& spec, const ModulationPoint& mod, double V2, double dt) {
    const double Ts = spec.period();
    if (!(dt > 0.0) || dt > Ts / 5000.0 * (1.0 + 1e-12)) {
        throw std::domain_error("simulate_transient: dt must be in (0, Ts/5000]");
    }
    const SwitchingSchedule sched = gate_schedule(spec, mod);
    const auto steps = static_cast<std::size_t>(std::llround(Ts / dt));

    TransientTrace trace;
    trace.dt = dt;
    trace.samples.resize(steps);
    double i = 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        trace.samples[k] = i;
        sum += i;
        const double vp = spec.V1 * ((sched.high(Leg::A, t) ? 1.0 : 0.0) - (sched.high(Leg::B, t) ? 1.0 : 0.0));
        const double vs = V2 * ((sched.high(Leg::C, t) ? 1.0 : 0.0) - (sched.high(Leg::D, t) ? 1.0 : 0.0));
        i += (vp - spec.n * vs) / spec.Lr * dt;
    }
    const double mean = sum / static_cast<double>(steps);
    for (double& s : trace.samples) s -= mean;
    return trace;
}

}  // namespace heps
