#pragma once

// Steady-state analysis of the dual-active-bridge converter under the two
// extended-phase-shift strategies: gate timing, the exact piecewise-linear
// inductor current, power/RMS integrals, a harmonic-series cross-check and a
// time-stepping transient oracle.

#include "heps/loss_params.hpp"

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace heps {

enum class Strategy : int { EPS1 = 0, EPS2 = 1 };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

/// Electrical and device parameters of one DAB design.
struct ConverterSpec {
    double V1 = 200.0;        ///< input dc voltage [V]
    double n = 1.0;           ///< turns ratio n:1
    double Lr = 167e-6;       ///< leakage inductance [H]
    double fs = 20e3;         ///< switching frequency [Hz]
    double t_dead = 400e-9;   ///< dead time [s]
    LossModelParams loss{};

    double period() const { return 1.0 / fs; }
    double half_period() const { return 0.5 / fs; }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// (strategy, outer shift, inner shift). Shifts are fractions of a half period.
struct ModulationPoint {
    Strategy strategy = Strategy::EPS1;
    double outer = 0.0;   ///< Do in [0, 0.5]
    double inner = 1.0;   ///< Din in [0, 1]; Din = 1 is single phase shift

    void validate() const;
};

enum class Leg : int { A = 0, B = 1, C = 2, D = 3 };
inline constexpr std::array<Leg, 4> kLegs{Leg::A, Leg::B, Leg::C, Leg::D};

inline bool is_primary(Leg leg) { return leg == Leg::A || leg == Leg::B; }

/// Rising edge: high-side device of the leg turns on. Falling edge: low side.
struct LegTiming {
    double rising = 0.0;
    double falling = 0.0;
};

/// Per-leg edge times within one period, all in [0, Ts). Each leg has a 50%
/// duty cycle, so falling = rising + Ts/2 (mod Ts).
struct SwitchingSchedule {
    double period = 0.0;
    std::array<LegTiming, 4> legs{};

    const LegTiming& operator[](Leg leg) const { return legs[static_cast<int>(leg)]; }
    /// True when the high-side device of `leg` conducts at time t.
    bool high(Leg leg, double t) const;
};

struct Segment {
    double t_start = 0.0;
    double t_end = 0.0;
    double vp = 0.0;        ///< primary bridge ac voltage on the segment [V]
    double vs = 0.0;        ///< secondary bridge ac voltage (secondary side) [V]
    double i_start = 0.0;   ///< inductor current at t_start [A]
    double slope = 0.0;     ///< diL/dt [A/s]

    double duration() const { return t_end - t_start; }
    double i_end() const { return i_start + slope * duration(); }
};

/// One period of the exact steady-state inductor current.
struct PiecewiseWaveform {
    double period = 0.0;
    double V2 = 0.0;
    std::vector<Segment> segments;

    double current_at(double t) const;
    double primary_voltage_at(double t) const;
    double secondary_voltage_at(double t) const;
    /// max |iL| over the period (attained at a breakpoint).
    double peak_current() const;
};

struct HarmonicTerm {
    int k = 1;
    double vp_amplitude = 0.0;  ///< signed, (4 V1 / k pi) cos(k phi_v1 / 2)
    double vp_phase = 0.0;
    double vs_amplitude = 0.0;  ///< signed, (4 V2 / k pi) cos(k phi_v2 / 2)
    double vs_phase = 0.0;
    double il_amplitude = 0.0;  ///< >= 0
    double il_phase = 0.0;
};

/// Odd-harmonic series; each quantity is sum(amplitude * sin(k w0 t + phase)).
struct HarmonicSeries {
    int max_order = 1;
    double omega0 = 0.0;
    double phi_outer = 0.0;     ///< pi * Do
    double phi_primary = 0.0;   ///< inner-shift angle of the primary bridge
    double phi_secondary = 0.0; ///< inner-shift angle of the secondary bridge
    std::vector<HarmonicTerm> terms;
};

struct TransientTrace {
    double dt = 0.0;
    std::vector<double> samples;  ///< iL over the final period, zero mean
};

/// Upper bound on Lr that still admits P_max at Do <= 0.5.
double design_leakage_inductance(double n, double V1, double V2_min, double fs, double P_max);

SwitchingSchedule gate_schedule(const ConverterSpec& spec, const ModulationPoint& mod);

PiecewiseWaveform solve_steady_state(const ConverterSpec& spec, const ModulationPoint& mod, double V2);

double average_power(const PiecewiseWaveform& wf);
double rms_current(const PiecewiseWaveform& wf);

/// Outer shift that realizes P_target, or std::nullopt when the target is
/// unreachable on Do in [0, 0.5] for this (strategy, Din).
std::optional<double> solve_outer_shift(const ConverterSpec& spec, Strategy strategy, double inner,
                                        double V2, double P_target);

HarmonicSeries harmonic_spectrum(const ConverterSpec& spec, const ModulationPoint& mod, double V2,
                                 int max_order);
double eval_harmonic_current(const HarmonicSeries& series, double t);

TransientTrace simulate_transient(const ConverterSpec& spec, const ModulationPoint& mod, double V2,
                                  double dt);

}  // namespace heps
