#include "heps/performance.hpp"

#include <cmath>
#include <stdexcept>

namespace heps {

std::string_view to_string(Device d) {
    static constexpr std::array<std::string_view, 8> names{"S1", "S2", "S3", "S4", "Q1", "Q2", "Q3", "Q4"};
    return names[static_cast<int>(d)];
}

Device incoming_device(Leg leg, Edge edge) {
    const int high = 2 * static_cast<int>(leg);
    return static_cast<Device>(edge == Edge::Rising ? high : high + 1);
}

Device outgoing_device(Leg leg, Edge edge) {
    return incoming_device(leg, edge == Edge::Rising ? Edge::Falling : Edge::Rising);
}

namespace {

// Orientation of the link current seen by each leg's switching node.
double leg_orientation(Leg leg, double n) {
    switch (leg) {
        case Leg::A: return 1.0;
        case Leg::B: return -1.0;
        case Leg::C: return n;
        case Leg::D: return -n;
    }
    return 0.0;
}

}  // namespace

std::vector<SwitchingEvent> commutation_currents(const PiecewiseWaveform& wf, const SwitchingSchedule& schedule,
                                                 double n, double V1) {
    std::vector<SwitchingEvent> events;
    events.reserve(8);
    for (Leg leg : kLegs) {
        for (Edge edge : {Edge::Rising, Edge::Falling}) {
            SwitchingEvent ev;
            ev.leg = leg;
            ev.edge = edge;
            ev.time = edge == Edge::Rising ? schedule[leg].rising : schedule[leg].falling;
            ev.incoming = incoming_device(leg, edge);
            ev.outgoing = outgoing_device(leg, edge);
            ev.current = leg_orientation(leg, n) * wf.current_at(ev.time);
            ev.v_dc = is_primary(leg) ? V1 : wf.V2;
            events.push_back(ev);
        }
    }
    return events;
}

double zvs_threshold(const ConverterSpec& spec, double v_dc) {
    if (spec.loss.zvs_criterion == ZvsCriterion::SignOnly || spec.t_dead <= 0.0) return 0.0;
    return 2.0 * spec.loss.Coss_eff * v_dc / spec.t_dead;
}

ZvsReport zvs_count(const std::vector<SwitchingEvent>& events, const ConverterSpec& spec) {
    ZvsReport report;
    for (const SwitchingEvent& ev : events) {
        const double th = zvs_threshold(spec, ev.v_dc);
        if (is_primary(ev.leg)) {
            report.threshold_primary = th;
        } else {
            report.threshold_secondary = th;
        }
        // Primary: the incoming device's body diode conducts when current flows
        // into the node (rising) or out of it (falling). Secondary legs see the
        // current entering the node, hence the mirrored signs.
        const bool want_negative = is_primary(ev.leg) == (ev.edge == Edge::Rising);
        const bool ok = want_negative ? ev.current < -th : ev.current > th;
        report.zvs[static_cast<int>(ev.incoming)] = ok;
    }
    report.n_zvs = 0;
    for (bool z : report.zvs) report.n_zvs += z ? 1 : 0;
    return report;
}

LossBreakdown loss_breakdown(const ConverterSpec& spec, const PiecewiseWaveform& wf,
                             const std::vector<SwitchingEvent>& events, const ZvsReport& zvs) {
    const LossModelParams& p = spec.loss;
    LossBreakdown out;
    const double irms = rms_current(wf);
    const double isec = spec.n * irms;
    // Two devices of each bridge conduct at any instant.
    out.conduction = irms * irms * 2.0 * p.Rds_on + isec * isec * 2.0 * p.Rds_on;
    out.copper = irms * irms * p.R_w;

    double energy = 0.0;
    for (const SwitchingEvent& ev : events) {
        const double va = ev.v_dc * std::abs(ev.current);
        energy += p.k_off * va;
        if (!zvs[ev.incoming]) energy += p.k_on * va;
    }
    out.switching = spec.fs * energy;

    if (p.k_c > 0.0) {
        const double h = wf.period * 0.5;
        double volt_seconds = 0.0;
        for (const Segment& s : wf.segments) {
            if (s.t_start >= h) break;
            volt_seconds += std::abs(s.vp) * s.duration();
        }
        const double b_pk = volt_seconds / (2.0 * p.core_turns * p.core_area);
        out.core = p.k_c * std::pow(spec.fs, p.alpha) * std::pow(b_pk, p.beta) * p.core_volume;
    }
    out.total = out.conduction + out.copper + out.switching + out.core;
    return out;
}

OperatingPointResult evaluate_operating_point(const ConverterSpec& spec, double P, double V2, Strategy strategy,
                                              double inner) {
    if (!(inner >= 0.0 && inner <= 1.0)) throw std::invalid_argument("Din: must be in [0, 1]");
    OperatingPointResult r;
    r.P = P;
    r.V2 = V2;
    r.strategy = strategy;
    r.inner = inner;

    const std::optional<double> outer = solve_outer_shift(spec, strategy, inner, V2, P);
    if (!outer) return r;

    const ModulationPoint mod{strategy, *outer, inner};
    const SwitchingSchedule sched = gate_schedule(spec, mod);
    const PiecewiseWaveform wf = solve_steady_state(spec, mod, V2);
    const auto events = commutation_currents(wf, sched, spec.n, spec.V1);
    const ZvsReport zvs = zvs_count(events, spec);

    r.feasible = true;
    r.outer = *outer;
    r.I_rms = rms_current(wf);
    r.n_zvs = zvs.n_zvs;
    r.losses = loss_breakdown(spec, wf, events, zvs);
    r.P_loss = r.losses.total;
    r.efficiency = (P + r.P_loss) > 0.0 ? P / (P + r.P_loss) : 0.0;
    return r;
}

}  // namespace heps
