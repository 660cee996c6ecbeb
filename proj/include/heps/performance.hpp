#pragma once

// ZVS and loss evaluation for a solved operating point.

#include "heps/converter.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace heps {

enum class Device : int { S1 = 0, S2, S3, S4, Q1, Q2, Q3, Q4 };
enum class Edge : int { Rising = 0, Falling = 1 };

std::string_view to_string(Device d);

/// Device turned on by an edge of a leg.
Device incoming_device(Leg leg, Edge edge);
Device outgoing_device(Leg leg, Edge edge);

/// One leg commutation. `current` is the link current at the edge, oriented
/// out of the switching node for primary legs and into the switching node for
/// secondary legs (secondary legs carry n*iL).
struct SwitchingEvent {
    Leg leg = Leg::A;
    Edge edge = Edge::Rising;
    double time = 0.0;
    Device incoming = Device::S1;
    Device outgoing = Device::S2;
    double current = 0.0;
    double v_dc = 0.0;
};

struct ZvsReport {
    std::array<bool, 8> zvs{};
    int n_zvs = 0;
    double threshold_primary = 0.0;   ///< I_th used for primary legs [A]
    double threshold_secondary = 0.0; ///< I_th used for secondary legs [A]

    bool operator[](Device d) const { return zvs[static_cast<int>(d)]; }
};

struct LossBreakdown {
    double conduction = 0.0;
    double copper = 0.0;
    double switching = 0.0;
    double core = 0.0;
    double total = 0.0;
};

struct OperatingPointResult {
    double P = 0.0;
    double V2 = 0.0;
    Strategy strategy = Strategy::EPS1;
    double inner = 0.0;
    double outer = 0.0;
    double I_rms = 0.0;
    int n_zvs = 0;
    double P_loss = 0.0;
    double efficiency = 0.0;
    bool feasible = false;
    LossBreakdown losses{};
};

/// Eight events: both edges of each leg, in leg order A..D, rising first.
std::vector<SwitchingEvent> commutation_currents(const PiecewiseWaveform& wf, const SwitchingSchedule& schedule,
                                                 double n, double V1);

/// Charge-criterion threshold current 2 Coss V / t_dead.
double zvs_threshold(const ConverterSpec& spec, double v_dc);

ZvsReport zvs_count(const std::vector<SwitchingEvent>& events, const ConverterSpec& spec);

LossBreakdown loss_breakdown(const ConverterSpec& spec, const PiecewiseWaveform& wf,
                             const std::vector<SwitchingEvent>& events, const ZvsReport& zvs);

OperatingPointResult evaluate_operating_point(const ConverterSpec& spec, double P, double V2, Strategy strategy,
                                              double inner);

}  // namespace heps
