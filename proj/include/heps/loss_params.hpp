#pragma once

namespace heps {

enum class ZvsCriterion : int {
    Charge = 0,    ///< |I| must exceed 2 Coss V / t_dead
    SignOnly = 1,  ///< polarity only (threshold 0)
};

/// Analytic loss-model coefficients. Defaults are calibrated, not measured.
struct LossModelParams {
    double Rds_on = 0.080;     ///< device on-resistance [ohm]
    double Coss_eff = 100e-12; ///< effective output capacitance [F]
    double k_on = 5e-8;        ///< hard turn-on energy per (V*A) [J/(V*A)]
    double k_off = 0.0;        ///< turn-off energy per (V*A) [J/(V*A)]
    double R_w = 0.2;          ///< winding resistance referred to primary [ohm]

    // Steinmetz core loss, k_c * fs^alpha * B_pk^beta * volume. k_c = 0 disables it.
    double k_c = 0.0;
    double alpha = 1.5;
    double beta = 2.5;
    double core_area = 1e-4;   ///< [m^2]
    double core_turns = 20.0;
    double core_volume = 1e-5; ///< [m^3]

    ZvsCriterion zvs_criterion = ZvsCriterion::Charge;

    void validate() const;
};

}  // namespace heps
