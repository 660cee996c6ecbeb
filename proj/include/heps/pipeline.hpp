#pragma once

// Stage I (dataset generation, surrogate training) and Stage II (per-cell
// strategy and inner-shift optimization), plus the runtime modulation selector.

#include "heps/converter.hpp"
#include "heps/gbdt.hpp"
#include "heps/performance.hpp"
#include "heps/pso.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace heps {

/// n uniformly spaced points on [lo, hi]; a single point sits at lo.
std::vector<double> linspace(double lo, double hi, int n);

/// Subsystem seed from a master seed and a purpose label.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct SweepPlan {
    double p_min = 100.0;
    double p_max = 1000.0;
    int n_p = 20;
    double v2_min = 160.0;
    double v2_max = 240.0;
    int n_v2 = 20;
    int n_din = 80;

    void validate() const;
    std::size_t total_rows() const { return 2u * static_cast<std::size_t>(n_p) * n_v2 * n_din; }
};

struct DatasetRow {
    double P = 0.0;
    double V2 = 0.0;
    Strategy strategy = Strategy::EPS1;
    double inner = 0.0;
    double outer = 0.0;
    double P_loss = 0.0;
    int n_zvs = 0;
    double I_rms = 0.0;
    double efficiency = 0.0;
    bool feasible = false;
};

DatasetRow to_row(const OperatingPointResult& r);

/// Rows in lexicographic (S, P, V2, Din) order.
std::vector<DatasetRow> generate_dataset(const ConverterSpec& spec, const SweepPlan& plan);

std::string dataset_csv(const std::vector<DatasetRow>& rows);
std::vector<DatasetRow> parse_dataset_csv(std::string_view text);

gbdt::Features features_of(double P, double V2, Strategy s, double inner);

/// Tree structures: depth 9 / lambda 0.1 for losses, depth 6 / lambda 1 for ZVS.
gbdt::TrainConfig default_loss_train_config();
gbdt::TrainConfig default_zvs_train_config();

struct SurrogateModels {
    gbdt::BoostedEnsemble loss;
    gbdt::BoostedEnsemble zvs;
};

struct SurrogateMetrics {
    std::size_t n_feasible = 0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::size_t n_test = 0;
    gbdt::Metrics loss_test{};
    gbdt::Metrics zvs_test{};
    double zvs_rounded_accuracy = 0.0;
    std::size_t loss_trees = 0;
    std::size_t zvs_trees = 0;
    double loss_validation_rmse = 0.0;
    double zvs_validation_rmse = 0.0;

    std::string to_json_text() const;
};

struct SurrogateTraining {
    SurrogateModels models;
    SurrogateMetrics metrics;
};

SurrogateTraining train_surrogates(const std::vector<DatasetRow>& rows, const gbdt::TrainConfig& cfg_loss,
                                   const gbdt::TrainConfig& cfg_zvs, std::uint64_t seed);

enum class Provenance : int { Surrogate = 0, Direct = 1 };
std::string_view to_string(Provenance p);

struct CellOptimum {
    double inner = 1.0;
    double P_loss = 0.0;
    double n_zvs = 0.0;
    double fitness = 0.0;
};

struct MapCell {
    double P = 0.0;
    double V2 = 0.0;
    Strategy chosen = Strategy::EPS1;
    std::array<CellOptimum, 2> per_strategy{};  ///< indexed by Strategy

    const CellOptimum& of(Strategy s) const { return per_strategy[static_cast<int>(s)]; }
    const CellOptimum& best() const { return of(chosen); }
};

/// Grid over (P, V2); cells are stored P-major.
struct StrategyMap {
    std::vector<double> p_grid;
    std::vector<double> v2_grid;
    std::vector<MapCell> cells;
    Provenance provenance = Provenance::Direct;

    const MapCell& at(std::size_t ip, std::size_t iv) const { return cells[ip * v2_grid.size() + iv]; }
};

struct MapOptions {
    pso::SwarmConfig swarm{};
    /// Relative fitness gap below which EPS1/EPS2 count as tied; ties go to
    /// the strategy matching the gain (EPS1 for M <= 1, EPS2 for M > 1).
    double tie_tolerance = 5e-3;
};

/// Voltage conversion gain n * V2 / V1.
double conversion_gain(const ConverterSpec& spec, double V2);

Strategy choose_strategy(const ConverterSpec& spec, double V2, const CellOptimum& eps1, const CellOptimum& eps2,
                         double tie_tolerance);

/// Stage II on the surrogates.
StrategyMap optimize_map(const SurrogateModels& models, const ConverterSpec& spec, const std::vector<double>& p_grid,
                         const std::vector<double>& v2_grid, const MapOptions& opts);

/// Stage II on the analytic evaluator.
StrategyMap direct_map(const ConverterSpec& spec, const std::vector<double>& p_grid,
                       const std::vector<double>& v2_grid, const MapOptions& opts);

/// Smallest Din whose maximum power (Do = 0.5) still reaches P; nullopt when
/// even Din = 1 falls short. Maximum power rises monotonically with Din, so the
/// reachable set is [floor, 1] and the map swarms search only that interval.
std::optional<double> reachable_inner_floor(const ConverterSpec& spec, Strategy s, double V2, double P);

/// One (cell, strategy) swarm on the analytic evaluator, as run by direct_map.
CellOptimum direct_cell(const ConverterSpec& spec, double P, double V2, Strategy s, const pso::SwarmConfig& cfg);

/// Objective Din -> fitness evaluated directly by the analytic model.
pso::Objective direct_objective(const ConverterSpec& spec, double P, double V2, Strategy s, double c_zvs);

/// Seed for one (cell, strategy) swarm.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell_index, Strategy s);

/// Chosen strategy per cell, one row per cell.
std::string strategy_map_csv(const StrategyMap& map);
/// Both strategies' optima, two rows per cell (same columns).
std::string strategy_candidates_csv(const StrategyMap& map);
StrategyMap parse_strategy_map(std::string_view map_csv, std::string_view candidates_csv);

enum class GainMode : int { Buck = 0, Boost = 1, UnitGain = 2 };
std::string_view to_string(GainMode m);

struct SelectorOutput {
    GainMode mode = GainMode::UnitGain;
    Strategy strategy = Strategy::EPS1;
    double inner_primary = 1.0;    ///< Din1
    double inner_secondary = 1.0;  ///< Din2
    double gain = 1.0;
};

inline constexpr double kUnitGainBand = 0.005;

/// Bilinear interpolation of one strategy's optimal Din over the map grid.
double interpolate_inner(const StrategyMap& map, Strategy s, double P, double V2);

SelectorOutput select_modulation(const StrategyMap& map, double V_ref, double P, const ConverterSpec& spec);

/// Plot-ready CSV files (name -> contents) for the strategy surfaces, ZVS
/// regions and efficiency slices.
std::map<std::string, std::string> build_report(const ConverterSpec& spec, const StrategyMap& map);

}  // namespace heps
