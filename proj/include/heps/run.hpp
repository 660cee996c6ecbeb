#pragma once

// Run configuration (JSON) and the file-producing pipeline stages shared by the
// command-line tool and the validation suite.

#include "heps/pipeline.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace heps {

/// Bad configuration or input; the message names the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MapGrid {
    double p_min = 100.0;
    double p_max = 1000.0;
    int n_p = 37;
    double v2_min = 160.0;
    double v2_max = 240.0;
    int n_v2 = 41;

    std::vector<double> p_values() const { return linspace(p_min, p_max, n_p); }
    std::vector<double> v2_values() const { return linspace(v2_min, v2_max, n_v2); }
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "heps_out";
    ConverterSpec converter{};
    SweepPlan sweep{};
    gbdt::TrainConfig train_loss = default_loss_train_config();
    gbdt::TrainConfig train_zvs = default_zvs_train_config();
    pso::SwarmConfig swarm{};  ///< seed is ignored; swarms are seeded from `seed`
    MapGrid map{};
    double tie_tolerance = 5e-3;

    /// Throws ConfigError naming the field, e.g. "converter.Lr: must be > 0".
    void validate() const;
    MapOptions map_options() const;
    std::uint64_t training_seed() const;
};

/// Missing sections/keys keep their defaults; an empty or all-whitespace text
/// yields the default config. Unknown keys and type mismatches are errors.
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

/// Artifact names inside an output directory.
namespace artifact {
inline constexpr const char* kDataset = "dataset.csv";
inline constexpr const char* kLossModel = "loss_model.json";
inline constexpr const char* kZvsModel = "zvs_model.json";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kStrategyMap = "strategy_map.csv";
inline constexpr const char* kCandidates = "strategy_candidates.csv";
inline constexpr const char* kDirectMap = "direct_strategy_map.csv";
inline constexpr const char* kDirectCandidates = "direct_strategy_candidates.csv";
inline constexpr const char* kReportDir = "report";
}  // namespace artifact

std::vector<DatasetRow> stage_generate(const RunConfig& cfg, const std::filesystem::path& out);
SurrogateTraining stage_train(const RunConfig& cfg, const std::filesystem::path& out);
StrategyMap stage_optimize(const RunConfig& cfg, const std::filesystem::path& out);
StrategyMap stage_direct_map(const RunConfig& cfg, const std::filesystem::path& out);

SurrogateModels load_surrogates(const std::filesystem::path& out);
void save_strategy_map(const StrategyMap& map, const std::filesystem::path& map_file,
                       const std::filesystem::path& candidates_file);
StrategyMap load_strategy_map(const std::filesystem::path& map_file, const std::filesystem::path& candidates_file);

/// gen-data, train and optimize in sequence.
void run_pipeline(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace heps
