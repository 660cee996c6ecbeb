#pragma once

// Gradient-boosted regression trees with squared loss and exact greedy splits.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace heps::gbdt {

inline constexpr std::size_t kNumFeatures = 4;
using Features = std::array<double, kNumFeatures>;

/// Feature order used by the surrogates.
enum FeatureIndex : std::size_t { kPower = 0, kOutputVoltage = 1, kStrategy = 2, kInnerShift = 3 };

struct Sample {
    Features x{};
    double y = 0.0;
};

struct TrainConfig {
    int max_depth = 6;
    double reg_lambda = 1.0;
    double learning_rate = 0.08;
    int max_trees = 2000;
    int min_samples_leaf = 1;
    int early_stopping_rounds = 50;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Flat binary tree. Internal nodes send x[feature] < threshold to the left.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  ///< -1 for leaves
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;  ///< leaf weight
    };

    RegressionTree() = default;
    explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    double predict(const Features& x) const;
    int leaf_index(const Features& x) const;
    int depth() const;

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    std::vector<Node> nodes_;
};

class BoostedEnsemble {
public:
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;

    /// base_score + learning_rate * sum of tree outputs.
    double predict(const Features& x) const;
};

struct FitTrace {
    std::vector<double> train_rmse;       ///< after each tree, before truncation
    std::vector<double> validation_rmse;  ///< empty when no validation set
    std::size_t best_num_trees = 0;
    double best_validation_rmse = std::numeric_limits<double>::quiet_NaN();
};

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
};

/// 70/15/15 random partition, deterministic for a given seed.
DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t seed);

BoostedEnsemble fit(const std::vector<Sample>& train, const std::vector<Sample>& validation,
                    const TrainConfig& cfg, FitTrace* trace = nullptr);

double predict(const BoostedEnsemble& model, const Features& x);

struct Metrics {
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;  ///< -inf when targets are constant but predictions miss
};

Metrics score(const BoostedEnsemble& model, const std::vector<Sample>& data);

/// The ensemble restricted to a line through `anchor` along one feature. Along
/// that line the prediction is piecewise constant between the split thresholds
/// on `axis`, so the profile reproduces predict() bit for bit at a fraction of
/// the cost.
class FeatureProfile {
public:
    FeatureProfile(const BoostedEnsemble& model, const Features& anchor, std::size_t axis);

    double operator()(double value) const;
    const std::vector<double>& thresholds() const { return thresholds_; }

private:
    std::vector<double> thresholds_;
    std::vector<double> values_;
};

void save_model(const BoostedEnsemble& model, const std::filesystem::path& path);
BoostedEnsemble load_model(const std::filesystem::path& path);
std::string to_json_text(const BoostedEnsemble& model);
BoostedEnsemble from_json_text(const std::string& text);

}  // namespace heps::gbdt
