#include "heps/gbdt.hpp"

#include "heps/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace heps::gbdt {

void TrainConfig::validate() const {
    if (max_depth < 0) throw std::invalid_argument("max_depth: must be >= 0");
    if (!(reg_lambda >= 0.0)) throw std::invalid_argument("reg_lambda: must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw std::invalid_argument("learning_rate: must be in (0, 1]");
    }
    if (max_trees < 0) throw std::invalid_argument("max_trees: must be >= 0");
    if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf: must be >= 1");
    if (early_stopping_rounds < 1) throw std::invalid_argument("early_stopping_rounds: must be >= 1");
}

double RegressionTree::predict(const Features& x) const { return nodes_[leaf_index(x)].value; }

int RegressionTree::leaf_index(const Features& x) const {
    int i = 0;
    while (nodes_[i].feature >= 0) {
        const Node& nd = nodes_[i];
        i = x[nd.feature] < nd.threshold ? nd.left : nd.right;
    }
    return i;
}

int RegressionTree::depth() const {
    std::vector<int> d(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (nodes_[i].feature >= 0) {
            d[nodes_[i].left] = d[i] + 1;
            d[nodes_[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

double BoostedEnsemble::predict(const Features& x) const {
    double acc = 0.0;
    for (const RegressionTree& t : trees) acc += t.predict(x);
    return base_score + learning_rate * acc;
}

double predict(const BoostedEnsemble& model, const Features& x) { return model.predict(x); }

DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t seed) {
    const std::size_t n = samples.size();
    if (n < 10) throw std::domain_error("split_dataset: need at least 10 samples");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n_train = n * 70 / 100;
    const std::size_t n_val = n * 15 / 100;
    DatasetSplit out;
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = samples[idx[i]];
        if (i < n_train) {
            out.train.push_back(s);
        } else if (i < n_train + n_val) {
            out.validation.push_back(s);
        } else {
            out.test.push_back(s);
        }
    }
    return out;
}

namespace {

// Rows are put in a canonical order first so the fitted model does not depend
// on the order the caller supplied them in.
std::vector<Sample> canonical(std::vector<Sample> rows) {
    std::sort(rows.begin(), rows.end(), [](const Sample& a, const Sample& b) {
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    return rows;
}

struct BinnedColumn {
    std::vector<double> uniques;
    std::vector<std::uint32_t> bin;  ///< per row
};

struct BinSum {
    std::uint32_t bin;
    double sum;
    int count;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<BinnedColumn>& cols, const TrainConfig& cfg) : cols_(cols), cfg_(cfg) {}

    RegressionTree build(const std::vector<double>& residual, std::vector<double>& leaf_of_row) {
        residual_ = &residual;
        nodes_.clear();
        rows_.resize(residual.size());
        std::iota(rows_.begin(), rows_.end(), 0u);
        grow(0, rows_.size(), 0);
        leaf_of_row.resize(residual.size());
        for (const auto& [begin, end, node] : leaves_) {
            for (std::size_t i = begin; i < end; ++i) leaf_of_row[rows_[i]] = nodes_[node].value;
        }
        leaves_.clear();
        return RegressionTree(std::move(nodes_));
    }

private:
    struct LeafSpan {
        std::size_t begin, end;
        int node;
    };

    int grow(std::size_t begin, std::size_t end, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const std::vector<double>& r = *residual_;
        const auto n = static_cast<int>(end - begin);
        double g = 0.0;
        double g2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            g += r[rows_[i]];
            g2 += r[rows_[i]] * r[rows_[i]];
        }
        const double lambda = cfg_.reg_lambda;

        int best_feature = -1;
        double best_threshold = 0.0;
        if (depth < cfg_.max_depth && n >= 2 * cfg_.min_samples_leaf) {
            const double parent = g * g / (n + lambda);
            double best_gain = 1e-12 * (1.0 + g2);
            for (std::size_t f = 0; f < cols_.size(); ++f) {
                const BinnedColumn& col = cols_[f];
                if (col.uniques.size() < 2) continue;
                collect_bins(col, begin, end);
                double gl = 0.0;
                int nl = 0;
                for (std::size_t k = 0; k < bins_.size(); ++k) {
                    if (k > 0) {
                        const int nr = n - nl;
                        if (nl >= cfg_.min_samples_leaf && nr >= cfg_.min_samples_leaf) {
                            const double gr = g - gl;
                            const double gain = gl * gl / (nl + lambda) + gr * gr / (nr + lambda) - parent;
                            if (gain > best_gain) {
                                best_gain = gain;
                                best_feature = static_cast<int>(f);
                                best_threshold = midpoint(col.uniques[bins_[k - 1].bin], col.uniques[bins_[k].bin]);
                            }
                        }
                    }
                    gl += bins_[k].sum;
                    nl += bins_[k].count;
                }
            }
        }

        if (best_feature < 0) {
            nodes_[id].value = n + lambda > 0.0 ? g / (n + lambda) : 0.0;
            leaves_.push_back({begin, end, id});
            return id;
        }

        const BinnedColumn& col = cols_[best_feature];
        auto mid_it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                            rows_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t row) {
                                                return col.uniques[col.bin[row]] < best_threshold;
                                            });
        const auto split = static_cast<std::size_t>(mid_it - rows_.begin());
        nodes_[id].feature = best_feature;
        nodes_[id].threshold = best_threshold;
        const int left = grow(begin, split, depth + 1);
        const int right = grow(split, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static double midpoint(double lo, double hi) {
        const double m = lo + 0.5 * (hi - lo);
        return m > lo ? m : hi;
    }

    // Per-bin residual sums of the node, in ascending bin order. Both paths
    // accumulate each bin in row order, so they agree bit for bit.
    void collect_bins(const BinnedColumn& col, std::size_t begin, std::size_t end) {
        const std::vector<double>& r = *residual_;
        const std::size_t nb = col.uniques.size();
        const std::size_t n = end - begin;
        bins_.clear();
        if (n * 8 >= nb) {
            hist_sum_.assign(nb, 0.0);
            hist_cnt_.assign(nb, 0);
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t row = rows_[i];
                hist_sum_[col.bin[row]] += r[row];
                ++hist_cnt_[col.bin[row]];
            }
            for (std::size_t b = 0; b < nb; ++b) {
                if (hist_cnt_[b] > 0) bins_.push_back({static_cast<std::uint32_t>(b), hist_sum_[b], hist_cnt_[b]});
            }
        } else {
            scratch_.clear();
            for (std::size_t i = begin; i < end; ++i) scratch_.push_back({col.bin[rows_[i]], r[rows_[i]], 1});
            std::stable_sort(scratch_.begin(), scratch_.end(),
                             [](const BinSum& a, const BinSum& b) { return a.bin < b.bin; });
            for (const BinSum& s : scratch_) {
                if (!bins_.empty() && bins_.back().bin == s.bin) {
                    bins_.back().sum += s.sum;
                    ++bins_.back().count;
                } else {
                    bins_.push_back(s);
                }
            }
        }
    }

    const std::vector<BinnedColumn>& cols_;
    const TrainConfig& cfg_;
    const std::vector<double>* residual_ = nullptr;
    std::vector<std::uint32_t> rows_;
    std::vector<RegressionTree::Node> nodes_;
    std::vector<LeafSpan> leaves_;
    std::vector<BinSum> bins_;
    std::vector<BinSum> scratch_;
    std::vector<double> hist_sum_;
    std::vector<int> hist_cnt_;
};

double rmse_of(const std::vector<Sample>& rows, const std::vector<double>& acc, double base, double lr) {
    double sse = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double e = rows[i].y - (base + lr * acc[i]);
        sse += e * e;
    }
    return std::sqrt(sse / static_cast<double>(rows.size()));
}

}  // namespace

BoostedEnsemble fit(const std::vector<Sample>& train_in, const std::vector<Sample>& validation_in,
                    const TrainConfig& cfg, FitTrace* trace) {
    cfg.validate();
    if (train_in.empty()) throw std::domain_error("fit: empty training set");
    const std::vector<Sample> train = canonical(train_in);
    const std::vector<Sample> validation = canonical(validation_in);
    const std::size_t n = train.size();

    std::vector<BinnedColumn> cols(kNumFeatures);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = train[i].x[f];
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        cols[f].bin.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cols[f].bin[i] = static_cast<std::uint32_t>(std::lower_bound(u.begin(), u.end(), train[i].x[f]) - u.begin());
        }
        cols[f].uniques = std::move(u);
    }

    BoostedEnsemble model;
    model.learning_rate = cfg.learning_rate;
    double sum = 0.0;
    for (const Sample& s : train) sum += s.y;
    model.base_score = sum / static_cast<double>(n);
    const double base = model.base_score;
    const double lr = cfg.learning_rate;

    std::vector<double> acc_train(n, 0.0);
    std::vector<double> acc_val(validation.size(), 0.0);
    std::vector<double> residual(n);
    std::vector<double> leaf_of_row;

    FitTrace local;
    FitTrace& tr = trace ? *trace : local;
    tr = FitTrace{};
    const bool use_val = !validation.empty();
    double best_val = use_val ? rmse_of(validation, acc_val, base, lr) : 0.0;
    std::size_t best_count = 0;

    TreeBuilder builder(cols, cfg);
    for (int t = 0; t < cfg.max_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = train[i].y - (base + lr * acc_train[i]);
        RegressionTree tree = builder.build(residual, leaf_of_row);
        if (tree.nodes().size() == 1 && std::abs(lr * tree.nodes()[0].value) <= 1e-12 * (1.0 + std::abs(base))) {
            break;  // nothing left to fit
        }
        for (std::size_t i = 0; i < n; ++i) acc_train[i] += leaf_of_row[i];
        for (std::size_t i = 0; i < validation.size(); ++i) acc_val[i] += tree.predict(validation[i].x);
        model.trees.push_back(std::move(tree));
        tr.train_rmse.push_back(rmse_of(train, acc_train, base, lr));

        if (use_val) {
            const double v = rmse_of(validation, acc_val, base, lr);
            tr.validation_rmse.push_back(v);
            if (v < best_val) {
                best_val = v;
                best_count = model.trees.size();
            } else if (model.trees.size() - best_count >= static_cast<std::size_t>(cfg.early_stopping_rounds)) {
                break;
            }
        } else {
            best_count = model.trees.size();
        }
    }
    model.trees.resize(best_count);
    tr.best_num_trees = best_count;
    if (use_val) tr.best_validation_rmse = best_val;
    return model;
}

Metrics score(const BoostedEnsemble& model, const std::vector<Sample>& data) {
    if (data.empty()) throw std::domain_error("score: empty dataset");
    const double m = static_cast<double>(data.size());
    double mean = 0.0;
    for (const Sample& s : data) mean += s.y;
    mean /= m;
    double sse = 0.0, sae = 0.0, sst = 0.0;
    for (const Sample& s : data) {
        const double e = s.y - model.predict(s.x);
        sse += e * e;
        sae += std::abs(e);
        sst += (s.y - mean) * (s.y - mean);
    }
    Metrics out;
    out.rmse = std::sqrt(sse / m);
    out.mae = sae / m;
    if (sst > 0.0) {
        out.r2 = 1.0 - sse / sst;
    } else {
        out.r2 = sse > 0.0 ? -std::numeric_limits<double>::infinity() : 1.0;
    }
    return out;
}

FeatureProfile::FeatureProfile(const BoostedEnsemble& model, const Features& anchor, std::size_t axis) {
    for (const RegressionTree& t : model.trees) {
        for (const auto& nd : t.nodes()) {
            if (nd.feature == static_cast<int>(axis)) thresholds_.push_back(nd.threshold);
        }
    }
    std::sort(thresholds_.begin(), thresholds_.end());
    thresholds_.erase(std::unique(thresholds_.begin(), thresholds_.end()), thresholds_.end());

    // Interval i holds values with exactly i thresholds <= value.
    const std::size_t m = thresholds_.size() + 1;
    std::vector<double> acc(m, 0.0);
    struct Pending {
        int node;
        std::size_t lo, hi;
    };
    std::vector<Pending> stack;
    for (const RegressionTree& t : model.trees) {
        const auto& nodes = t.nodes();
        stack.push_back({0, 0, m});
        while (!stack.empty()) {
            const Pending p = stack.back();
            stack.pop_back();
            const auto& nd = nodes[p.node];
            if (nd.feature < 0) {
                for (std::size_t i = p.lo; i < p.hi; ++i) acc[i] += nd.value;
            } else if (nd.feature == static_cast<int>(axis)) {
                const auto j = static_cast<std::size_t>(
                    std::lower_bound(thresholds_.begin(), thresholds_.end(), nd.threshold) - thresholds_.begin());
                const std::size_t cut = std::clamp(j + 1, p.lo, p.hi);
                if (p.lo < cut) stack.push_back({nd.left, p.lo, cut});
                if (cut < p.hi) stack.push_back({nd.right, cut, p.hi});
            } else {
                stack.push_back({anchor[nd.feature] < nd.threshold ? nd.left : nd.right, p.lo, p.hi});
            }
        }
    }
    values_.resize(m);
    for (std::size_t i = 0; i < m; ++i) values_[i] = model.base_score + model.learning_rate * acc[i];
}

double FeatureProfile::operator()(double value) const {
    const auto i = static_cast<std::size_t>(std::upper_bound(thresholds_.begin(), thresholds_.end(), value) -
                                            thresholds_.begin());
    return values_[i];
}

std::string to_json_text(const BoostedEnsemble& model) {
    nlohmann::json j;
    j["format"] = "heps-gbdt-ensemble";
    j["version"] = 1;
    j["feature_names"] = {"P_W", "V2_V", "S", "Din"};
    j["base_score"] = model.base_score;
    j["learning_rate"] = model.learning_rate;
    j["num_trees"] = model.trees.size();
    nlohmann::json trees = nlohmann::json::array();
    for (const RegressionTree& t : model.trees) {
        std::vector<int> feature, left, right;
        std::vector<double> threshold, value;
        for (const auto& nd : t.nodes()) {
            feature.push_back(nd.feature);
            threshold.push_back(nd.threshold);
            left.push_back(nd.left);
            right.push_back(nd.right);
            value.push_back(nd.value);
        }
        trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                         {"value", value}});
    }
    j["trees"] = std::move(trees);
    return j.dump() + "\n";
}

BoostedEnsemble from_json_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "heps-gbdt-ensemble") throw std::runtime_error("not a heps gbdt model file");
    BoostedEnsemble model;
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& jt : j.at("trees")) {
        const auto feature = jt.at("feature").get<std::vector<int>>();
        const auto threshold = jt.at("threshold").get<std::vector<double>>();
        const auto left = jt.at("left").get<std::vector<int>>();
        const auto right = jt.at("right").get<std::vector<int>>();
        const auto value = jt.at("value").get<std::vector<double>>();
        const std::size_t m = feature.size();
        if (threshold.size() != m || left.size() != m || right.size() != m || value.size() != m || m == 0) {
            throw std::runtime_error("malformed tree arrays");
        }
        std::vector<RegressionTree::Node> nodes(m);
        for (std::size_t i = 0; i < m; ++i) {
            nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i]};
            if (feature[i] >= 0) {
                if (feature[i] >= static_cast<int>(kNumFeatures) || left[i] <= static_cast<int>(i) ||
                    right[i] <= static_cast<int>(i) || left[i] >= static_cast<int>(m) ||
                    right[i] >= static_cast<int>(m)) {
                    throw std::runtime_error("malformed tree node");
                }
            }
        }
        model.trees.emplace_back(std::move(nodes));
    }
    return model;
}

void save_model(const BoostedEnsemble& model, const std::filesystem::path& path) {
    write_file_atomic(path, to_json_text(model));
}

BoostedEnsemble load_model(const std::filesystem::path& path) { return from_json_text(read_file(path)); }

}  // namespace heps::gbdt
