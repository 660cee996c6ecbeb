#include "heps/run.hpp"

#include "heps/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace heps {

using nlohmann::json;

namespace {

/// Walks one JSON object, reading known keys and rejecting the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        const std::string field = join(key);
        if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) throw ConfigError(field + ": expected a string");
            out = it->template get<std::string>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0)) {
                throw ConfigError(field + ": expected a non-negative integer");
            }
            out = it->template get<std::uint64_t>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw ConfigError(field + ": expected an integer");
            out = it->template get<T>();
        } else {
            if (!it->is_number()) throw ConfigError(field + ": expected a number");
            out = it->template get<T>();
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key " + join(it.key().c_str()));
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Re-throws a component validation error with the section prefix.
template <class F>
void validate_section(const char* section, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(section) + "." + e.what());
    }
}

void read_train(Section& parent, const char* key, gbdt::TrainConfig& c) {
    const json* j = parent.child(key);
    if (!j) return;
    Section s(*j, parent.join(key));
    s.read("max_depth", c.max_depth);
    s.read("reg_lambda", c.reg_lambda);
    s.read("learning_rate", c.learning_rate);
    s.read("max_trees", c.max_trees);
    s.read("min_samples_leaf", c.min_samples_leaf);
    s.read("early_stopping_rounds", c.early_stopping_rounds);
    s.finish();
}

json write_train(const gbdt::TrainConfig& c) {
    return {{"max_depth", c.max_depth},           {"reg_lambda", c.reg_lambda},
            {"learning_rate", c.learning_rate},   {"max_trees", c.max_trees},
            {"min_samples_leaf", c.min_samples_leaf}, {"early_stopping_rounds", c.early_stopping_rounds}};
}

std::string_view to_string(ZvsCriterion z) { return z == ZvsCriterion::Charge ? "charge" : "sign-only"; }

ZvsCriterion parse_zvs_criterion(const std::string& s) {
    if (s == "charge") return ZvsCriterion::Charge;
    if (s == "sign-only") return ZvsCriterion::SignOnly;
    throw ConfigError("loss.zvs_criterion: expected \"charge\" or \"sign-only\", got \"" + s + "\"");
}

}  // namespace

void RunConfig::validate() const {
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    validate_section("converter", [&] {
        // Loss fields live in their own section.
        ConverterSpec c = converter;
        c.loss = LossModelParams{};
        c.validate();
    });
    validate_section("loss", [&] { converter.loss.validate(); });
    validate_section("sweep", [&] {
        try {
            sweep.validate();
        } catch (const std::invalid_argument& e) {
            // SweepPlan messages already carry the "sweep." prefix.
            std::string msg = e.what();
            if (msg.rfind("sweep.", 0) == 0) msg.erase(0, 6);
            throw std::invalid_argument(msg);
        }
    });
    validate_section("train_loss", [&] { train_loss.validate(); });
    validate_section("train_zvs", [&] { train_zvs.validate(); });
    validate_section("swarm", [&] { swarm.validate(); });
    if (map.n_p < 1) throw ConfigError("map.n_p: must be >= 1");
    if (map.n_v2 < 1) throw ConfigError("map.n_v2: must be >= 1");
    if (!(map.p_min > 0.0 && map.p_max >= map.p_min)) throw ConfigError("map.p_min/p_max: need 0 < p_min <= p_max");
    if (map.n_p > 1 && !(map.p_max > map.p_min)) throw ConfigError("map.p_max: must exceed p_min when n_p > 1");
    if (!(map.v2_min > 0.0 && map.v2_max >= map.v2_min)) {
        throw ConfigError("map.v2_min/v2_max: need 0 < v2_min <= v2_max");
    }
    if (map.n_v2 > 1 && !(map.v2_max > map.v2_min)) throw ConfigError("map.v2_max: must exceed v2_min when n_v2 > 1");
    if (!(tie_tolerance >= 0.0 && tie_tolerance < 1.0)) throw ConfigError("map.tie_tolerance: must be in [0, 1)");
}

MapOptions RunConfig::map_options() const {
    MapOptions o;
    o.swarm = swarm;
    o.swarm.seed = derive_seed(seed, "stage2");
    o.tie_tolerance = tie_tolerance;
    return o;
}

std::uint64_t RunConfig::training_seed() const { return derive_seed(seed, "stage1"); }

RunConfig config_from_json_text(const std::string& text) {
    RunConfig cfg;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) return cfg;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON (") + e.what() + ")");
    }
    Section top(root, "");
    top.read("seed", cfg.seed);
    top.read("output_dir", cfg.output_dir);
    if (const json* j = top.child("converter")) {
        Section s(*j, "converter");
        s.read("V1", cfg.converter.V1);
        s.read("n", cfg.converter.n);
        s.read("Lr", cfg.converter.Lr);
        s.read("fs", cfg.converter.fs);
        s.read("t_dead", cfg.converter.t_dead);
        s.finish();
    }
    if (const json* j = top.child("loss")) {
        Section s(*j, "loss");
        LossModelParams& l = cfg.converter.loss;
        s.read("Rds_on", l.Rds_on);
        s.read("Coss_eff", l.Coss_eff);
        s.read("k_on", l.k_on);
        s.read("k_off", l.k_off);
        s.read("R_w", l.R_w);
        s.read("k_c", l.k_c);
        s.read("alpha", l.alpha);
        s.read("beta", l.beta);
        s.read("core_area", l.core_area);
        s.read("core_turns", l.core_turns);
        s.read("core_volume", l.core_volume);
        std::string crit(to_string(l.zvs_criterion));
        s.read("zvs_criterion", crit);
        l.zvs_criterion = parse_zvs_criterion(crit);
        s.finish();
    }
    if (const json* j = top.child("sweep")) {
        Section s(*j, "sweep");
        s.read("p_min", cfg.sweep.p_min);
        s.read("p_max", cfg.sweep.p_max);
        s.read("n_p", cfg.sweep.n_p);
        s.read("v2_min", cfg.sweep.v2_min);
        s.read("v2_max", cfg.sweep.v2_max);
        s.read("n_v2", cfg.sweep.n_v2);
        s.read("n_din", cfg.sweep.n_din);
        s.finish();
    }
    read_train(top, "train_loss", cfg.train_loss);
    read_train(top, "train_zvs", cfg.train_zvs);
    if (const json* j = top.child("swarm")) {
        Section s(*j, "swarm");
        pso::SwarmConfig& w = cfg.swarm;
        s.read("n_particles", w.n_particles);
        s.read("max_iter", w.max_iter);
        s.read("inertia_start", w.inertia_start);
        s.read("inertia_end", w.inertia_end);
        s.read("c1", w.c1);
        s.read("c2", w.c2);
        s.read("c_zvs", w.c_zvs);
        s.read("vl_min", w.vl_min);
        s.read("vl_max", w.vl_max);
        s.read("lower", w.lower);
        s.read("upper", w.upper);
        s.finish();
    }
    if (const json* j = top.child("map")) {
        Section s(*j, "map");
        s.read("p_min", cfg.map.p_min);
        s.read("p_max", cfg.map.p_max);
        s.read("n_p", cfg.map.n_p);
        s.read("v2_min", cfg.map.v2_min);
        s.read("v2_max", cfg.map.v2_max);
        s.read("n_v2", cfg.map.n_v2);
        s.read("tie_tolerance", cfg.tie_tolerance);
        s.finish();
    }
    top.finish();
    cfg.validate();
    return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
    const LossModelParams& l = cfg.converter.loss;
    const pso::SwarmConfig& w = cfg.swarm;
    json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["converter"] = {{"V1", cfg.converter.V1},
                      {"n", cfg.converter.n},
                      {"Lr", cfg.converter.Lr},
                      {"fs", cfg.converter.fs},
                      {"t_dead", cfg.converter.t_dead}};
    j["loss"] = {{"Rds_on", l.Rds_on},       {"Coss_eff", l.Coss_eff},   {"k_on", l.k_on},
                 {"k_off", l.k_off},         {"R_w", l.R_w},             {"k_c", l.k_c},
                 {"alpha", l.alpha},         {"beta", l.beta},           {"core_area", l.core_area},
                 {"core_turns", l.core_turns}, {"core_volume", l.core_volume},
                 {"zvs_criterion", std::string(to_string(l.zvs_criterion))}};
    j["sweep"] = {{"p_min", cfg.sweep.p_min},   {"p_max", cfg.sweep.p_max}, {"n_p", cfg.sweep.n_p},
                  {"v2_min", cfg.sweep.v2_min}, {"v2_max", cfg.sweep.v2_max}, {"n_v2", cfg.sweep.n_v2},
                  {"n_din", cfg.sweep.n_din}};
    j["train_loss"] = write_train(cfg.train_loss);
    j["train_zvs"] = write_train(cfg.train_zvs);
    j["swarm"] = {{"n_particles", w.n_particles}, {"max_iter", w.max_iter}, {"inertia_start", w.inertia_start},
                  {"inertia_end", w.inertia_end}, {"c1", w.c1},             {"c2", w.c2},
                  {"c_zvs", w.c_zvs},             {"vl_min", w.vl_min},     {"vl_max", w.vl_max},
                  {"lower", w.lower},             {"upper", w.upper}};
    j["map"] = {{"p_min", cfg.map.p_min},   {"p_max", cfg.map.p_max}, {"n_p", cfg.map.n_p},
                {"v2_min", cfg.map.v2_min}, {"v2_max", cfg.map.v2_max}, {"n_v2", cfg.map.n_v2},
                {"tie_tolerance", cfg.tie_tolerance}};
    return j.dump(2) + "\n";
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json_text(read_file(path)); }

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
    write_file_atomic(path, config_to_json_text(cfg));
}

std::vector<DatasetRow> stage_generate(const RunConfig& cfg, const std::filesystem::path& out) {
    auto rows = generate_dataset(cfg.converter, cfg.sweep);
    write_file_atomic(out / artifact::kDataset, dataset_csv(rows));
    return rows;
}

SurrogateTraining stage_train(const RunConfig& cfg, const std::filesystem::path& out) {
    const auto rows = parse_dataset_csv(read_file(out / artifact::kDataset));
    SurrogateTraining t = train_surrogates(rows, cfg.train_loss, cfg.train_zvs, cfg.training_seed());
    gbdt::save_model(t.models.loss, out / artifact::kLossModel);
    gbdt::save_model(t.models.zvs, out / artifact::kZvsModel);
    write_file_atomic(out / artifact::kMetrics, t.metrics.to_json_text());
    return t;
}

SurrogateModels load_surrogates(const std::filesystem::path& out) {
    return {gbdt::load_model(out / artifact::kLossModel), gbdt::load_model(out / artifact::kZvsModel)};
}

void save_strategy_map(const StrategyMap& map, const std::filesystem::path& map_file,
                       const std::filesystem::path& candidates_file) {
    write_file_atomic(map_file, strategy_map_csv(map));
    write_file_atomic(candidates_file, strategy_candidates_csv(map));
}

StrategyMap load_strategy_map(const std::filesystem::path& map_file, const std::filesystem::path& candidates_file) {
    return parse_strategy_map(read_file(map_file), read_file(candidates_file));
}

StrategyMap stage_optimize(const RunConfig& cfg, const std::filesystem::path& out) {
    const SurrogateModels models = load_surrogates(out);
    StrategyMap map = optimize_map(models, cfg.converter, cfg.map.p_values(), cfg.map.v2_values(), cfg.map_options());
    save_strategy_map(map, out / artifact::kStrategyMap, out / artifact::kCandidates);
    return map;
}

StrategyMap stage_direct_map(const RunConfig& cfg, const std::filesystem::path& out) {
    StrategyMap map = direct_map(cfg.converter, cfg.map.p_values(), cfg.map.v2_values(), cfg.map_options());
    save_strategy_map(map, out / artifact::kDirectMap, out / artifact::kDirectCandidates);
    return map;
}

void run_pipeline(const RunConfig& cfg, const std::filesystem::path& out) {
    cfg.validate();
    stage_generate(cfg, out);
    stage_train(cfg, out);
    stage_optimize(cfg, out);
}

}  // namespace heps
