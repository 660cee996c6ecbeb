#include "heps/pipeline.hpp"

#include "heps/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace heps {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        // stod rejects "nan"/"inf" spellings on some libcs; handle them here.
        if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw std::runtime_error(std::string("bad number in column ") + what + ": '" + s + "'");
    }
}

bool parse_flag(const std::string& s, const char* what) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw std::runtime_error(std::string("bad flag in column ") + what + ": '" + s + "'");
}

/// Cheap power-reachability test: P(Do) rises monotonically on [0, 0.5] for
/// both strategies, so the two ends bracket every realizable target.
bool power_reachable(const ConverterSpec& spec, Strategy s, double inner, double V2, double P) {
    const double tol = std::max(0.01, 1e-6 * P);
    const double p_hi = average_power(solve_steady_state(spec, {s, 0.5, inner}, V2));
    if (p_hi < P - tol) return false;
    const double p_lo = average_power(solve_steady_state(spec, {s, 0.0, inner}, V2));
    return p_lo <= P + tol;
}

void check_grid(const std::vector<double>& g, const char* what) {
    if (g.empty()) throw std::invalid_argument(std::string(what) + ": grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (!(g[i] > g[i - 1])) throw std::invalid_argument(std::string(what) + ": grid must be increasing");
    }
}

const char* const kMapHeader[] = {"P_W", "V2_V", "S", "Din_opt", "Ploss_opt_W", "nZVS_opt", "provenance"};

std::vector<std::string> map_row(const MapCell& c, Strategy s, Provenance prov) {
    const CellOptimum& o = c.of(s);
    return {format_number(c.P),       format_number(c.V2),      std::string(to_string(s)),
            format_number(o.inner),   format_number(o.P_loss),  format_number(o.n_zvs),
            std::string(to_string(prov))};
}

Provenance parse_provenance(std::string_view s) {
    if (s == "surrogate") return Provenance::Surrogate;
    if (s == "direct") return Provenance::Direct;
    throw std::runtime_error("unknown provenance '" + std::string(s) + "'");
}

/// Bracketing index and weight of x on an increasing grid.
std::pair<std::size_t, double> locate(const std::vector<double>& g, double x, const char* what) {
    const double slack = 1e-9 * std::max(1.0, std::abs(g.back() - g.front()));
    if (!(x >= g.front() - slack && x <= g.back() + slack)) {
        throw std::domain_error(std::string(what) + " outside the map grid");
    }
    if (g.size() == 1) return {0, 0.0};
    x = std::clamp(x, g.front(), g.back());
    std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), x) - g.begin());
    i = std::clamp<std::size_t>(i, 1, g.size() - 1) - 1;
    return {i, (x - g[i]) / (g[i + 1] - g[i])};
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("linspace: need at least one point");
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    out.back() = hi;
    return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return splitmix64(master ^ fnv1a(label));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ index);
}

void SweepPlan::validate() const {
    if (n_p < 1) throw std::invalid_argument("sweep.n_p: must be >= 1");
    if (n_v2 < 1) throw std::invalid_argument("sweep.n_v2: must be >= 1");
    if (n_din < 1) throw std::invalid_argument("sweep.n_din: must be >= 1");
    if (!(p_min >= 0.0 && p_max >= p_min)) throw std::invalid_argument("sweep.p_min/p_max: need 0 <= p_min <= p_max");
    if (!(v2_min > 0.0 && v2_max >= v2_min)) {
        throw std::invalid_argument("sweep.v2_min/v2_max: need 0 < v2_min <= v2_max");
    }
}

DatasetRow to_row(const OperatingPointResult& r) {
    DatasetRow row;
    row.P = r.P;
    row.V2 = r.V2;
    row.strategy = r.strategy;
    row.inner = r.inner;
    row.outer = r.outer;
    row.P_loss = r.P_loss;
    row.n_zvs = r.n_zvs;
    row.I_rms = r.I_rms;
    row.efficiency = r.efficiency;
    row.feasible = r.feasible;
    return row;
}

std::vector<DatasetRow> generate_dataset(const ConverterSpec& spec, const SweepPlan& plan) {
    spec.validate();
    plan.validate();
    const auto ps = linspace(plan.p_min, plan.p_max, plan.n_p);
    const auto vs = linspace(plan.v2_min, plan.v2_max, plan.n_v2);
    const auto ds = linspace(0.0, 1.0, plan.n_din);
    std::vector<DatasetRow> rows;
    rows.reserve(plan.total_rows());
    for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
        for (double P : ps) {
            for (double V2 : vs) {
                for (double din : ds) rows.push_back(to_row(evaluate_operating_point(spec, P, V2, s, din)));
            }
        }
    }
    return rows;
}

std::string dataset_csv(const std::vector<DatasetRow>& rows) {
    CsvTable t;
    t.header = {"P_W", "V2_V", "S", "Din", "Do", "Ploss_W", "nZVS", "Irms_A", "eta", "feasible"};
    t.rows.reserve(rows.size());
    for (const DatasetRow& r : rows) {
        t.rows.push_back({format_number(r.P), format_number(r.V2), std::string(to_string(r.strategy)),
                          format_number(r.inner), format_number(r.outer), format_number(r.P_loss),
                          std::to_string(r.n_zvs), format_number(r.I_rms), format_number(r.efficiency),
                          r.feasible ? "1" : "0"});
    }
    return t.to_string();
}

std::vector<DatasetRow> parse_dataset_csv(std::string_view text) {
    const CsvTable t = CsvTable::parse(text);
    const std::size_t cP = t.column("P_W"), cV = t.column("V2_V"), cS = t.column("S"), cDin = t.column("Din"),
                      cDo = t.column("Do"), cL = t.column("Ploss_W"), cZ = t.column("nZVS"),
                      cI = t.column("Irms_A"), cE = t.column("eta"), cF = t.column("feasible");
    std::vector<DatasetRow> rows;
    rows.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        DatasetRow d;
        d.P = parse_double(r[cP], "P_W");
        d.V2 = parse_double(r[cV], "V2_V");
        d.strategy = parse_strategy(r[cS]);
        d.inner = parse_double(r[cDin], "Din");
        d.outer = parse_double(r[cDo], "Do");
        d.P_loss = parse_double(r[cL], "Ploss_W");
        d.n_zvs = static_cast<int>(parse_double(r[cZ], "nZVS"));
        d.I_rms = parse_double(r[cI], "Irms_A");
        d.efficiency = parse_double(r[cE], "eta");
        d.feasible = parse_flag(r[cF], "feasible");
        rows.push_back(d);
    }
    return rows;
}

gbdt::Features features_of(double P, double V2, Strategy s, double inner) {
    return {P, V2, static_cast<double>(static_cast<int>(s)), inner};
}

gbdt::TrainConfig default_loss_train_config() {
    gbdt::TrainConfig c;
    c.max_depth = 9;
    c.reg_lambda = 0.1;
    return c;
}

gbdt::TrainConfig default_zvs_train_config() {
    gbdt::TrainConfig c;
    c.max_depth = 6;
    c.reg_lambda = 1.0;
    return c;
}

std::string SurrogateMetrics::to_json_text() const {
    auto metrics = [](const gbdt::Metrics& m) {
        return nlohmann::json{{"rmse", m.rmse}, {"mae", m.mae}, {"r2", std::isfinite(m.r2) ? m.r2 : -1e308}};
    };
    nlohmann::json j;
    j["n_feasible"] = n_feasible;
    j["n_train"] = n_train;
    j["n_validation"] = n_validation;
    j["n_test"] = n_test;
    j["loss_model"] = {{"trees", loss_trees}, {"validation_rmse", loss_validation_rmse}, {"test", metrics(loss_test)}};
    j["zvs_model"] = {{"trees", zvs_trees},
                      {"validation_rmse", zvs_validation_rmse},
                      {"test", metrics(zvs_test)},
                      {"rounded_accuracy", zvs_rounded_accuracy}};
    return j.dump(2) + "\n";
}

SurrogateTraining train_surrogates(const std::vector<DatasetRow>& rows, const gbdt::TrainConfig& cfg_loss,
                                   const gbdt::TrainConfig& cfg_zvs, std::uint64_t seed) {
    cfg_loss.validate();
    cfg_zvs.validate();
    std::vector<std::size_t> feasible;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].feasible) feasible.push_back(i);
    }
    if (feasible.size() < 1000) {
        throw std::domain_error("train_surrogates: need at least 1000 feasible rows, got " +
                                std::to_string(feasible.size()));
    }

    // One shared partition: split row indices, then build both target sets.
    std::vector<gbdt::Sample> index_samples(feasible.size());
    for (std::size_t k = 0; k < feasible.size(); ++k) index_samples[k].y = static_cast<double>(feasible[k]);
    const gbdt::DatasetSplit parts = gbdt::split_dataset(index_samples, derive_seed(seed, "split"));

    auto build = [&](const std::vector<gbdt::Sample>& idx, bool zvs) {
        std::vector<gbdt::Sample> out;
        out.reserve(idx.size());
        for (const auto& s : idx) {
            const DatasetRow& r = rows[static_cast<std::size_t>(s.y)];
            out.push_back({features_of(r.P, r.V2, r.strategy, r.inner), zvs ? double(r.n_zvs) : r.P_loss});
        }
        return out;
    };

    SurrogateTraining out;
    SurrogateMetrics& m = out.metrics;
    m.n_feasible = feasible.size();
    m.n_train = parts.train.size();
    m.n_validation = parts.validation.size();
    m.n_test = parts.test.size();

    gbdt::FitTrace trace;
    out.models.loss = gbdt::fit(build(parts.train, false), build(parts.validation, false), cfg_loss, &trace);
    m.loss_trees = out.models.loss.trees.size();
    m.loss_validation_rmse = trace.best_validation_rmse;
    m.loss_test = gbdt::score(out.models.loss, build(parts.test, false));

    out.models.zvs = gbdt::fit(build(parts.train, true), build(parts.validation, true), cfg_zvs, &trace);
    m.zvs_trees = out.models.zvs.trees.size();
    m.zvs_validation_rmse = trace.best_validation_rmse;
    const auto zvs_test = build(parts.test, true);
    m.zvs_test = gbdt::score(out.models.zvs, zvs_test);
    std::size_t hits = 0;
    for (const auto& s : zvs_test) {
        const double pred = std::clamp(std::round(out.models.zvs.predict(s.x)), 0.0, 8.0);
        if (pred == s.y) ++hits;
    }
    m.zvs_rounded_accuracy = zvs_test.empty() ? 0.0 : double(hits) / double(zvs_test.size());
    return out;
}

std::string_view to_string(Provenance p) {
    return p == Provenance::Surrogate ? "surrogate" : "direct";
}

double conversion_gain(const ConverterSpec& spec, double V2) { return spec.n * V2 / spec.V1; }

Strategy choose_strategy(const ConverterSpec& spec, double V2, const CellOptimum& eps1, const CellOptimum& eps2,
                         double tie_tolerance) {
    const bool boost = conversion_gain(spec, V2) > 1.0;
    const Strategy preferred = boost ? Strategy::EPS2 : Strategy::EPS1;
    const Strategy other = boost ? Strategy::EPS1 : Strategy::EPS2;
    const CellOptimum& p = boost ? eps2 : eps1;
    const CellOptimum& o = boost ? eps1 : eps2;
    const double margin = tie_tolerance * std::max(std::abs(p.fitness), 1e-12);
    return o.fitness < p.fitness - margin ? other : preferred;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell_index, Strategy s) {
    return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(cell_index)),
                       static_cast<std::uint64_t>(static_cast<int>(s)));
}

pso::Objective direct_objective(const ConverterSpec& spec, double P, double V2, Strategy s, double c_zvs) {
    return [spec, P, V2, s, c_zvs](double din) {
        const OperatingPointResult r = evaluate_operating_point(spec, P, V2, s, din);
        return pso::fitness(r.P_loss, r.n_zvs, c_zvs, r.feasible);
    };
}

std::optional<double> reachable_inner_floor(const ConverterSpec& spec, Strategy s, double V2, double P) {
    if (!power_reachable(spec, s, 1.0, V2, P)) return std::nullopt;
    if (power_reachable(spec, s, 0.0, V2, P)) return 0.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (power_reachable(spec, s, mid, V2, P) ? hi : lo) = mid;
    }
    return hi;
}

namespace {

/// Swarm over the reachable part of the box; degenerate ranges collapse to a
/// single evaluation.
CellOptimum swarm_cell(const ConverterSpec& spec, double P, double V2, Strategy s, pso::SwarmConfig cfg,
                       const pso::Objective& objective, const std::function<void(CellOptimum&)>& finish) {
    CellOptimum o;
    const std::optional<double> floor = reachable_inner_floor(spec, s, V2, P);
    if (!floor) {
        o.inner = cfg.upper;
        o.fitness = pso::kInfeasibleFitness;
        return o;
    }
    cfg.lower = std::max(cfg.lower, *floor);
    if (cfg.upper - cfg.lower < 1e-9) {
        o.inner = cfg.upper;
        o.fitness = objective(o.inner);
    } else {
        const pso::Result r = pso::optimize(objective, cfg);
        o.inner = r.best_position;
        o.fitness = r.best_fitness;
    }
    finish(o);
    return o;
}

using CellSolver = std::function<CellOptimum(double P, double V2, Strategy s, const pso::SwarmConfig& cfg)>;

StrategyMap run_map(const ConverterSpec& spec, const std::vector<double>& p_grid, const std::vector<double>& v2_grid,
                    const MapOptions& opts, Provenance prov, const CellSolver& solve) {
    spec.validate();
    opts.swarm.validate();
    check_grid(p_grid, "P grid");
    check_grid(v2_grid, "V2 grid");
    if (!(opts.tie_tolerance >= 0.0)) throw std::invalid_argument("tie_tolerance: must be >= 0");
    StrategyMap map;
    map.p_grid = p_grid;
    map.v2_grid = v2_grid;
    map.provenance = prov;
    map.cells.reserve(p_grid.size() * v2_grid.size());
    std::size_t index = 0;
    for (double P : p_grid) {
        for (double V2 : v2_grid) {
            MapCell cell;
            cell.P = P;
            cell.V2 = V2;
            for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
                pso::SwarmConfig cfg = opts.swarm;
                cfg.seed = cell_seed(opts.swarm.seed, index, s);
                cell.per_strategy[static_cast<int>(s)] = solve(P, V2, s, cfg);
            }
            cell.chosen = choose_strategy(spec, V2, cell.of(Strategy::EPS1), cell.of(Strategy::EPS2),
                                          opts.tie_tolerance);
            map.cells.push_back(cell);
            ++index;
        }
    }
    return map;
}

}  // namespace

StrategyMap optimize_map(const SurrogateModels& models, const ConverterSpec& spec, const std::vector<double>& p_grid,
                         const std::vector<double>& v2_grid, const MapOptions& opts) {
    return run_map(spec, p_grid, v2_grid, opts, Provenance::Surrogate,
                   [&](double P, double V2, Strategy s, const pso::SwarmConfig& cfg) {
                       const gbdt::Features anchor = features_of(P, V2, s, 0.0);
                       const gbdt::FeatureProfile loss(models.loss, anchor, gbdt::kInnerShift);
                       const gbdt::FeatureProfile zvs(models.zvs, anchor, gbdt::kInnerShift);
                       // The surrogates only know feasible points, so the power
                       // reachability of Din is checked on the analytic model.
                       auto objective = [&](double din) {
                           if (!power_reachable(spec, s, din, V2, P)) return pso::kInfeasibleFitness;
                           return pso::fitness(loss(din), zvs(din), cfg.c_zvs);
                       };
                       return swarm_cell(spec, P, V2, s, cfg, objective, [&](CellOptimum& o) {
                           o.P_loss = loss(o.inner);
                           o.n_zvs = zvs(o.inner);
                       });
                   });
}

CellOptimum direct_cell(const ConverterSpec& spec, double P, double V2, Strategy s, const pso::SwarmConfig& cfg) {
    return swarm_cell(spec, P, V2, s, cfg, direct_objective(spec, P, V2, s, cfg.c_zvs), [&](CellOptimum& o) {
        const OperatingPointResult e = evaluate_operating_point(spec, P, V2, s, o.inner);
        o.P_loss = e.P_loss;
        o.n_zvs = e.n_zvs;
    });
}

StrategyMap direct_map(const ConverterSpec& spec, const std::vector<double>& p_grid,
                       const std::vector<double>& v2_grid, const MapOptions& opts) {
    return run_map(spec, p_grid, v2_grid, opts, Provenance::Direct,
                   [&](double P, double V2, Strategy s, const pso::SwarmConfig& cfg) {
                       return direct_cell(spec, P, V2, s, cfg);
                   });
}

std::string strategy_map_csv(const StrategyMap& map) {
    CsvTable t;
    t.header.assign(std::begin(kMapHeader), std::end(kMapHeader));
    for (const MapCell& c : map.cells) t.rows.push_back(map_row(c, c.chosen, map.provenance));
    return t.to_string();
}

std::string strategy_candidates_csv(const StrategyMap& map) {
    CsvTable t;
    t.header.assign(std::begin(kMapHeader), std::end(kMapHeader));
    t.header.push_back("fitness");
    for (const MapCell& c : map.cells) {
        for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
            auto row = map_row(c, s, map.provenance);
            row.push_back(format_number(c.of(s).fitness));
            t.rows.push_back(std::move(row));
        }
    }
    return t.to_string();
}

StrategyMap parse_strategy_map(std::string_view map_csv, std::string_view candidates_csv) {
    const CsvTable chosen = CsvTable::parse(map_csv);
    const CsvTable cand = CsvTable::parse(candidates_csv);
    if (cand.rows.size() != 2 * chosen.rows.size()) {
        throw std::runtime_error("strategy map: candidates file must hold two rows per cell");
    }
    const std::size_t cP = chosen.column("P_W"), cV = chosen.column("V2_V"), cS = chosen.column("S"),
                      cProv = chosen.column("provenance");
    const std::size_t kP = cand.column("P_W"), kV = cand.column("V2_V"), kS = cand.column("S"),
                      kD = cand.column("Din_opt"), kL = cand.column("Ploss_opt_W"), kZ = cand.column("nZVS_opt"),
                      kF = cand.column("fitness");

    StrategyMap map;
    map.provenance = chosen.rows.empty() ? Provenance::Direct : parse_provenance(chosen.rows.front()[cProv]);
    for (std::size_t i = 0; i < chosen.rows.size(); ++i) {
        const auto& r = chosen.rows[i];
        MapCell c;
        c.P = parse_double(r[cP], "P_W");
        c.V2 = parse_double(r[cV], "V2_V");
        c.chosen = parse_strategy(r[cS]);
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& q = cand.rows[2 * i + k];
            if (parse_double(q[kP], "P_W") != c.P || parse_double(q[kV], "V2_V") != c.V2) {
                throw std::runtime_error("strategy map: candidates file out of step with the map");
            }
            CellOptimum& o = c.per_strategy[static_cast<int>(parse_strategy(q[kS]))];
            o.inner = parse_double(q[kD], "Din_opt");
            o.P_loss = parse_double(q[kL], "Ploss_opt_W");
            o.n_zvs = parse_double(q[kZ], "nZVS_opt");
            o.fitness = parse_double(q[kF], "fitness");
        }
        if (map.p_grid.empty() || c.P != map.p_grid.back()) {
            if (!map.p_grid.empty() && c.P < map.p_grid.back()) throw std::runtime_error("strategy map: rows not P-major");
            map.p_grid.push_back(c.P);
        }
        if (map.p_grid.size() == 1) map.v2_grid.push_back(c.V2);
        map.cells.push_back(c);
    }
    if (map.cells.size() != map.p_grid.size() * map.v2_grid.size()) {
        throw std::runtime_error("strategy map: cells do not form a rectangular grid");
    }
    for (std::size_t i = 0; i < map.cells.size(); ++i) {
        if (map.cells[i].V2 != map.v2_grid[i % map.v2_grid.size()]) {
            throw std::runtime_error("strategy map: cells do not form a rectangular grid");
        }
    }
    return map;
}

std::string_view to_string(GainMode m) {
    switch (m) {
        case GainMode::Buck: return "buck";
        case GainMode::Boost: return "boost";
        case GainMode::UnitGain: return "unit-gain";
    }
    return "?";
}

double interpolate_inner(const StrategyMap& map, Strategy s, double P, double V2) {
    if (map.cells.empty()) throw std::domain_error("interpolate_inner: empty map");
    const auto [ip, tp] = locate(map.p_grid, P, "P");
    const auto [iv, tv] = locate(map.v2_grid, V2, "V2");
    const std::size_t ip1 = std::min(ip + 1, map.p_grid.size() - 1);
    const std::size_t iv1 = std::min(iv + 1, map.v2_grid.size() - 1);
    const double d00 = map.at(ip, iv).of(s).inner, d01 = map.at(ip, iv1).of(s).inner;
    const double d10 = map.at(ip1, iv).of(s).inner, d11 = map.at(ip1, iv1).of(s).inner;
    return (1 - tp) * ((1 - tv) * d00 + tv * d01) + tp * ((1 - tv) * d10 + tv * d11);
}

SelectorOutput select_modulation(const StrategyMap& map, double V_ref, double P, const ConverterSpec& spec) {
    SelectorOutput out;
    out.gain = conversion_gain(spec, V_ref);
    // Range check applies in every mode, including the unit-gain band.
    const double din_query = [&] {
        if (out.gain < 1.0) return interpolate_inner(map, Strategy::EPS1, P, V_ref);
        return interpolate_inner(map, Strategy::EPS2, P, V_ref);
    }();
    if (std::abs(out.gain - 1.0) <= kUnitGainBand) {
        out.mode = GainMode::UnitGain;
        out.strategy = Strategy::EPS1;
    } else if (out.gain < 1.0) {
        out.mode = GainMode::Buck;
        out.strategy = Strategy::EPS1;
        out.inner_primary = din_query;
    } else {
        out.mode = GainMode::Boost;
        out.strategy = Strategy::EPS2;
        out.inner_secondary = din_query;
    }
    return out;
}

std::map<std::string, std::string> build_report(const ConverterSpec& spec, const StrategyMap& map) {
    struct Eval {
        OperatingPointResult sps, eps1, eps2;
        const OperatingPointResult& heps(Strategy s) const { return s == Strategy::EPS1 ? eps1 : eps2; }
    };
    std::vector<Eval> ev;
    ev.reserve(map.cells.size());
    for (const MapCell& c : map.cells) {
        ev.push_back({evaluate_operating_point(spec, c.P, c.V2, Strategy::EPS1, 1.0),
                      evaluate_operating_point(spec, c.P, c.V2, Strategy::EPS1, c.of(Strategy::EPS1).inner),
                      evaluate_operating_point(spec, c.P, c.V2, Strategy::EPS2, c.of(Strategy::EPS2).inner)});
    }
    auto eta = [](const OperatingPointResult& r) {
        return format_number(r.feasible ? r.efficiency : std::numeric_limits<double>::quiet_NaN());
    };

    std::map<std::string, std::string> files;
    for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
        const std::string tag(to_string(s));
        CsvTable din, zvs;
        din.header = {"P_W", "V2_V", "Din_opt"};
        zvs.header = {"P_W", "V2_V", "nZVS", "eta"};
        for (std::size_t i = 0; i < map.cells.size(); ++i) {
            const MapCell& c = map.cells[i];
            const OperatingPointResult& r = s == Strategy::EPS1 ? ev[i].eps1 : ev[i].eps2;
            din.rows.push_back({format_number(c.P), format_number(c.V2), format_number(c.of(s).inner)});
            zvs.rows.push_back({format_number(c.P), format_number(c.V2), std::to_string(r.n_zvs), eta(r)});
        }
        files["din_surface_" + tag + ".csv"] = din.to_string();
        files["zvs_region_" + tag + ".csv"] = zvs.to_string();
    }

    CsvTable hybrid;
    hybrid.header = {"P_W", "V2_V", "S", "Din_opt", "nZVS", "eta_HEPS", "eta_SPS", "nZVS_SPS"};
    for (std::size_t i = 0; i < map.cells.size(); ++i) {
        const MapCell& c = map.cells[i];
        const OperatingPointResult& h = ev[i].heps(c.chosen);
        hybrid.rows.push_back({format_number(c.P), format_number(c.V2), std::string(to_string(c.chosen)),
                               format_number(c.best().inner), std::to_string(h.n_zvs), eta(h), eta(ev[i].sps),
                               std::to_string(ev[i].sps.n_zvs)});
    }
    files["hybrid_map.csv"] = hybrid.to_string();

    auto nearest = [](const std::vector<double>& g, double x) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < g.size(); ++i) {
            if (std::abs(g[i] - x) < std::abs(g[best] - x)) best = i;
        }
        return best;
    };
    const std::vector<std::string> slice_cols = {"eta_SPS", "eta_EPS1", "eta_EPS2", "eta_HEPS", "nZVS_SPS",
                                                 "nZVS_HEPS"};
    auto slice_row = [&](std::size_t i) {
        const MapCell& c = map.cells[i];
        const Eval& e = ev[i];
        const OperatingPointResult& h = e.heps(c.chosen);
        return std::vector<std::string>{format_number(c.P),     format_number(c.V2),   eta(e.sps),
                                        eta(e.eps1),            eta(e.eps2),           eta(h),
                                        std::to_string(e.sps.n_zvs), std::to_string(h.n_zvs)};
    };

    CsvTable vs_power;
    vs_power.header = {"P_W", "V2_V"};
    vs_power.header.insert(vs_power.header.end(), slice_cols.begin(), slice_cols.end());
    std::vector<std::size_t> v_slices;
    for (double v : {160.0, 200.0, 240.0}) {
        const std::size_t iv = nearest(map.v2_grid, v);
        if (std::find(v_slices.begin(), v_slices.end(), iv) != v_slices.end()) continue;
        v_slices.push_back(iv);
        for (std::size_t ip = 0; ip < map.p_grid.size(); ++ip) vs_power.rows.push_back(slice_row(ip * map.v2_grid.size() + iv));
    }
    files["efficiency_vs_power.csv"] = vs_power.to_string();

    CsvTable vs_voltage;
    vs_voltage.header = vs_power.header;
    std::vector<std::size_t> p_slices;
    for (double p : {1000.0, 600.0, 200.0}) {
        const std::size_t ip = nearest(map.p_grid, p);
        if (std::find(p_slices.begin(), p_slices.end(), ip) != p_slices.end()) continue;
        p_slices.push_back(ip);
        for (std::size_t iv = 0; iv < map.v2_grid.size(); ++iv) {
            vs_voltage.rows.push_back(slice_row(ip * map.v2_grid.size() + iv));
        }
    }
    files["efficiency_vs_voltage.csv"] = vs_voltage.to_string();
    return files;
}

}  // namespace heps
