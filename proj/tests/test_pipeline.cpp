#include "catch_amalgamated.hpp"

#include "heps/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace heps;
using Catch::Approx;

namespace {

SweepPlan small_plan() {
    SweepPlan p;
    p.n_p = 8;
    p.n_v2 = 8;
    p.n_din = 20;
    return p;
}

ConverterSpec sign_only() {
    ConverterSpec s;
    s.loss.zvs_criterion = ZvsCriterion::SignOnly;
    return s;
}

/// 2 x 3 map with hand-set optima for the selector tests.
StrategyMap toy_map() {
    StrategyMap m;
    m.p_grid = {100.0, 500.0};
    m.v2_grid = {160.0, 200.0, 240.0};
    for (double P : m.p_grid) {
        for (double V2 : m.v2_grid) {
            MapCell c;
            c.P = P;
            c.V2 = V2;
            c.chosen = V2 > 200.0 ? Strategy::EPS2 : Strategy::EPS1;
            c.per_strategy[0] = {0.5 + P / 2000.0 + (V2 - 160.0) / 400.0, 3.0, 8.0, 3.0};
            c.per_strategy[1] = {0.4 + P / 1000.0, 4.0, 7.0, 104.0};
            m.cells.push_back(c);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("grids and seeds", "[pipeline]") {
    CHECK(linspace(100.0, 1000.0, 37)[1] == Approx(125.0));
    CHECK(linspace(100.0, 1000.0, 37).back() == 1000.0);
    CHECK(linspace(5.0, 9.0, 1) == std::vector<double>{5.0});
    CHECK_THROWS_AS(linspace(0.0, 1.0, 0), std::invalid_argument);

    CHECK(derive_seed(1, "stage1") == derive_seed(1, "stage1"));
    CHECK(derive_seed(1, "stage1") != derive_seed(1, "stage2"));
    CHECK(derive_seed(1, "stage1") != derive_seed(2, "stage1"));
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 500; ++i) {
        seeds.insert(cell_seed(7, i, Strategy::EPS1));
        seeds.insert(cell_seed(7, i, Strategy::EPS2));
    }
    CHECK(seeds.size() == 1000);
}

TEST_CASE("dataset sweep order, size and CSV round trip", "[pipeline]") {
    const ConverterSpec spec;
    const SweepPlan plan = small_plan();
    const auto rows = generate_dataset(spec, plan);
    REQUIRE(rows.size() == plan.total_rows());
    CHECK(rows.front().strategy == Strategy::EPS1);
    CHECK(rows.back().strategy == Strategy::EPS2);
    CHECK(rows[0].P == 100.0);
    CHECK(rows[0].V2 == 160.0);
    CHECK(rows[0].inner == 0.0);
    CHECK(rows[plan.n_din - 1].inner == 1.0);
    CHECK(rows[plan.n_din].V2 > 160.0);

    std::size_t feasible = 0;
    for (const auto& r : rows) {
        if (!r.feasible) continue;
        ++feasible;
        CHECK(r.outer >= 0.0);
        CHECK(r.outer <= 0.5);
        CHECK(r.n_zvs >= 0);
        CHECK(r.n_zvs <= 8);
        CHECK(r.efficiency == Approx(r.P / (r.P + r.P_loss)));
    }
    CHECK(feasible > rows.size() / 3);
    CHECK(feasible < rows.size());

    const std::string text = dataset_csv(rows);
    CHECK(text.rfind("P_W,V2_V,S,Din,Do,Ploss_W,nZVS,Irms_A,eta,feasible\n", 0) == 0);
    const auto back = parse_dataset_csv(text);
    REQUIRE(back.size() == rows.size());
    CHECK(dataset_csv(back) == text);
    CHECK_THROWS(parse_dataset_csv("P_W,V2_V\n1,2\n"));
    CHECK(dataset_csv(generate_dataset(spec, plan)) == text);
}

TEST_CASE("strategy choice follows the gain unless the other is clearly better", "[pipeline]") {
    const ConverterSpec spec;
    const CellOptimum a{1.0, 10.0, 8.0, 10.0};
    CellOptimum b{0.8, 9.99, 8.0, 9.99};
    CHECK(choose_strategy(spec, 180.0, a, b, 5e-3) == Strategy::EPS1);  // within tolerance
    CHECK(choose_strategy(spec, 220.0, b, a, 5e-3) == Strategy::EPS2);
    b.fitness = 9.0;
    CHECK(choose_strategy(spec, 180.0, a, b, 5e-3) == Strategy::EPS2);
    CHECK(choose_strategy(spec, 200.0, a, a, 5e-3) == Strategy::EPS1);
    CHECK(choose_strategy(spec, 220.0, a, a, 0.0) == Strategy::EPS2);
    CHECK(conversion_gain(spec, 240.0) == Approx(1.2));
}

TEST_CASE("reachable Din range", "[pipeline]") {
    const ConverterSpec spec;
    const auto f = reachable_inner_floor(spec, Strategy::EPS1, 160.0, 900.0);
    REQUIRE(f.has_value());
    CHECK(*f > 0.0);
    CHECK(*f < 1.0);
    CHECK(solve_outer_shift(spec, Strategy::EPS1, *f + 1e-6, 160.0, 900.0).has_value());
    CHECK_FALSE(solve_outer_shift(spec, Strategy::EPS1, *f - 1e-6, 160.0, 900.0).has_value());
    const auto light = reachable_inner_floor(spec, Strategy::EPS1, 200.0, 10.0);
    REQUIRE(light.has_value());
    CHECK(*light < 0.1);
    CHECK_FALSE(reachable_inner_floor(spec, Strategy::EPS1, 160.0, 5000.0).has_value());
}

TEST_CASE("direct map reproduces SPS at unit gain", "[pipeline]") {
    const ConverterSpec spec = sign_only();
    MapOptions opts;
    opts.swarm.seed = 3;
    const StrategyMap m = direct_map(spec, {200.0, 600.0, 1000.0}, {170.0, 200.0, 230.0}, opts);
    REQUIRE(m.cells.size() == 9);
    for (std::size_t ip = 0; ip < 3; ++ip) {
        const MapCell& unit = m.at(ip, 1);
        CHECK(unit.chosen == Strategy::EPS1);
        CHECK(unit.best().inner == Approx(1.0).margin(0.02));
        CHECK(unit.best().n_zvs == 8.0);
        CHECK(m.at(ip, 0).chosen == Strategy::EPS1);
        CHECK(m.at(ip, 2).chosen == Strategy::EPS2);
        for (std::size_t iv = 0; iv < 3; ++iv) {
            const MapCell& c = m.at(ip, iv);
            const auto sps = evaluate_operating_point(spec, c.P, c.V2, Strategy::EPS1, 1.0);
            CHECK(c.best().fitness <= pso::fitness(sps.P_loss, sps.n_zvs, opts.swarm.c_zvs) * (1.0 + 1e-9));
        }
    }
    // Deterministic for a fixed seed.
    CHECK(strategy_map_csv(direct_map(spec, {200.0, 600.0, 1000.0}, {170.0, 200.0, 230.0}, opts)) ==
          strategy_map_csv(m));

    const StrategyMap back = parse_strategy_map(strategy_map_csv(m), strategy_candidates_csv(m));
    CHECK(strategy_candidates_csv(back) == strategy_candidates_csv(m));
    CHECK(back.provenance == Provenance::Direct);
    CHECK_THROWS(parse_strategy_map(strategy_map_csv(m), "P_W\n"));
}

TEST_CASE("surrogate training and surrogate map", "[pipeline][slow]") {
    const ConverterSpec spec;
    const auto rows = generate_dataset(spec, small_plan());
    gbdt::TrainConfig cl = default_loss_train_config(), cz = default_zvs_train_config();
    CHECK(cl.max_depth == 9);
    CHECK(cz.max_depth == 6);
    cl.max_trees = cz.max_trees = 200;
    const SurrogateTraining t = train_surrogates(rows, cl, cz, 5);
    const SurrogateMetrics& m = t.metrics;
    CHECK(m.n_train + m.n_validation + m.n_test == m.n_feasible);
    CHECK(m.loss_test.r2 > 0.95);
    CHECK(m.zvs_rounded_accuracy > 0.6);
    CHECK(m.to_json_text().find("rounded_accuracy") != std::string::npos);

    MapOptions opts;
    opts.swarm.seed = 4;
    const StrategyMap map = optimize_map(t.models, spec, {300.0, 700.0}, {170.0, 230.0}, opts);
    CHECK(map.provenance == Provenance::Surrogate);
    for (const MapCell& c : map.cells) {
        for (Strategy s : {Strategy::EPS1, Strategy::EPS2}) {
            const CellOptimum& o = c.of(s);
            CHECK(o.inner >= 0.0);
            CHECK(o.inner <= 1.0);
            if (o.fitness < pso::kInfeasibleFitness) {
                CHECK(solve_outer_shift(spec, s, o.inner, c.V2, c.P).has_value());
            }
        }
    }

    std::vector<DatasetRow> few(rows.begin(), rows.begin() + 500);
    CHECK_THROWS_AS(train_surrogates(few, cl, cz, 5), std::domain_error);
}

TEST_CASE("runtime selector", "[pipeline]") {
    const ConverterSpec spec;
    const StrategyMap m = toy_map();
    CHECK(interpolate_inner(m, Strategy::EPS1, 100.0, 160.0) == Approx(0.55));
    CHECK(interpolate_inner(m, Strategy::EPS1, 300.0, 180.0) == Approx(0.5 + 0.15 + 0.05));
    CHECK(interpolate_inner(m, Strategy::EPS2, 300.0, 230.0) == Approx(0.7));

    const SelectorOutput buck = select_modulation(m, 180.0, 300.0, spec);
    CHECK(buck.mode == GainMode::Buck);
    CHECK(buck.strategy == Strategy::EPS1);
    CHECK(buck.inner_primary == Approx(0.7));
    CHECK(buck.inner_secondary == 1.0);

    const SelectorOutput boost = select_modulation(m, 230.0, 300.0, spec);
    CHECK(boost.mode == GainMode::Boost);
    CHECK(boost.strategy == Strategy::EPS2);
    CHECK(boost.inner_primary == 1.0);
    CHECK(boost.inner_secondary == Approx(0.7));

    const SelectorOutput unit = select_modulation(m, 200.5, 300.0, spec);
    CHECK(unit.mode == GainMode::UnitGain);
    CHECK(unit.inner_primary == 1.0);
    CHECK(unit.inner_secondary == 1.0);
    CHECK(to_string(unit.mode) == "unit-gain");

    CHECK_THROWS_AS(select_modulation(m, 250.0, 300.0, spec), std::domain_error);
    CHECK_THROWS_AS(select_modulation(m, 200.0, 600.0, spec), std::domain_error);
    CHECK_THROWS_AS(select_modulation(m, 200.0, 50.0, spec), std::domain_error);
}

TEST_CASE("report files", "[pipeline]") {
    const ConverterSpec spec;
    StrategyMap m;
    m.p_grid = linspace(200.0, 1000.0, 3);
    m.v2_grid = linspace(160.0, 240.0, 3);
    for (double P : m.p_grid) {
        for (double V2 : m.v2_grid) {
            MapCell c;
            c.P = P;
            c.V2 = V2;
            m.cells.push_back(c);
        }
    }
    const auto files = build_report(spec, m);
    for (const char* name : {"din_surface_EPS1.csv", "din_surface_EPS2.csv", "zvs_region_EPS1.csv",
                             "zvs_region_EPS2.csv", "hybrid_map.csv", "efficiency_vs_power.csv",
                             "efficiency_vs_voltage.csv"}) {
        INFO(name);
        REQUIRE(files.count(name) == 1);
        CHECK(std::count(files.at(name).begin(), files.at(name).end(), '\n') >= 4);
    }
    CHECK(files.at("efficiency_vs_power.csv").find("eta_HEPS") != std::string::npos);
}
