// heps: command-line front end for the modulation design pipeline.
//
// Exit codes: 0 ok, 1 usage error, 2 invalid input / failed validation,
// 3 runtime error.

#include "heps/io.hpp"
#include "heps/run.hpp"
#include "heps/validation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace heps;
namespace fs = std::filesystem;

constexpr int kUsage = 1;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

RunConfig resolve(const Globals& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.output_dir = g.out;
    cfg.validate();
    return cfg;
}

std::string_view on_off(bool b) { return b ? "yes" : "no"; }

void print_metrics(const SurrogateMetrics& m) {
    std::printf("feasible rows %zu (train %zu / validation %zu / test %zu)\n", m.n_feasible, m.n_train,
                m.n_validation, m.n_test);
    std::printf("loss model: %zu trees, test R2 %.5f, RMSE %.4f W, MAE %.4f W\n", m.loss_trees, m.loss_test.r2,
                m.loss_test.rmse, m.loss_test.mae);
    std::printf("ZVS model:  %zu trees, test R2 %.4f, RMSE %.4f, rounded accuracy %.2f%%\n", m.zvs_trees,
                m.zvs_test.r2, m.zvs_test.rmse, 100.0 * m.zvs_rounded_accuracy);
}

void print_map_summary(const StrategyMap& map, const fs::path& file) {
    std::size_t eps1 = 0, full = 0;
    for (const MapCell& c : map.cells) {
        eps1 += c.chosen == Strategy::EPS1;
        full += c.best().n_zvs >= 8.0 - 0.5;
    }
    std::printf("%s map: %zu x %zu cells, EPS1 %zu, EPS2 %zu, full ZVS %zu -> %s\n",
                std::string(to_string(map.provenance)).c_str(), map.p_grid.size(), map.v2_grid.size(), eps1,
                map.cells.size() - eps1, full, file.string().c_str());
}

StrategyMap load_map(const fs::path& out, const std::string& which) {
    if (which == "direct") return load_strategy_map(out / artifact::kDirectMap, out / artifact::kDirectCandidates);
    if (which == "surrogate") return load_strategy_map(out / artifact::kStrategyMap, out / artifact::kCandidates);
    throw ConfigError("--map: expected \"surrogate\" or \"direct\"");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HEPS modulation design toolkit for dual-active-bridge converters"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--out", g.out, "output directory (overrides the config)");

    auto* design = app.add_subcommand("design-lr", "upper bound on the leakage inductance");
    double p_max = 1000.0, v2_min = 160.0;
    design->add_option("--p-max", p_max, "rated power [W]");
    design->add_option("--v2-min", v2_min, "minimum output voltage [V]");

    auto* wave = app.add_subcommand("waveform", "steady-state waveform and commutation report for one point");
    std::string strategy = "EPS1";
    double din = 1.0, v2 = 200.0;
    std::optional<double> power, outer;
    int samples = 1000;
    wave->add_option("--strategy", strategy, "EPS1 or EPS2");
    wave->add_option("--din", din, "inner phase shift in [0, 1]");
    wave->add_option("--v2", v2, "output voltage [V]");
    auto* p_opt = wave->add_option("--power", power, "transferred power [W]; Do is solved");
    wave->add_option("--do", outer, "outer phase shift in [0, 0.5]")->excludes(p_opt);
    wave->add_option("--samples", samples, "rows in waveform.csv")->check(CLI::PositiveNumber);

    auto* gen = app.add_subcommand("gen-data", "Stage I dataset sweep");
    auto* train = app.add_subcommand("train", "fit the loss and ZVS surrogates");
    auto* optimize = app.add_subcommand("optimize", "Stage II strategy map on the surrogates");
    auto* direct = app.add_subcommand("direct-map", "Stage II strategy map on the analytic evaluator");
    auto* run = app.add_subcommand("run", "gen-data, train and optimize");

    auto* select = app.add_subcommand("select", "query the runtime modulation selector");
    double vref = 0.0, sel_power = 0.0;
    std::string which_map = "surrogate";
    select->add_option("--vref", vref, "output voltage reference [V]")->required();
    select->add_option("--power", sel_power, "power [W]")->required();
    select->add_option("--map", which_map, "surrogate or direct");

    auto* validate = app.add_subcommand("validate", "run the acceptance checks");
    std::vector<int> criteria;
    validate->add_option("--criteria", criteria, "subset of checks (1..8)")->delimiter(',');

    auto* report = app.add_subcommand("report", "plot-ready CSV files from a strategy map");
    std::string report_map = "surrogate";
    report->add_option("--map", report_map, "surrogate or direct");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        const RunConfig cfg = resolve(g);
        const fs::path out = cfg.output_dir;
        const ConverterSpec& spec = cfg.converter;

        if (*design) {
            const double L = design_leakage_inductance(spec.n, spec.V1, v2_min, spec.fs, p_max);
            std::printf("Lr_max = %.6g uH (n = %g, V1 = %g V, V2_min = %g V, fs = %g Hz, P_max = %g W)\n", L * 1e6,
                        spec.n, spec.V1, v2_min, spec.fs, p_max);
            std::printf("configured Lr = %.6g uH: %s\n", spec.Lr * 1e6,
                        spec.Lr <= L ? "satisfies the bound" : "exceeds the bound");
        } else if (*wave) {
            ModulationPoint mod{parse_strategy(strategy), 0.0, din};
            if (outer) {
                mod.outer = *outer;
            } else {
                const double P = power.value_or(1000.0);
                const auto d = solve_outer_shift(spec, mod.strategy, din, v2, P);
                if (!d) throw ConfigError("--power: " + format_number(P) + " W is unreachable at this Din and V2");
                mod.outer = *d;
            }
            mod.validate();
            const PiecewiseWaveform wf = solve_steady_state(spec, mod, v2);
            CsvTable t;
            t.header = {"t_s", "vp_V", "vs_V", "iL_A"};
            for (int i = 0; i <= samples; ++i) {
                const double ts = wf.period * i / samples;
                t.rows.push_back({format_number(ts), format_number(wf.primary_voltage_at(ts)),
                                  format_number(wf.secondary_voltage_at(ts)), format_number(wf.current_at(ts))});
            }
            write_file_atomic(out / "waveform.csv", t.to_string());

            const auto events = commutation_currents(wf, gate_schedule(spec, mod), spec.n, spec.V1);
            const ZvsReport zvs = zvs_count(events, spec);
            const LossBreakdown loss = loss_breakdown(spec, wf, events, zvs);
            const double P = average_power(wf);
            std::printf("%s Do = %.6f Din = %.6f V2 = %g V: P = %.3f W, I_rms = %.4f A, I_pk = %.4f A\n",
                        strategy.c_str(), mod.outer, mod.inner, v2, P, rms_current(wf), wf.peak_current());
            std::printf("I_th primary %.4f A, secondary %.4f A\n", zvs.threshold_primary, zvs.threshold_secondary);
            std::printf("leg edge     time_us  incoming  current_A  ZVS\n");
            for (const SwitchingEvent& e : events) {
                std::printf("%c   %-7s  %7.3f  %-8s  %9.4f  %s\n", "ABCD"[static_cast<int>(e.leg)],
                            e.edge == Edge::Rising ? "rising" : "falling", e.time * 1e6,
                            std::string(to_string(e.incoming)).c_str(), e.current,
                            std::string(on_off(zvs[e.incoming])).c_str());
            }
            std::printf("n_ZVS = %d; losses: conduction %.4f W, copper %.4f W, switching %.4f W, core %.4f W, "
                        "total %.4f W, efficiency %.3f%%\n",
                        zvs.n_zvs, loss.conduction, loss.copper, loss.switching, loss.core, loss.total,
                        P > 0 ? 100.0 * P / (P + loss.total) : 0.0);
            std::printf("waveform -> %s\n", (out / "waveform.csv").string().c_str());
        } else if (*gen) {
            const auto rows = stage_generate(cfg, out);
            std::size_t feasible = 0;
            for (const auto& r : rows) feasible += r.feasible;
            std::printf("%zu rows (%zu feasible) -> %s\n", rows.size(), feasible,
                        (out / artifact::kDataset).string().c_str());
        } else if (*train) {
            print_metrics(stage_train(cfg, out).metrics);
        } else if (*optimize) {
            print_map_summary(stage_optimize(cfg, out), out / artifact::kStrategyMap);
        } else if (*direct) {
            print_map_summary(stage_direct_map(cfg, out), out / artifact::kDirectMap);
        } else if (*run) {
            stage_generate(cfg, out);
            print_metrics(stage_train(cfg, out).metrics);
            print_map_summary(stage_optimize(cfg, out), out / artifact::kStrategyMap);
        } else if (*select) {
            const StrategyMap map = load_map(out, which_map);
            const SelectorOutput s = select_modulation(map, vref, sel_power, spec);
            const bool sps = s.inner_primary == 1.0 && s.inner_secondary == 1.0;
            std::printf("mode %s, M = %.4f, S = %s%s, Din1 = %.6f, Din2 = %.6f\n",
                        std::string(to_string(s.mode)).c_str(), s.gain, std::string(to_string(s.strategy)).c_str(),
                        sps ? " (SPS)" : "", s.inner_primary, s.inner_secondary);
        } else if (*validate) {
            validation::Suite suite(cfg, out / "validation");
            bool all = true;
            for (int id : criteria.empty() ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8} : criteria) {
                const auto r = suite.run(id);
                std::cout << validation::format(r) << std::endl;
                all = all && r.passed;
            }
            return all ? 0 : kInvalid;
        } else if (*report) {
            const StrategyMap map = load_map(out, report_map);
            const fs::path dir = out / artifact::kReportDir;
            for (const auto& [name, text] : build_report(spec, map)) {
                write_file_atomic(dir / name, text);
                std::printf("%s\n", (dir / name).string().c_str());
            }
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "heps: %s\n", e.what());
        return kInvalid;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "heps: %s\n", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "heps: %s\n", e.what());
        return kRuntime;
    }
}
