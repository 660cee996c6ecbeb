#pragma once

// The acceptance checks, one function per criterion, shared by `heps validate`
// and the acceptance test binary.

#include "heps/run.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace heps::validation {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// "[PASS] 3 closed-form oracles (0.1 s): ..."
std::string format(const CriterionResult& r);

/// Shared state so the expensive direct maps are computed once per suite.
class Suite {
public:
    /// `base` supplies the design case (converter, sweep, training, swarm, map
    /// grid, seed); `work_dir` receives the pipeline runs of criteria 5 and 8.
    Suite(RunConfig base, std::filesystem::path work_dir);

    CriterionResult solver_cross_validation();   // 1
    CriterionResult harmonic_equivalence();      // 2
    CriterionResult closed_form_oracles();       // 3
    CriterionResult strategy_structure();           // 4
    CriterionResult surrogate_fidelity();        // 5
    CriterionResult optimizer_quality();         // 6
    CriterionResult loss_model_properties();     // 7
    CriterionResult determinism();               // 8

    CriterionResult run(int id);
    std::vector<CriterionResult> run_all(const std::vector<int>& ids = {1, 2, 3, 4, 5, 6, 7, 8});

private:
    RunConfig sign_only_config() const;
    const StrategyMap& sign_only_direct_map();

    RunConfig base_;
    std::filesystem::path work_dir_;
    std::optional<StrategyMap> sign_only_map_;
    double sign_only_map_seconds_ = 0.0;
};

}  // namespace heps::validation
