#pragma once

// Particle swarm optimization with a state-based adaptive velocity limit over a
// one-dimensional box [lower, upper].

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace heps::pso {

struct SwarmConfig {
    int n_particles = 5;
    int max_iter = 50;
    double inertia_start = 0.9;
    double inertia_end = 0.4;
    double c1 = 2.05;
    double c2 = 2.05;
    double c_zvs = 100.0;
    double vl_min = 0.4;
    double vl_max = 0.7;
    double lower = 0.0;
    double upper = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Particle {
    double position = 0.0;
    double velocity = 0.0;
    double best_position = 0.0;
    double best_fitness = 0.0;
    double r1 = 0.0;  ///< draws of the most recent velocity update
    double r2 = 0.0;
};

struct SwarmState {
    std::vector<Particle> particles;
    double g_best = 0.0;
    double g_best_fitness = 0.0;
    int g_best_index = 0;   ///< particle owning g_best
    int iteration = 0;      ///< completed velocity updates
    double velocity_limit = 0.0;
    double evolutionary_factor = 0.0;
    std::vector<double> mean_distance;  ///< d_j
    double d_min = 0.0;
    double d_max = 0.0;
    double d_g = 0.0;
    std::mt19937_64 rng;
};

using Objective = std::function<double(double)>;

/// Penalized loss: P_loss + max(8 - n_ZVS, 0) * c_zvs, or the infeasibility
/// sentinel when the point cannot realize the commanded power.
inline constexpr double kInfeasibleFitness = 1e6;
double fitness(double p_loss, double n_zvs, double c_zvs, bool feasible = true);

struct Distances {
    std::vector<double> mean_distance;
    double d_min = 0.0;
    double d_max = 0.0;
    double d_g = 0.0;
    double factor = 0.0;
};

/// Mean distances d_j and the evolutionary factor (d_g - d_min)/(d_max - d_min).
Distances evolutionary_factor(const std::vector<double>& positions, std::size_t best_index);

double velocity_limit(double f, const SwarmConfig& cfg);

/// Inertia weight for the velocity update numbered `iteration` (0-based).
double inertia(int iteration, const SwarmConfig& cfg);

SwarmState initialize(const Objective& objective, const SwarmConfig& cfg);
void step(SwarmState& state, const Objective& objective, const SwarmConfig& cfg);

struct Result {
    double best_position = 0.0;
    double best_fitness = 0.0;
    std::vector<double> trace;  ///< g_best fitness after init and after each step
    std::vector<double> trace_position;
    int evaluations = 0;
};

Result optimize(const Objective& objective, const SwarmConfig& cfg);

/// CSV with columns iteration,g_best,fitness.
std::string trace_csv(const Result& result);

}  // namespace heps::pso
