#include "heps/pso.hpp"

#include "heps/io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace heps::pso {

void SwarmConfig::validate() const {
    if (n_particles < 2) throw std::invalid_argument("n_particles: must be >= 2");
    if (max_iter < 0) throw std::invalid_argument("max_iter: must be >= 0");
    if (!(vl_min > 0.0 && vl_min <= vl_max && vl_max <= 1.0)) {
        throw std::invalid_argument("vl_min/vl_max: need 0 < vl_min <= vl_max <= 1");
    }
    if (!(lower < upper)) throw std::invalid_argument("lower/upper: need lower < upper");
    if (!(c_zvs >= 0.0)) throw std::invalid_argument("c_zvs: must be >= 0");
}

double fitness(double p_loss, double n_zvs, double c_zvs, bool feasible) {
    if (!feasible) return kInfeasibleFitness;
    return p_loss + std::max(8.0 - n_zvs, 0.0) * c_zvs;
}

Distances evolutionary_factor(const std::vector<double>& positions, std::size_t best_index) {
    const std::size_t n = positions.size();
    if (n < 2) throw std::invalid_argument("evolutionary_factor: need at least 2 particles");
    if (best_index >= n) throw std::out_of_range("evolutionary_factor: best index out of range");
    Distances d;
    d.mean_distance.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) s += std::abs(positions[j] - positions[k]);
        }
        d.mean_distance[j] = s / static_cast<double>(n - 1);
    }
    const auto [mn, mx] = std::minmax_element(d.mean_distance.begin(), d.mean_distance.end());
    d.d_min = *mn;
    d.d_max = *mx;
    d.d_g = d.mean_distance[best_index];
    const double span = d.d_max - d.d_min;
    d.factor = span < 1e-12 ? 0.0 : std::clamp((d.d_g - d.d_min) / span, 0.0, 1.0);
    return d;
}

double velocity_limit(double f, const SwarmConfig& cfg) {
    const double range = cfg.upper - cfg.lower;
    const double a = 1.0 / cfg.vl_min - 1.0;
    if (a <= 0.0) return range;
    // a * exp(B f) with B = ln((1/vl_max - 1) / a), written with pow so that
    // vl_max = 1 stays finite.
    const double ratio = (1.0 / cfg.vl_max - 1.0) / a;
    return range / (1.0 + a * std::pow(ratio, f));
}

double inertia(int iteration, const SwarmConfig& cfg) {
    if (cfg.max_iter <= 1) return cfg.inertia_start;
    const double frac = static_cast<double>(iteration) / static_cast<double>(cfg.max_iter - 1);
    return cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * frac;
}

namespace {

void refresh_velocity_limit(SwarmState& s, const SwarmConfig& cfg) {
    std::vector<double> pos(s.particles.size());
    for (std::size_t j = 0; j < pos.size(); ++j) pos[j] = s.particles[j].position;
    Distances d = evolutionary_factor(pos, static_cast<std::size_t>(s.g_best_index));
    s.mean_distance = std::move(d.mean_distance);
    s.d_min = d.d_min;
    s.d_max = d.d_max;
    s.d_g = d.d_g;
    s.evolutionary_factor = d.factor;
    s.velocity_limit = velocity_limit(d.factor, cfg);
}

}  // namespace

SwarmState initialize(const Objective& objective, const SwarmConfig& cfg) {
    cfg.validate();
    SwarmState s;
    s.rng.seed(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double vl0 = velocity_limit(0.0, cfg);
    s.velocity_limit = vl0;
    s.particles.resize(static_cast<std::size_t>(cfg.n_particles));
    for (Particle& p : s.particles) {
        p.position = cfg.lower + (cfg.upper - cfg.lower) * unit(s.rng);
        p.velocity = -vl0 + 2.0 * vl0 * unit(s.rng);
    }
    for (std::size_t j = 0; j < s.particles.size(); ++j) {
        Particle& p = s.particles[j];
        p.best_position = p.position;
        p.best_fitness = objective(p.position);
        if (j == 0 || p.best_fitness < s.g_best_fitness) {
            s.g_best_fitness = p.best_fitness;
            s.g_best = p.position;
            s.g_best_index = static_cast<int>(j);
        }
    }
    s.mean_distance.assign(s.particles.size(), 0.0);
    return s;
}

void step(SwarmState& s, const Objective& objective, const SwarmConfig& cfg) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = inertia(s.iteration, cfg);
    const double vl = s.velocity_limit;
    for (Particle& p : s.particles) {
        p.r1 = unit(s.rng);
        p.r2 = unit(s.rng);
        double v = w * p.velocity + cfg.c1 * p.r1 * (p.best_position - p.position) +
                   cfg.c2 * p.r2 * (s.g_best - p.position);
        p.velocity = std::clamp(v, -vl, vl);
        p.position = std::clamp(p.position + p.velocity, cfg.lower, cfg.upper);
    }
    for (std::size_t j = 0; j < s.particles.size(); ++j) {
        Particle& p = s.particles[j];
        const double f = objective(p.position);
        if (f < p.best_fitness) {
            p.best_fitness = f;
            p.best_position = p.position;
        }
        if (p.best_fitness < s.g_best_fitness) {
            s.g_best_fitness = p.best_fitness;
            s.g_best = p.best_position;
            s.g_best_index = static_cast<int>(j);
        }
    }
    ++s.iteration;
    refresh_velocity_limit(s, cfg);
}

Result optimize(const Objective& objective, const SwarmConfig& cfg) {
    Result r;
    Objective counted = [&](double x) {
        ++r.evaluations;
        return objective(x);
    };
    SwarmState s = initialize(counted, cfg);
    r.trace.push_back(s.g_best_fitness);
    r.trace_position.push_back(s.g_best);
    for (int it = 0; it < cfg.max_iter; ++it) {
        step(s, counted, cfg);
        r.trace.push_back(s.g_best_fitness);
        r.trace_position.push_back(s.g_best);
    }
    r.best_position = s.g_best;
    r.best_fitness = s.g_best_fitness;
    return r;
}

std::string trace_csv(const Result& result) {
    CsvTable t;
    t.header = {"iteration", "g_best", "fitness"};
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
        t.rows.push_back({std::to_string(i), format_number(result.trace_position[i]), format_number(result.trace[i])});
    }
    return t.to_string();
}

}  // namespace heps::pso
