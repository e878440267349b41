#pragma once

#include <functional>

#include "mw/common.hpp"

namespace mw {

enum class OptStrategy { GridSimplex, Genetic };

struct OptimizerConfig {
    OptStrategy strategy = OptStrategy::GridSimplex;
    int grid_per_dim = 32;       // capped so the full grid stays <= grid_cap
    int grid_cap = 4096;
    int restarts = 8;            // simplex restarts from best grid cells
    int budget = 200000;         // max objective evaluations
    std::uint64_t seed = 1;
    double tolerance = 1e-6;     // simplex spread tolerance
    // genetic strategy
    int population = 64;
    int elite = 8;
    double mutation_sigma = 0.1;  // radians
    int generations = 200;
    int ga_restarts = 1;
    // known-good starting points injected into every restart population
    // (genetic) or used as extra simplex restarts (grid+simplex)
    std::vector<Eigen::VectorXd> seeds;

    void validate() const;
};

struct OptTraceEntry {
    Eigen::VectorXd point;
    double value = 0.0;
    std::string phase;  // "grid", "restart", "ga", "polish"
};

struct OptResult {
    Eigen::VectorXd argmin;
    double value = 0.0;
    bool converged = false;
    long long evaluations = 0;
    double grid_minimum = 0.0;  // sampled minimum before refinement
    std::vector<OptTraceEntry> trace;
};

// Minimizes a periodic objective over the box [0, 2pi)^dim. Every candidate
// is wrapped into the box before evaluation. Deterministic per seed; ties
// break toward the lexicographically smallest point.
OptResult minimize(const std::function<double(const Eigen::VectorXd&)>& objective, int dim,
                   const OptimizerConfig& cfg);

Eigen::VectorXd wrap_angles(const Eigen::VectorXd& v);

// Nelder-Mead on the wrapped objective, used as the local refinement stage.
OptResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                      const Eigen::VectorXd& start, double step, double tolerance, int max_evals);

}  // namespace mw
