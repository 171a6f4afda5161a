#pragma once

#include <cstdint>
#include <vector>

#include "btimc/abstraction.hpp"

namespace btimc {

enum class Sense { Min, Max };

struct Successor {
    std::uint64_t id = 0;
    double lower = 0.0;
    double upper = 0.0;
    double value = 0.0;
};

/// One state's Bellman step: choose a distribution over the successors, the
/// reward pseudo-state (value 1) and the loss pseudo-state (value 0) within
/// their interval bounds, summing to one.
struct InnerProblem {
    std::vector<Successor> successors;
    Interval reward{0.0, 0.0};
    Interval loss{0.0, 0.0};
};

struct InnerSolution {
    double objective = 0.0;
    std::vector<double> successor_mass;  ///< aligned with InnerProblem::successors
    double reward = 0.0;
    double loss = 0.0;
};

/// Absolute slack accepted on the simplex constraint before Infeasible.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Exact optimum of the box-constrained simplex by sorted greedy assignment.
/// Ties are broken by ascending successor id (reward and loss sort after all
/// cells). Throws Infeasible when no distribution meets the bounds.
InnerSolution solve_inner(const InnerProblem& problem, Sense sense);

struct IterationOptions {
    double nu = 1e-8;
    std::uint64_t max_iters = 1'000'000;
    unsigned threads = 1;
};

struct ValueBounds {
    std::vector<double> v_min;
    std::vector<double> v_max;
    std::uint64_t iterations_min = 0;
    std::uint64_t iterations_max = 0;
    double gap_min = 0.0;    ///< final envelope gap of the min pass
    double gap_max = 0.0;    ///< final envelope gap of the max pass
    double inflation = 0.0;  ///< largest increase of V_max caused by pruned mass
    bool converged = false;

    double final_gap() const { return gap_min > gap_max ? gap_min : gap_max; }
};

/// Two-envelope value iteration. The min pass yields V_min from its lower
/// envelope, the max pass yields V_max from its upper envelope. Target cells
/// are absorbing with value 1; their mass enters every row through the reward
/// bounds. Updates are synchronous, so results do not depend on the thread
/// count. Non-convergence is reported through `converged`, not thrown.
ValueBounds interval_iteration(const Imc& imc, const IterationOptions& options = {});

struct Certificate {
    CellId initial;
    double v_min = 0.0;
    double v_max = 1.0;
    double confidence = 0.0;
    double nu = 0.0;
    std::uint64_t iterations_min = 0;
    std::uint64_t iterations_max = 0;
    double gap = 0.0;
    double inflation = 0.0;
    bool converged = false;
};

Certificate certify(const Imc& imc, const StateRef& x_init, const ValueBounds& bounds, double confidence,
                    double nu);

}  // namespace btimc
