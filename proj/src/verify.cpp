#include "btimc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "btimc/error.hpp"
#include "btimc/parallel.hpp"

namespace btimc {

InnerSolution solve_inner(const InnerProblem& problem, Sense sense) {
    constexpr std::uint64_t kRewardId = std::numeric_limits<std::uint64_t>::max() - 1;
    constexpr std::uint64_t kLossId = std::numeric_limits<std::uint64_t>::max();
    const std::size_t k = problem.successors.size();

    std::vector<Successor> items(problem.successors);
    items.push_back({kRewardId, problem.reward.lower, problem.reward.upper, 1.0});
    items.push_back({kLossId, problem.loss.lower, problem.loss.upper, 0.0});

    double sum_lower = 0.0;
    double sum_upper = 0.0;
    for (const Successor& it : items) {
        require(std::isfinite(it.lower) && std::isfinite(it.upper) && std::isfinite(it.value),
                "inner problem entries must be finite");
        require(it.lower >= 0.0 && it.lower <= it.upper, "inner problem interval must satisfy 0 <= lower <= upper");
        sum_lower += it.lower;
        sum_upper += it.upper;
    }
    if (sum_lower > 1.0 + kFeasibilityTolerance || sum_upper < 1.0 - kFeasibilityTolerance) {
        fail(ErrorKind::Infeasible, "inner problem bounds admit no distribution (sum of lower bounds " +
                                        std::to_string(sum_lower) + ", sum of upper bounds " +
                                        std::to_string(sum_upper) + ")");
    }

    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].value != items[b].value) {
            return sense == Sense::Max ? items[a].value > items[b].value : items[a].value < items[b].value;
        }
        return items[a].id < items[b].id;
    });

    std::vector<double> mass(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) mass[i] = items[i].lower;
    double remaining = 1.0 - sum_lower;
    for (std::size_t i : order) {
        if (remaining <= 0.0) break;
        const double add = std::min(items[i].upper - items[i].lower, remaining);
        mass[i] += add;
        remaining -= add;
    }

    InnerSolution sol;
    sol.successor_mass.assign(mass.begin(), mass.begin() + static_cast<std::ptrdiff_t>(k));
    sol.reward = mass[k];
    sol.loss = mass[k + 1];
    double objective = 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) objective += mass[i] * items[i].value;
    sol.objective = objective;
    return sol;
}

namespace {

struct Item {
    double value;
    double capacity;
};

/// Value gained by pouring `mass` into the items in sense order, each up to
/// its capacity. Weighted quickselect: expected linear time, and the result
/// equals the sorted greedy because ties share a value.
double pour(Item* items, std::size_t n, double mass, bool maximize) {
    double gain = 0.0;
    std::size_t lo = 0, hi = n;
    while (mass > 0.0 && lo < hi) {
        const double a = items[lo].value, b = items[lo + (hi - lo) / 2].value, c = items[hi - 1].value;
        const double pivot = std::max(std::min(a, b), std::min(std::max(a, b), c));
        const auto better = [&](double v) { return maximize ? v > pivot : v < pivot; };
        std::size_t lt = lo, i = lo, gt = hi;
        while (i < gt) {
            if (better(items[i].value)) {
                std::swap(items[lt++], items[i++]);
            } else if (items[i].value == pivot) {
                ++i;
            } else {
                std::swap(items[i], items[--gt]);
            }
        }
        double cap_better = 0.0;
        for (std::size_t j = lo; j < lt; ++j) cap_better += items[j].capacity;
        if (cap_better >= mass) {
            hi = lt;
            continue;
        }
        for (std::size_t j = lo; j < lt; ++j) gain += items[j].capacity * items[j].value;
        mass -= cap_better;
        double cap_equal = 0.0;
        for (std::size_t j = lt; j < gt; ++j) cap_equal += items[j].capacity;
        const double take = std::min(mass, cap_equal);
        gain += take * pivot;
        mass -= take;
        lo = gt;
    }
    return gain;
}

/// Rows restricted to non-target successors, with the per-row constants of
/// the Bellman step precomputed.
struct ReducedChain {
    std::vector<std::size_t> row_start;
    std::vector<std::uint32_t> column;
    std::vector<double> lower;
    std::vector<double> capacity;
    std::vector<double> free_mass;  ///< 1 - sum of all lower bounds
    std::vector<double> reward_capacity;
    std::vector<double> loss_capacity;
};

ReducedChain reduce(const Imc& imc) {
    const std::size_t s_count = imc.state_count();
    ReducedChain rc;
    rc.row_start.assign(s_count + 1, 0);
    rc.free_mass.assign(s_count, 0.0);
    rc.reward_capacity.assign(s_count, 0.0);
    rc.loss_capacity.assign(s_count, 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
        if (!imc.target[s]) {
            double sum_lower = imc.reward_lower[s] + imc.loss_lower[s];
            double sum_upper = imc.reward_upper[s] + imc.loss_upper[s];
            for (std::size_t k = imc.row_begin(s); k < imc.row_end(s); ++k) {
                if (imc.target[imc.column[k]]) continue;
                rc.column.push_back(imc.column[k]);
                rc.lower.push_back(imc.lower[k]);
                rc.capacity.push_back(imc.upper[k] - imc.lower[k]);
                sum_lower += imc.lower[k];
                sum_upper += imc.upper[k];
            }
            if (sum_lower > 1.0 + kFeasibilityTolerance || sum_upper < 1.0 - kFeasibilityTolerance) {
                fail(ErrorKind::Infeasible, "IMC row of cell " + CellId(s, imc.scheme.precision()).to_string() +
                                                " admits no distribution");
            }
            rc.free_mass[s] = std::max(0.0, 1.0 - sum_lower);
            rc.reward_capacity[s] = imc.reward_upper[s] - imc.reward_lower[s];
            rc.loss_capacity[s] = imc.loss_upper[s] - imc.loss_lower[s];
        }
        rc.row_start[s + 1] = rc.column.size();
    }
    return rc;
}

struct PassResult {
    std::vector<double> lower;
    std::vector<double> upper;
    std::uint64_t iterations = 0;
    double gap = 1.0;
    bool converged = false;
};

PassResult run_pass(const Imc& imc, const ReducedChain& rc, Sense sense, const IterationOptions& options) {
    const std::size_t n = imc.state_count();
    const bool maximize = sense == Sense::Max;
    PassResult r;
    r.lower.assign(n, 0.0);
    r.upper.assign(n, 1.0);
    for (std::size_t s = 0; s < n; ++s) {
        if (imc.target[s]) r.lower[s] = 1.0;
    }
    std::vector<double> next_lower(r.lower), next_upper(r.upper);

    const auto step = [&](std::size_t s, const std::vector<double>& v, std::vector<Item>& scratch) {
        const std::size_t b = rc.row_start[s], e = rc.row_start[s + 1];
        double base = imc.reward_lower[s];
        scratch.clear();
        for (std::size_t k = b; k < e; ++k) {
            const double value = v[rc.column[k]];
            base += rc.lower[k] * value;
            scratch.push_back({value, rc.capacity[k]});
        }
        scratch.push_back({1.0, rc.reward_capacity[s]});
        scratch.push_back({0.0, rc.loss_capacity[s]});
        const double out = base + pour(scratch.data(), scratch.size(), rc.free_mass[s], maximize);
        return std::clamp(out, 0.0, 1.0);
    };

    while (r.iterations < options.max_iters) {
        parallel_for(n, options.threads, [&](std::size_t s) {
            if (imc.target[s]) return;
            thread_local std::vector<Item> scratch;
            next_lower[s] = step(s, r.lower, scratch);
            next_upper[s] = step(s, r.upper, scratch);
        });
        r.lower.swap(next_lower);
        r.upper.swap(next_upper);
        ++r.iterations;
        double gap = 0.0;
        for (std::size_t s = 0; s < n; ++s) gap = std::max(gap, r.upper[s] - r.lower[s]);
        r.gap = gap;
        if (gap <= options.nu) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace

ValueBounds interval_iteration(const Imc& imc, const IterationOptions& options) {
    require(options.nu > 0.0, "nu must be positive");
    require(options.max_iters >= 1, "max_iters must be at least 1");
    require(imc.row_start.size() == imc.state_count() + 1, "IMC row index is malformed");
    const ReducedChain rc = reduce(imc);

    PassResult low = run_pass(imc, rc, Sense::Min, options);
    PassResult high = run_pass(imc, rc, Sense::Max, options);

    ValueBounds vb;
    vb.v_min = std::move(low.lower);
    vb.v_max = std::move(high.upper);
    for (std::size_t s = 0; s < imc.state_count(); ++s) {
        if (imc.target[s]) continue;
        const double inflated = std::min(1.0, vb.v_max[s] + imc.pruned[s]);
        vb.inflation = std::max(vb.inflation, inflated - vb.v_max[s]);
        vb.v_max[s] = inflated;
    }
    vb.iterations_min = low.iterations;
    vb.iterations_max = high.iterations;
    vb.gap_min = low.gap;
    vb.gap_max = high.gap;
    vb.converged = low.converged && high.converged;
    return vb;
}

Certificate certify(const Imc& imc, const StateRef& x_init, const ValueBounds& bounds, double confidence,
                    double nu) {
    require(bounds.v_min.size() == imc.state_count() && bounds.v_max.size() == imc.state_count(),
            "value bounds do not match the IMC");
    Certificate c;
    c.initial = imc.scheme.encode(x_init);
    c.v_min = bounds.v_min[c.initial.value()];
    c.v_max = bounds.v_max[c.initial.value()];
    c.confidence = confidence;
    c.nu = nu;
    c.iterations_min = bounds.iterations_min;
    c.iterations_max = bounds.iterations_max;
    c.gap = bounds.final_gap();
    c.inflation = bounds.inflation;
    c.converged = bounds.converged;
    return c;
}

}  // namespace btimc
