#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btimc/errbound.hpp"
#include "btimc/gp.hpp"
#include "btimc/partition.hpp"

namespace btimc {

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Variance used for the one-step Gaussian of the abstraction.
enum class TransitionVariance {
    Posterior,           ///< sigma_N^2(s)
    PosteriorPlusNoise,  ///< sigma_N^2(s) + sigma_v^2
    Noise,               ///< sigma_v^2
};

const char* to_string(TransitionVariance v);
TransitionVariance parse_transition_variance(const std::string& s);

/// prod_d [Phi((b_d - mu_d) / s_d) - Phi((a_d - mu_d) / s_d)]; bounds may be infinite.
double gauss_box_prob(const StateBox& box, const StateRef& mean, const StateRef& variance);

/// Range of P(a <= X <= b), X ~ N(mean + e, variance), over e in [-eps, eps].
/// The mass is unimodal in e with its peak where the shifted mean meets the
/// interval midpoint; the minimum sits on the endpoint farther from it.
Interval shifted_interval_prob(double a, double b, double mean, double variance, double eps);

struct TransitionQuery {
    StateBox destination;
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::VectorXd eps;
};

/// Lower and upper probability of landing in the destination box when each
/// mean component may shift by at most eps_d. Dimensions separate exactly.
Interval transition_bounds(const TransitionQuery& query);

/// Interval Markov chain over the 2^q cells with sparse bound rows.
///
/// Row s stores destinations in increasing id order. Destinations whose upper
/// bound falls below the prune threshold are dropped and their upper mass is
/// kept in `pruned` (and added to the upper reward bound). Mass leaving the
/// domain appears only through the loss bounds.
struct Imc {
    PartitionScheme scheme;
    CellId initial;
    std::vector<std::uint8_t> target;
    std::vector<std::size_t> row_start;
    std::vector<std::uint32_t> column;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> reward_lower;
    std::vector<double> reward_upper;
    std::vector<double> loss_lower;
    std::vector<double> loss_upper;
    std::vector<double> pruned;

    std::size_t state_count() const { return target.size(); }
    std::size_t transition_count() const { return column.size(); }
    std::size_t row_begin(std::size_t s) const { return row_start[s]; }
    std::size_t row_end(std::size_t s) const { return row_start[s + 1]; }

    /// Checks shapes and interval invariants; throws InvalidArgument.
    void validate() const;
};

struct AbstractionOptions {
    double prune_threshold = 1e-12;
    TransitionVariance variance = TransitionVariance::Posterior;
    unsigned threads = 1;
};

Imc build_imc(const BtgpModel& model, const ErrorTable& errors, std::span<const CellId> target,
              const StateRef& x_init, const AbstractionOptions& options = {});

/// Posterior of a model over continuous inputs.
class PosteriorField {
public:
    virtual ~PosteriorField() = default;
    virtual std::size_t dim() const = 0;
    /// Writes the per-dimension transition mean and variance at x.
    virtual void evaluate(const StateRef& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const = 0;
};

/// BTGP posterior seen as a function of x; constant on every cell.
class PiecewiseConstantPosterior final : public PosteriorField {
public:
    PiecewiseConstantPosterior(const BtgpModel& model, TransitionVariance variance);
    std::size_t dim() const override { return model_.dim(); }
    void evaluate(const StateRef& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const override;

private:
    const BtgpModel& model_;
    TransitionVariance mode_;
};

/// Continuous SE-kernel GP posterior (one exact GP per output dimension).
class SeGpPosterior final : public PosteriorField {
public:
    SeGpPosterior(const Dataset& data, std::vector<SeKernel> kernels, TransitionVariance variance);
    std::size_t dim() const override { return kernels_.size(); }
    void evaluate(const StateRef& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const override;

private:
    Eigen::MatrixXd inputs_t_;
    std::vector<SeKernel> kernels_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
    std::vector<Eigen::VectorXd> weights_;
    double noise_var_;
    TransitionVariance mode_;
};

struct ReferenceOptions {
    AbstractionOptions abstraction;
    int grid_per_axis = 5;
};

/// Baseline abstraction for a posterior that varies inside cells: every
/// bound is optimized over an m^n grid of states in the source cell on top of
/// the mean-shift optimization. An outer-approximation heuristic, kept for
/// timing comparisons.
Imc build_imc_continuous_reference(const PosteriorField& posterior, const ErrorTable& errors,
                                   const PartitionScheme& scheme, std::span<const CellId> target,
                                   const StateRef& x_init, const ReferenceOptions& options = {});

}  // namespace btimc
