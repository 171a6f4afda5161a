#pragma once

#include <concepts>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "btimc/partition.hpp"

namespace btimc {

/// Binary-tree kernel: k(x, x') = sum_i w_i [prefix_i(x) == prefix_i(x')].
///
/// Weights are renormalized to sum to one. Each weight is stored as the square
/// of its root so that feature-map inner products reproduce kernel values
/// bit for bit.
class BtKernel {
public:
    BtKernel() = default;
    /// Uniform weights 1/q.
    explicit BtKernel(PartitionScheme scheme);
    BtKernel(PartitionScheme scheme, std::vector<double> weights);

    const PartitionScheme& scheme() const { return scheme_; }
    int precision() const { return scheme_.precision(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& root_weights() const { return roots_; }
    /// Weights as passed to the constructor, before renormalization.
    const std::vector<double>& input_weights() const { return input_; }

    /// Cumulative weight of the first l levels, l in [0, q].
    double cumulative(int l) const { return cumulative_[static_cast<std::size_t>(l)]; }

    double eval(const StateRef& x, const StateRef& xp) const;
    double eval(CellId a, CellId b) const { return cumulative(common_prefix_length(a, b)); }

    /// Explicit feature vector of length sum_{i=1..q} 2^i. The block of level i
    /// starts at offset 2^i - 2 and is indexed by the integer value of the
    /// level-i prefix.
    std::vector<double> feature_map(const StateRef& x) const;
    static std::size_t feature_offset(int level) { return (std::size_t{1} << level) - 2; }
    std::size_t feature_size() const { return feature_offset(precision() + 1); }

private:
    PartitionScheme scheme_;
    std::vector<double> input_;
    std::vector<double> weights_;
    std::vector<double> roots_;
    std::vector<double> cumulative_;
};

/// sqrt(sum_i w_i sum_{s in B^i} y_s^2): an upper bound on the RKHS norm of
/// f(x) = sum_i w_i sum_s y_s [x in cell_i(s)]. With sqrt(w_i) in place of
/// w_i the bound can fail (see the kernel tests for a counterexample).
/// coefficients[i-1] holds the 2^i coefficients of level i.
double rkhs_norm_bound(std::span<const std::vector<double>> coefficients,
                       std::span<const double> weights);

/// Squared-exponential kernel c^2 exp(-1/2 sum_d (x_d - x'_d)^2 / l_d^2).
struct SeKernel {
    double amplitude = 1.0;
    Eigen::VectorXd lengthscales;

    SeKernel() = default;
    SeKernel(double amplitude, Eigen::VectorXd lengthscales);

    double variance() const { return amplitude * amplitude; }
    double eval(const StateRef& x, const StateRef& xp) const;
};

/// Minimum of k(x_s, .) over `cell`, attained at the corner farthest from x_s.
double se_cell_inf(const StateRef& x_s, const StateBox& cell, const SeKernel& k);

template <typename K>
concept PointKernel = requires(const K& k, const Eigen::VectorXd& x) {
    { k.eval(x, x) } -> std::convertible_to<double>;
};

/// Dense Gram matrix of `points` (one state per row).
template <PointKernel K>
Eigen::MatrixXd gram(const Eigen::MatrixXd& points, const K& kernel) {
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = points.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel.eval(xi, points.row(j).transpose());
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

}  // namespace btimc
