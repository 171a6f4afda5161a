#include "btimc/kernel.hpp"

#include <cmath>
#include <numeric>

#include "btimc/error.hpp"

namespace btimc {

BtKernel::BtKernel(PartitionScheme scheme)
    : BtKernel(scheme, std::vector<double>(static_cast<std::size_t>(scheme.precision()),
                                           1.0 / scheme.precision())) {}

BtKernel::BtKernel(PartitionScheme scheme, std::vector<double> weights)
    : scheme_(std::move(scheme)) {
    require(weights.size() == static_cast<std::size_t>(scheme_.precision()),
            "one weight per precision level is required");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, "kernel weights must be nonnegative");
        total += w;
    }
    require(total > 0.0, "kernel weights must not all be zero");
    input_ = weights;

    roots_.resize(weights.size());
    weights_.resize(weights.size());
    cumulative_.assign(weights.size() + 1, 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        roots_[i] = std::sqrt(weights[i] / total);
        weights_[i] = roots_[i] * roots_[i];
        cumulative_[i + 1] = cumulative_[i] + weights_[i];
    }
}

double BtKernel::eval(const StateRef& x, const StateRef& xp) const {
    return eval(scheme_.encode(x), scheme_.encode(xp));
}

std::vector<double> BtKernel::feature_map(const StateRef& x) const {
    const CellId s = scheme_.encode(x);
    std::vector<double> phi(feature_size(), 0.0);
    for (int level = 1; level <= precision(); ++level) {
        phi[feature_offset(level) + s.prefix(level).value()] =
            roots_[static_cast<std::size_t>(level - 1)];
    }
    return phi;
}

double rkhs_norm_bound(std::span<const std::vector<double>> coefficients,
                       std::span<const double> weights) {
    require(coefficients.size() == weights.size(), "one coefficient block per level is required");
    double total = 0.0;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        require(coefficients[i].size() == (std::size_t{1} << (i + 1)),
                "level i needs 2^i coefficients");
        double level = 0.0;
        for (double y : coefficients[i]) level += y * y;
        total += weights[i] * level;
    }
    return std::sqrt(total);
}

SeKernel::SeKernel(double amplitude_, Eigen::VectorXd lengthscales_)
    : amplitude(amplitude_), lengthscales(std::move(lengthscales_)) {
    require(amplitude > 0.0, "SE amplitude must be positive");
    require(lengthscales.size() >= 1, "SE kernel needs at least one lengthscale");
    require((lengthscales.array() > 0.0).all(), "SE lengthscales must be positive");
}

double SeKernel::eval(const StateRef& x, const StateRef& xp) const {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        const double z = (x[d] - xp[d]) / lengthscales[d];
        r2 += z * z;
    }
    return variance() * std::exp(-0.5 * r2);
}

double se_cell_inf(const StateRef& x_s, const StateBox& cell, const SeKernel& k) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < x_s.size(); ++d) {
        const double far = std::max(std::abs(x_s[d] - cell.lower[d]), std::abs(cell.upper[d] - x_s[d]));
        const double z = far / k.lengthscales[d];
        r2 += z * z;
    }
    return k.variance() * std::exp(-0.5 * r2);
}

}  // namespace btimc
