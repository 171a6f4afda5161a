#include "btimc/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "btimc/error.hpp"
#include "btimc/parallel.hpp"

namespace btimc {

void Dataset::validate(const PartitionScheme& scheme) const {
    require(inputs.rows() >= 1, "dataset must contain at least one sample");
    require(inputs.rows() == outputs.rows(), "inputs and outputs differ in sample count");
    require(inputs.cols() == outputs.cols(), "inputs and outputs differ in dimension");
    require(dim() == scheme.dim(), "dataset dimension does not match the partition");
    require(std::isfinite(noise_std) && noise_std > 0.0, "noise standard deviation must be positive");
    require(outputs.allFinite(), "dataset outputs must be finite");
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        if (!scheme.domain().contains(inputs.row(i).transpose())) {
            fail(ErrorKind::OutOfDomain, "sample " + std::to_string(i) + " lies outside the domain");
        }
    }
}

std::size_t AggregatedDataset::total() const {
    return std::accumulate(multiplicity.begin(), multiplicity.end(), std::size_t{0});
}

AggregatedDataset aggregate(const Dataset& data, const PartitionScheme& scheme) {
    data.validate(scheme);
    const std::size_t n = data.dim();
    std::vector<CellId> sample_ids(data.size());
    std::map<CellId, std::size_t> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
        sample_ids[i] = scheme.encode(data.inputs.row(static_cast<Eigen::Index>(i)).transpose());
        rows.emplace(sample_ids[i], 0);
    }

    AggregatedDataset agg;
    agg.cells.reserve(rows.size());
    for (auto& [cell, row] : rows) {
        row = agg.cells.size();
        agg.cells.push_back(cell);
    }
    const auto m = static_cast<Eigen::Index>(agg.cells.size());
    agg.representatives.resize(m, static_cast<Eigen::Index>(n));
    agg.mean_outputs = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(n));
    agg.multiplicity.assign(agg.cells.size(), 0);
    agg.sample_cell.resize(data.size());

    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t row = rows.at(sample_ids[i]);
        agg.sample_cell[i] = row;
        agg.mean_outputs.row(static_cast<Eigen::Index>(row)) += data.outputs.row(static_cast<Eigen::Index>(i));
        ++agg.multiplicity[row];
    }
    for (std::size_t row = 0; row < agg.cells.size(); ++row) {
        const auto r = static_cast<Eigen::Index>(row);
        agg.mean_outputs.row(r) /= static_cast<double>(agg.multiplicity[row]);
        agg.representatives.row(r) = scheme.cell_center(agg.cells[row]).transpose();
    }
    return agg;
}

BtgpModel::BtgpModel(BtKernel kernel, double noise_std, Eigen::MatrixXd mean, Eigen::MatrixXd variance)
    : kernel_(std::move(kernel)), noise_std_(noise_std), mean_(std::move(mean)), variance_(std::move(variance)) {
    require(noise_std_ > 0.0, "noise standard deviation must be positive");
    require(static_cast<std::size_t>(mean_.rows()) == kernel_.scheme().cell_count(),
            "mean table must have one row per cell");
    require(mean_.rows() == variance_.rows() && mean_.cols() == variance_.cols(),
            "mean and variance tables differ in shape");
}

GaussianParams BtgpModel::predictive(CellId s, std::size_t d, bool with_noise) const {
    require(s.length() == scheme().precision(), "cell id precision mismatch");
    require(d < dim(), "output dimension out of range");
    const auto r = static_cast<Eigen::Index>(s.value());
    const auto c = static_cast<Eigen::Index>(d);
    GaussianParams p{mean_(r, c), variance_(r, c)};
    if (with_noise) p.variance += noise_std_ * noise_std_;
    return p;
}

GaussianParams BtgpModel::predictive(const StateRef& x, std::size_t d, bool with_noise) const {
    return predictive(scheme().encode(x), d, with_noise);
}

BtgpSystem::BtgpSystem(const Dataset& data, const BtKernel& kernel)
    : kernel_(kernel), agg_(aggregate(data, kernel.scheme())),
      noise_var_(data.noise_std * data.noise_std), samples_(data.size()) {
    const auto m = static_cast<Eigen::Index>(agg_.size());
    gram_.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_.eval(agg_.cells[static_cast<std::size_t>(i)],
                                          agg_.cells[static_cast<std::size_t>(j)]);
            gram_(i, j) = v;
            gram_(j, i) = v;
        }
    }
    Eigen::MatrixXd c = gram_;
    for (Eigen::Index i = 0; i < m; ++i) {
        c(i, i) += noise_var_ / static_cast<double>(agg_.multiplicity[static_cast<std::size_t>(i)]);
    }
    factor_.compute(c);
    if (factor_.info() != Eigen::Success) {
        c.diagonal().array() += 1e-10;
        factor_.compute(c);
        jittered_ = true;
        if (factor_.info() != Eigen::Success) {
            fail(ErrorKind::NumericalFailure, "Cholesky factorization failed after jitter");
        }
    }
}

Eigen::MatrixXd BtgpSystem::cross_kernel(std::uint64_t first, std::size_t count) const {
    const int q = kernel_.precision();
    Eigen::MatrixXd k(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(agg_.size()));
    for (std::size_t j = 0; j < agg_.size(); ++j) {
        for (std::size_t i = 0; i < count; ++i) {
            k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kernel_.eval(CellId(first + i, q), agg_.cells[j]);
        }
    }
    return k;
}

BtgpModel fit(const Dataset& data, const BtKernel& kernel, const FitOptions& options) {
    return fit(BtgpSystem(data, kernel), options);
}

BtgpModel fit(const BtgpSystem& system, const FitOptions& options) {
    const PartitionScheme& scheme = system.kernel().scheme();
    const std::size_t cells = scheme.cell_count();
    const auto n = static_cast<Eigen::Index>(scheme.dim());
    const double prior = system.kernel().cumulative(system.kernel().precision());

    const Eigen::MatrixXd weights = system.factor().solve(system.data().mean_outputs);
    Eigen::MatrixXd mean(static_cast<Eigen::Index>(cells), n);
    Eigen::MatrixXd variance(static_cast<Eigen::Index>(cells), n);

    const std::size_t blocks = (cells + kCellBlock - 1) / kCellBlock;
    parallel_for(blocks, options.threads, [&](std::size_t b) {
        const std::uint64_t first = b * kCellBlock;
        const std::size_t count = std::min(kCellBlock, cells - first);
        const Eigen::MatrixXd kx = system.cross_kernel(first, count);
        const auto rows = Eigen::seqN(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
        mean(rows, Eigen::all) = kx * weights;

        Eigen::MatrixXd v = kx.transpose();
        system.factor().matrixL().solveInPlace(v);
        const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
        for (std::size_t i = 0; i < count; ++i) {
            const double var = std::max(prior - reduction[static_cast<Eigen::Index>(i)],
                                        std::numeric_limits<double>::min());
            variance.row(static_cast<Eigen::Index>(first + i)).setConstant(var);
        }
    });
    return BtgpModel(system.kernel(), std::sqrt(system.noise_variance()), std::move(mean), std::move(variance));
}

}  // namespace btimc
