#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "btimc/kernel.hpp"
#include "btimc/partition.hpp"

namespace btimc {

/// Raw samples y_i = f(x_i) + v_i, one sample per row.
struct Dataset {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd outputs;
    double noise_std = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }

    /// Throws InvalidArgument on shape or noise errors, OutOfDomain when an
    /// input lies outside the scheme's domain.
    void validate(const PartitionScheme& scheme) const;
};

/// Samples compressed to one entry per occupied cell, sorted by cell id.
struct AggregatedDataset {
    std::vector<CellId> cells;
    Eigen::MatrixXd representatives;  // cell centers, one per row
    Eigen::MatrixXd mean_outputs;     // per-cell average of y
    std::vector<std::size_t> multiplicity;
    std::vector<std::size_t> sample_cell;  // row of `cells` holding raw sample i

    std::size_t size() const { return cells.size(); }
    std::size_t total() const;
};

AggregatedDataset aggregate(const Dataset& data, const PartitionScheme& scheme);

struct GaussianParams {
    double mean = 0.0;
    double variance = 1.0;
};

/// Fitted BTGP: per-dimension posterior mean and variance tables over all
/// 2^q cells, rows ordered by integer cell id.
class BtgpModel {
public:
    BtgpModel() = default;
    BtgpModel(BtKernel kernel, double noise_std, Eigen::MatrixXd mean, Eigen::MatrixXd variance);

    const BtKernel& kernel() const { return kernel_; }
    const PartitionScheme& scheme() const { return kernel_.scheme(); }
    double noise_std() const { return noise_std_; }
    std::size_t dim() const { return static_cast<std::size_t>(mean_.cols()); }
    std::size_t cell_count() const { return static_cast<std::size_t>(mean_.rows()); }

    const Eigen::MatrixXd& mean() const { return mean_; }
    const Eigen::MatrixXd& variance() const { return variance_; }

    /// Posterior (mean, variance) of output dimension d on cell s; the
    /// process-noise variance is added when `with_noise` is set.
    GaussianParams predictive(CellId s, std::size_t d, bool with_noise = false) const;
    GaussianParams predictive(const StateRef& x, std::size_t d, bool with_noise = false) const;

private:
    BtKernel kernel_;
    double noise_std_ = 1.0;
    Eigen::MatrixXd mean_;
    Eigen::MatrixXd variance_;
};

/// The aggregated regression problem: occupied-cell Gram matrix K and the
/// Cholesky factor of K + sigma_v^2 diag(1/m). Identical posterior to the
/// raw-data problem because BT kernel columns coincide within a cell.
class BtgpSystem {
public:
    BtgpSystem(const Dataset& data, const BtKernel& kernel);

    const BtKernel& kernel() const { return kernel_; }
    const AggregatedDataset& data() const { return agg_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::LLT<Eigen::MatrixXd>& factor() const { return factor_; }
    double noise_variance() const { return noise_var_; }
    std::size_t samples() const { return samples_; }
    bool jittered() const { return jittered_; }

    /// BT kernel between cells [first, first + count) and the occupied cells
    /// (count x M).
    Eigen::MatrixXd cross_kernel(std::uint64_t first, std::size_t count) const;

private:
    BtKernel kernel_;
    AggregatedDataset agg_;
    Eigen::MatrixXd gram_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    double noise_var_ = 1.0;
    std::size_t samples_ = 0;
    bool jittered_ = false;
};

struct FitOptions {
    unsigned threads = 1;
};

/// Cells are processed in fixed blocks of this many ids, independent of the
/// thread count.
inline constexpr std::size_t kCellBlock = 256;

BtgpModel fit(const Dataset& data, const BtKernel& kernel, const FitOptions& options = {});
BtgpModel fit(const BtgpSystem& system, const FitOptions& options = {});

}  // namespace btimc
