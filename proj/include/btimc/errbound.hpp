#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btimc/gp.hpp"
#include "btimc/kernel.hpp"

namespace btimc {

/// Which noise term enters eps_{d,1}.
enum class Eps1Branch { TermA, TermB, Min };

const char* to_string(Eps1Branch b);
Eps1Branch parse_eps1_branch(const std::string& s);

struct ErrorConfig {
    double delta = 0.2;
    std::vector<double> complexity;       ///< B_d, one per output dimension
    std::vector<SeKernel> true_kernels;   ///< kernel of the true dynamics, one per output dimension
    Eps1Branch branch = Eps1Branch::Min;
    /// Multiplies both eps_{d,1} terms by sigma_v. Off by default; the
    /// unscaled radicals assume unit-variance noise.
    bool noise_scaled = false;
    std::size_t dense_cap = 20000;        ///< largest N for the dense true-kernel path
    bool subsample = false;               ///< above the cap, bound a uniform subsample instead of failing
    std::uint64_t subsample_seed = 0;
    unsigned threads = 1;

    void validate(std::size_t dim) const;
};

/// Per-cell, per-dimension learning-error radii (rows ordered by cell id).
struct ErrorTable {
    Eigen::MatrixXd eps1;
    Eigen::MatrixXd eps2;
    Eigen::MatrixXd eps3;
    Eigen::MatrixXd total;
    double delta = 0.2;
    Eps1Branch branch = Eps1Branch::Min;
    /// 1 - kappa * n * delta with kappa = 2 under Eps1Branch::Min, else 1.
    double confidence = 0.0;
    /// Set when the bound was computed on a subsample of the data.
    bool heuristic = false;

    std::size_t cell_count() const { return static_cast<std::size_t>(total.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(total.cols()); }
};

double reported_confidence(double delta, std::size_t dim, Eps1Branch branch);

/// tr(Sigma), tr(Sigma^2) and the spectral norm of Sigma = K (K + s^2 I)^-1.
struct SigmaSpectrum {
    double trace = 0.0;
    double trace_sq = 0.0;
    double norm = 0.0;
};

/// Maps Gram eigenvalues lambda to those of Sigma, lambda / (lambda + s^2).
SigmaSpectrum sigma_spectrum_from_eigenvalues(const Eigen::VectorXd& gram_eigenvalues, double noise_variance);
/// Spectrum from the occupied-cell system: the nonzero eigenvalues of the
/// raw-data Gram matrix equal those of D^1/2 K D^1/2, D = diag(multiplicity).
SigmaSpectrum sigma_spectrum(const BtgpSystem& system);

/// sqrt(N + 2 sqrt(N log(1/delta)) + 2 log(1/delta)).
double eps1_term_a_radical(std::size_t n, double delta);
/// sqrt(tr S + 2 sqrt(tr S^2 log(1/delta)) + 2 ||S|| log(1/delta)).
double eps1_term_b_radical(const SigmaSpectrum& spectrum, double delta);

/// Precomputed state for evaluating the error radii of one model on one dataset.
class ErrorBound {
public:
    ErrorBound(const Dataset& data, const BtgpModel& model, ErrorConfig config);

    double eps1_term_a(CellId s, std::size_t d) const;
    double eps1_term_b(CellId s, std::size_t d) const;
    double eps1(CellId s, std::size_t d) const;
    double eps2(CellId s, std::size_t d) const;
    double eps3(CellId s, std::size_t d) const;

    ErrorTable table() const;

    const SigmaSpectrum& spectrum() const { return spectrum_; }
    const ErrorConfig& config() const { return config_; }
    bool heuristic() const { return heuristic_; }

private:
    struct Block;
    Block evaluate_block(std::uint64_t first, std::size_t count) const;

    ErrorConfig config_;
    Dataset data_;
    Eigen::MatrixXd inputs_t_;  ///< inputs, one sample per column
    BtgpModel model_;
    std::optional<BtgpSystem> system_;
    SigmaSpectrum spectrum_;
    std::vector<Eigen::MatrixXd> pair_gram_;  ///< P^T K_d P per output dimension
    bool heuristic_ = false;
};

ErrorTable error_table(const Dataset& data, const BtgpModel& model, const ErrorConfig& config);

}  // namespace btimc
