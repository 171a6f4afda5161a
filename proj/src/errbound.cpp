#include "btimc/errbound.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "btimc/error.hpp"
#include "btimc/parallel.hpp"

namespace btimc {

const char* to_string(Eps1Branch b) {
    switch (b) {
        case Eps1Branch::TermA: return "termA";
        case Eps1Branch::TermB: return "termB";
        case Eps1Branch::Min: return "min";
    }
    return "min";
}

Eps1Branch parse_eps1_branch(const std::string& s) {
    if (s == "termA") return Eps1Branch::TermA;
    if (s == "termB") return Eps1Branch::TermB;
    if (s == "min") return Eps1Branch::Min;
    fail(ErrorKind::InvalidArgument, "unknown eps1 branch '" + s + "' (expected termA, termB or min)");
}

void ErrorConfig::validate(std::size_t dim) const {
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(complexity.size() == dim, "one complexity bound per output dimension is required");
    require(true_kernels.size() == dim, "one true kernel per output dimension is required");
    for (double b : complexity) require(std::isfinite(b) && b >= 0.0, "complexity bounds must be nonnegative");
    for (const auto& k : true_kernels) {
        require(static_cast<std::size_t>(k.lengthscales.size()) == dim, "true kernel lengthscale count must equal the state dimension");
        require(k.amplitude > 0.0 && (k.lengthscales.array() > 0.0).all(), "true kernel hyperparameters must be positive");
    }
    require(dense_cap >= 1, "dense cap must be positive");
}

double reported_confidence(double delta, std::size_t dim, Eps1Branch branch) {
    const double kappa = branch == Eps1Branch::Min ? 2.0 : 1.0;
    return std::max(0.0, 1.0 - kappa * static_cast<double>(dim) * delta);
}

SigmaSpectrum sigma_spectrum_from_eigenvalues(const Eigen::VectorXd& gram_eigenvalues, double noise_variance) {
    SigmaSpectrum s;
    for (double lambda : gram_eigenvalues) {
        lambda = std::max(lambda, 0.0);
        const double mu = lambda / (lambda + noise_variance);
        s.trace += mu;
        s.trace_sq += mu * mu;
        s.norm = std::max(s.norm, mu);
    }
    return s;
}

SigmaSpectrum sigma_spectrum(const BtgpSystem& system) {
    const auto& m = system.data().multiplicity;
    Eigen::VectorXd root(static_cast<Eigen::Index>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) root[static_cast<Eigen::Index>(i)] = std::sqrt(static_cast<double>(m[i]));
    const Eigen::MatrixXd scaled = root.asDiagonal() * system.gram() * root.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "eigenvalue computation failed");
    return sigma_spectrum_from_eigenvalues(eig.eigenvalues(), system.noise_variance());
}

double eps1_term_a_radical(std::size_t n, double delta) {
    const double log_term = std::log(1.0 / delta);
    const double nn = static_cast<double>(n);
    return std::sqrt(nn + 2.0 * std::sqrt(nn * log_term) + 2.0 * log_term);
}

double eps1_term_b_radical(const SigmaSpectrum& spectrum, double delta) {
    const double log_term = std::log(1.0 / delta);
    return std::sqrt(spectrum.trace + 2.0 * std::sqrt(spectrum.trace_sq * log_term) +
                     2.0 * spectrum.norm * log_term);
}

namespace {

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.noise_std = data.noise_std;
    out.inputs.resize(static_cast<Eigen::Index>(count), data.inputs.cols());
    out.outputs.resize(static_cast<Eigen::Index>(count), data.outputs.cols());
    for (std::size_t i = 0; i < count; ++i) {
        out.inputs.row(static_cast<Eigen::Index>(i)) = data.inputs.row(static_cast<Eigen::Index>(idx[i]));
        out.outputs.row(static_cast<Eigen::Index>(i)) = data.outputs.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

/// c^2 - inf_{x in cell} k(x_s, x), evaluated without cancellation.
double se_cell_gap(const StateRef& x_s, const StateBox& cell, const SeKernel& k) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < x_s.size(); ++d) {
        const double far = std::max(std::abs(x_s[d] - cell.lower[d]), std::abs(cell.upper[d] - x_s[d]));
        const double z = far / k.lengthscales[d];
        r2 += z * z;
    }
    return -k.variance() * std::expm1(-0.5 * r2);
}

}  // namespace

struct ErrorBound::Block {
    Eigen::MatrixXd term_a;
    Eigen::MatrixXd term_b;
    Eigen::MatrixXd eps2;
    Eigen::MatrixXd eps3;
};

ErrorBound::ErrorBound(const Dataset& data, const BtgpModel& model, ErrorConfig config)
    : config_(std::move(config)), data_(data), model_(model) {
    config_.validate(model.dim());
    require(data.dim() == model.dim(), "dataset and model differ in dimension");
    require(data.noise_std == model.noise_std(), "dataset and model differ in noise level");
    if (data_.size() > config_.dense_cap) {
        if (!config_.subsample) {
            fail(ErrorKind::DataTooLarge,
                 "dataset has " + std::to_string(data_.size()) + " samples, above the dense cap of " +
                     std::to_string(config_.dense_cap) + "; enable subsampling to proceed");
        }
        data_ = subsample(data_, config_.dense_cap, config_.subsample_seed);
        model_ = fit(data_, model.kernel(), FitOptions{config_.threads});
        heuristic_ = true;
    }
    system_.emplace(data_, model_.kernel());
    inputs_t_ = data_.inputs.transpose();
    spectrum_ = sigma_spectrum(*system_);

    const std::size_t n = model_.dim();
    const auto cells = static_cast<Eigen::Index>(system_->data().size());
    const auto& owner = system_->data().sample_cell;
    pair_gram_.assign(n, Eigen::MatrixXd::Zero(cells, cells));
    parallel_for(n, config_.threads, [&](std::size_t d) {
        Eigen::MatrixXd& g = pair_gram_[d];
        const SeKernel& k = config_.true_kernels[d];
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const auto xi = inputs_t_.col(static_cast<Eigen::Index>(i));
            const auto ci = static_cast<Eigen::Index>(owner[i]);
            g(ci, ci) += k.variance();
            for (std::size_t j = 0; j < i; ++j) {
                const double v = k.eval(xi, inputs_t_.col(static_cast<Eigen::Index>(j)));
                const auto cj = static_cast<Eigen::Index>(owner[j]);
                g(ci, cj) += v;
                g(cj, ci) += v;
            }
        }
    });
}

ErrorBound::Block ErrorBound::evaluate_block(std::uint64_t first, std::size_t count) const {
    const BtgpSystem& sys = *system_;
    const PartitionScheme& scheme = model_.scheme();
    const std::size_t n = model_.dim();
    const auto b = static_cast<Eigen::Index>(count);
    const auto m = static_cast<Eigen::Index>(sys.data().size());
    const double sigma_v = data_.noise_std;
    const double scale = config_.noise_scaled ? sigma_v : 1.0;

    const Eigen::MatrixXd gamma = sys.factor().solve(sys.cross_kernel(first, count).transpose());
    Eigen::VectorXd inv_mult(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        inv_mult[j] = 1.0 / static_cast<double>(sys.data().multiplicity[static_cast<std::size_t>(j)]);
    }
    // Raw-data weights C_N^-1 k_N(s) are constant within a cell and equal gamma / m.
    const Eigen::MatrixXd beta = inv_mult.asDiagonal() * gamma;
    const Eigen::VectorXd alpha_norm = (gamma.array().square().colwise() * inv_mult.array()).colwise().sum().sqrt().transpose();

    const double radical_a = eps1_term_a_radical(data_.size(), config_.delta);
    const double radical_b = eps1_term_b_radical(spectrum_, config_.delta);

    Block out{Eigen::MatrixXd(b, static_cast<Eigen::Index>(n)), Eigen::MatrixXd(b, static_cast<Eigen::Index>(n)),
              Eigen::MatrixXd(b, static_cast<Eigen::Index>(n)), Eigen::MatrixXd(b, static_cast<Eigen::Index>(n))};

    std::vector<Eigen::VectorXd> centers(count);
    std::vector<StateBox> boxes(count);
    for (std::size_t i = 0; i < count; ++i) {
        const CellId s(first + i, scheme.precision());
        boxes[i] = scheme.cell_box(s);
        centers[i] = boxes[i].center();
    }

    for (std::size_t d = 0; d < n; ++d) {
        const auto dc = static_cast<Eigen::Index>(d);
        const SeKernel& k = config_.true_kernels[d];
        const double bound = config_.complexity[d];

        const Eigen::MatrixXd g_beta = pair_gram_[d] * beta;
        const Eigen::VectorXd quad = beta.cwiseProduct(g_beta).colwise().sum().transpose();

        for (std::size_t i = 0; i < count; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double var = model_.variance()(static_cast<Eigen::Index>(first + i), dc);
            out.term_a(r, dc) = scale * alpha_norm[r] * radical_a;
            out.term_b(r, dc) = scale * std::sqrt(var) / sigma_v * radical_b;
            out.eps2(r, dc) = bound * std::sqrt(2.0 * se_cell_gap(centers[i], boxes[i], k));

            // sum_i alpha_i k(x_i, x_s) with alpha constant on each occupied cell
            Eigen::VectorXd cell_sums = Eigen::VectorXd::Zero(m);
            for (std::size_t j = 0; j < data_.size(); ++j) {
                cell_sums[static_cast<Eigen::Index>(sys.data().sample_cell[j])] +=
                    k.eval(inputs_t_.col(static_cast<Eigen::Index>(j)), centers[i]);
            }
            const double linear = beta.col(r).dot(cell_sums);
            out.eps3(r, dc) = bound * std::sqrt(std::abs(quad[r] - 2.0 * linear + k.variance()));
        }
    }
    return out;
}

double ErrorBound::eps1_term_a(CellId s, std::size_t d) const {
    return evaluate_block(s.value(), 1).term_a(0, static_cast<Eigen::Index>(d));
}

double ErrorBound::eps1_term_b(CellId s, std::size_t d) const {
    return evaluate_block(s.value(), 1).term_b(0, static_cast<Eigen::Index>(d));
}

double ErrorBound::eps1(CellId s, std::size_t d) const {
    const Block blk = evaluate_block(s.value(), 1);
    const auto dc = static_cast<Eigen::Index>(d);
    switch (config_.branch) {
        case Eps1Branch::TermA: return blk.term_a(0, dc);
        case Eps1Branch::TermB: return blk.term_b(0, dc);
        case Eps1Branch::Min: break;
    }
    return std::min(blk.term_a(0, dc), blk.term_b(0, dc));
}

double ErrorBound::eps2(CellId s, std::size_t d) const {
    return evaluate_block(s.value(), 1).eps2(0, static_cast<Eigen::Index>(d));
}

double ErrorBound::eps3(CellId s, std::size_t d) const {
    return evaluate_block(s.value(), 1).eps3(0, static_cast<Eigen::Index>(d));
}

ErrorTable ErrorBound::table() const {
    const std::size_t cells = model_.cell_count();
    const auto n = static_cast<Eigen::Index>(model_.dim());
    const auto rows = static_cast<Eigen::Index>(cells);
    ErrorTable t{Eigen::MatrixXd(rows, n), Eigen::MatrixXd(rows, n), Eigen::MatrixXd(rows, n),
                 Eigen::MatrixXd(rows, n), config_.delta, config_.branch,
                 reported_confidence(config_.delta, model_.dim(), config_.branch), heuristic_};

    const std::size_t blocks = (cells + kCellBlock - 1) / kCellBlock;
    parallel_for(blocks, config_.threads, [&](std::size_t bi) {
        const std::uint64_t first = bi * kCellBlock;
        const std::size_t count = std::min(kCellBlock, cells - first);
        const Block blk = evaluate_block(first, count);
        const auto range = Eigen::seqN(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
        switch (config_.branch) {
            case Eps1Branch::TermA: t.eps1(range, Eigen::all) = blk.term_a; break;
            case Eps1Branch::TermB: t.eps1(range, Eigen::all) = blk.term_b; break;
            case Eps1Branch::Min: t.eps1(range, Eigen::all) = blk.term_a.cwiseMin(blk.term_b); break;
        }
        t.eps2(range, Eigen::all) = blk.eps2;
        t.eps3(range, Eigen::all) = blk.eps3;
    });
    t.total = t.eps1 + t.eps2 + t.eps3;
    return t;
}

ErrorTable error_table(const Dataset& data, const BtgpModel& model, const ErrorConfig& config) {
    return ErrorBound(data, model, config).table();
}

}  // namespace btimc
