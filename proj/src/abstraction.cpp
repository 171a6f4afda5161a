#include "btimc/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "btimc/error.hpp"
#include "btimc/normal.hpp"
#include "btimc/parallel.hpp"

namespace btimc {

const char* to_string(TransitionVariance v) {
    switch (v) {
        case TransitionVariance::Posterior: return "posterior";
        case TransitionVariance::PosteriorPlusNoise: return "posterior_plus_noise";
        case TransitionVariance::Noise: return "noise";
    }
    return "posterior";
}

TransitionVariance parse_transition_variance(const std::string& s) {
    if (s == "posterior") return TransitionVariance::Posterior;
    if (s == "posterior_plus_noise") return TransitionVariance::PosteriorPlusNoise;
    if (s == "noise") return TransitionVariance::Noise;
    fail(ErrorKind::InvalidArgument,
         "unknown transition variance '" + s + "' (expected posterior, posterior_plus_noise or noise)");
}

double gauss_box_prob(const StateBox& box, const StateRef& mean, const StateRef& variance) {
    require(box.dim() == static_cast<std::size_t>(mean.size()) && mean.size() == variance.size(),
            "box, mean and variance differ in dimension");
    double p = 1.0;
    for (Eigen::Index d = 0; d < mean.size(); ++d) {
        require(variance[d] > 0.0, "variance must be positive");
        const double s = std::sqrt(variance[d]);
        p *= normal_interval((box.lower[d] - mean[d]) / s, (box.upper[d] - mean[d]) / s);
    }
    return p;
}

Interval shifted_interval_prob(double a, double b, double mean, double variance, double eps) {
    const double s = std::sqrt(variance);
    const auto mass = [&](double e) { return normal_interval((a - mean - e) / s, (b - mean - e) / s); };
    if (eps <= 0.0) {
        const double p = mass(0.0);
        return {p, p};
    }
    double center;
    if (std::isinf(a) && std::isinf(b)) {
        center = 0.0;
    } else if (std::isinf(a)) {
        center = -std::numeric_limits<double>::infinity();
    } else if (std::isinf(b)) {
        center = std::numeric_limits<double>::infinity();
    } else {
        center = 0.5 * (a + b) - mean;
    }
    const double peak = std::clamp(center, -eps, eps);
    return {std::min(mass(-eps), mass(eps)), mass(peak)};
}

Interval transition_bounds(const TransitionQuery& q) {
    const Eigen::Index n = q.mean.size();
    require(q.destination.dim() == static_cast<std::size_t>(n) && q.variance.size() == n && q.eps.size() == n,
            "transition query dimensions differ");
    Interval out{1.0, 1.0};
    for (Eigen::Index d = 0; d < n; ++d) {
        require(q.variance[d] > 0.0, "transition variance must be positive");
        require(q.eps[d] >= 0.0, "error radius must be nonnegative");
        const Interval f = shifted_interval_prob(q.destination.lower[d], q.destination.upper[d], q.mean[d],
                                                 q.variance[d], q.eps[d]);
        out.lower *= f.lower;
        out.upper *= f.upper;
    }
    return out;
}

void Imc::validate() const {
    const std::size_t s = state_count();
    require(s == scheme.cell_count(), "IMC state count does not match the partition");
    require(initial.length() == scheme.precision(), "initial state precision mismatch");
    require(row_start.size() == s + 1 && row_start.front() == 0 && row_start.back() == column.size(),
            "IMC row index is malformed");
    require(lower.size() == column.size() && upper.size() == column.size(), "IMC bound arrays differ in size");
    for (const auto* v : {&reward_lower, &reward_upper, &loss_lower, &loss_upper, &pruned}) {
        require(v->size() == s, "IMC per-state arrays differ in size");
    }
    for (std::size_t r = 0; r < s; ++r) {
        require(row_start[r] <= row_start[r + 1], "IMC row index is not monotone");
        for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) {
            require(column[k] < s, "IMC destination out of range");
            require(k == row_start[r] || column[k - 1] < column[k], "IMC row destinations are not sorted");
            require(lower[k] >= 0.0 && lower[k] <= upper[k] && upper[k] <= 1.0, "IMC transition interval invalid");
        }
        require(reward_lower[r] >= 0.0 && reward_lower[r] <= reward_upper[r] && reward_upper[r] <= 1.0,
                "IMC reward interval invalid");
        require(loss_lower[r] >= 0.0 && loss_lower[r] <= loss_upper[r] && loss_upper[r] <= 1.0,
                "IMC loss interval invalid");
        require(pruned[r] >= 0.0, "IMC pruned mass negative");
    }
}

namespace {

struct RowData {
    std::vector<std::uint32_t> column;
    std::vector<double> lower;
    std::vector<double> upper;
    double reward_lower = 0.0;
    double reward_upper = 0.0;
    double loss_lower = 0.0;
    double loss_upper = 0.0;
    double pruned = 0.0;
};

/// Sparse row plus reward/loss bounds from dense per-destination bounds.
RowData assemble_row(const std::vector<double>& lo, const std::vector<double>& hi,
                     const std::vector<std::uint8_t>& target, double threshold) {
    RowData row;
    double sum_lower = 0.0;
    double sum_upper = 0.0;
    double target_lower = 0.0;
    double target_upper = 0.0;
    for (std::size_t c = 0; c < lo.size(); ++c) {
        sum_upper += hi[c];
        if (hi[c] < threshold) {
            row.pruned += hi[c];
            continue;
        }
        row.column.push_back(static_cast<std::uint32_t>(c));
        row.lower.push_back(lo[c]);
        row.upper.push_back(hi[c]);
        sum_lower += lo[c];
        if (target[c]) {
            target_lower += lo[c];
            target_upper += hi[c];
        }
    }
    row.reward_lower = target_lower;
    row.reward_upper = std::min(target_upper + row.pruned, 1.0);
    row.loss_upper = std::max(0.0, 1.0 - sum_lower);
    row.loss_lower = std::max(0.0, 1.0 - sum_upper);
    return row;
}

Imc collect(const PartitionScheme& scheme, CellId initial, std::vector<std::uint8_t> target,
            std::vector<RowData>& rows) {
    Imc imc;
    imc.scheme = scheme;
    imc.initial = initial;
    imc.target = std::move(target);
    const std::size_t s = rows.size();
    imc.row_start.assign(s + 1, 0);
    for (std::size_t r = 0; r < s; ++r) imc.row_start[r + 1] = imc.row_start[r] + rows[r].column.size();
    const std::size_t nnz = imc.row_start.back();
    imc.column.reserve(nnz);
    imc.lower.reserve(nnz);
    imc.upper.reserve(nnz);
    imc.reward_lower.resize(s);
    imc.reward_upper.resize(s);
    imc.loss_lower.resize(s);
    imc.loss_upper.resize(s);
    imc.pruned.resize(s);
    for (std::size_t r = 0; r < s; ++r) {
        RowData& row = rows[r];
        imc.column.insert(imc.column.end(), row.column.begin(), row.column.end());
        imc.lower.insert(imc.lower.end(), row.lower.begin(), row.lower.end());
        imc.upper.insert(imc.upper.end(), row.upper.begin(), row.upper.end());
        imc.reward_lower[r] = row.reward_lower;
        imc.reward_upper[r] = row.reward_upper;
        imc.loss_lower[r] = row.loss_lower;
        imc.loss_upper[r] = row.loss_upper;
        imc.pruned[r] = row.pruned;
        row = RowData{};
    }
    return imc;
}

std::vector<std::uint8_t> target_mask(const PartitionScheme& scheme, std::span<const CellId> target) {
    std::vector<std::uint8_t> mask(scheme.cell_count(), 0);
    for (CellId c : target) {
        if (c.length() != scheme.precision()) fail(ErrorKind::InconsistentScheme, "target cell precision mismatch");
        mask[c.value()] = 1;
    }
    return mask;
}

/// Per-dimension slice index of every cell, indexed [d][cell].
std::vector<std::vector<std::uint32_t>> slice_tables(const PartitionScheme& scheme) {
    std::vector<std::vector<std::uint32_t>> idx(scheme.dim(), std::vector<std::uint32_t>(scheme.cell_count()));
    for (std::uint64_t c = 0; c < scheme.cell_count(); ++c) {
        const auto g = scheme.grid_index(CellId(c, scheme.precision()));
        for (std::size_t d = 0; d < scheme.dim(); ++d) idx[d][c] = static_cast<std::uint32_t>(g[d]);
    }
    return idx;
}

/// Closed-form per-slice bounds along each dimension for one source.
void slice_bounds(const PartitionScheme& scheme, const Eigen::VectorXd& mean, const Eigen::VectorXd& variance,
                  const Eigen::VectorXd& eps, std::vector<std::vector<double>>& lo,
                  std::vector<std::vector<double>>& hi) {
    for (std::size_t d = 0; d < scheme.dim(); ++d) {
        const auto di = static_cast<Eigen::Index>(d);
        const int k = scheme.splits(d);
        const std::uint64_t slices = scheme.slices(d);
        lo[d].resize(slices);
        hi[d].resize(slices);
        for (std::uint64_t j = 0; j < slices; ++j) {
            const Interval f = shifted_interval_prob(scheme.slice_edge(d, j, k), scheme.slice_edge(d, j + 1, k),
                                                     mean[di], variance[di], eps[di]);
            lo[d][j] = f.lower;
            hi[d][j] = f.upper;
        }
    }
}

void check_consistency(const PartitionScheme& scheme, std::size_t dim, const ErrorTable& errors) {
    if (errors.cell_count() != scheme.cell_count() || errors.dim() != dim) {
        fail(ErrorKind::InconsistentScheme, "error table does not match the model partition");
    }
}

}  // namespace

Imc build_imc(const BtgpModel& model, const ErrorTable& errors, std::span<const CellId> target,
              const StateRef& x_init, const AbstractionOptions& options) {
    const PartitionScheme& scheme = model.scheme();
    check_consistency(scheme, model.dim(), errors);
    require(options.prune_threshold >= 0.0, "prune threshold must be nonnegative");
    auto mask = target_mask(scheme, target);
    const CellId initial = scheme.encode(x_init);
    const auto tables = slice_tables(scheme);
    const std::size_t cells = scheme.cell_count();
    const std::size_t n = scheme.dim();
    const double noise_var = model.noise_std() * model.noise_std();

    std::vector<RowData> rows(cells);
    parallel_for(cells, options.threads, [&](std::size_t src) {
        Eigen::VectorXd mean(static_cast<Eigen::Index>(n)), var(static_cast<Eigen::Index>(n)),
            eps(static_cast<Eigen::Index>(n));
        for (std::size_t d = 0; d < n; ++d) {
            const auto di = static_cast<Eigen::Index>(d);
            const auto si = static_cast<Eigen::Index>(src);
            mean[di] = model.mean()(si, di);
            switch (options.variance) {
                case TransitionVariance::Posterior: var[di] = model.variance()(si, di); break;
                case TransitionVariance::PosteriorPlusNoise: var[di] = model.variance()(si, di) + noise_var; break;
                case TransitionVariance::Noise: var[di] = noise_var; break;
            }
            eps[di] = errors.total(si, di);
        }
        std::vector<std::vector<double>> lo(n), hi(n);
        slice_bounds(scheme, mean, var, eps, lo, hi);

        std::vector<double> dense_lo(cells), dense_hi(cells);
        for (std::size_t c = 0; c < cells; ++c) {
            double l = 1.0, u = 1.0;
            for (std::size_t d = 0; d < n; ++d) {
                l *= lo[d][tables[d][c]];
                u *= hi[d][tables[d][c]];
            }
            dense_lo[c] = l;
            dense_hi[c] = u;
        }
        rows[src] = assemble_row(dense_lo, dense_hi, mask, options.prune_threshold);
    });
    return collect(scheme, initial, std::move(mask), rows);
}

PiecewiseConstantPosterior::PiecewiseConstantPosterior(const BtgpModel& model, TransitionVariance variance)
    : model_(model), mode_(variance) {}

void PiecewiseConstantPosterior::evaluate(const StateRef& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
    const CellId s = model_.scheme().encode(x);
    const auto row = static_cast<Eigen::Index>(s.value());
    const double noise_var = model_.noise_std() * model_.noise_std();
    mean = model_.mean().row(row).transpose();
    variance = model_.variance().row(row).transpose();
    if (mode_ == TransitionVariance::PosteriorPlusNoise) variance.array() += noise_var;
    if (mode_ == TransitionVariance::Noise) variance.setConstant(noise_var);
}

SeGpPosterior::SeGpPosterior(const Dataset& data, std::vector<SeKernel> kernels, TransitionVariance variance)
    : inputs_t_(data.inputs.transpose()), kernels_(std::move(kernels)),
      noise_var_(data.noise_std * data.noise_std), mode_(variance) {
    require(kernels_.size() == data.dim(), "one SE kernel per output dimension is required");
    require(data.size() >= 1 && data.noise_std > 0.0, "SE GP needs data and positive noise");
    for (std::size_t d = 0; d < kernels_.size(); ++d) {
        Eigen::MatrixXd c = gram(data.inputs, kernels_[d]);
        c.diagonal().array() += noise_var_;
        factors_.emplace_back(c);
        if (factors_.back().info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "SE GP factorization failed");
        weights_.push_back(factors_.back().solve(data.outputs.col(static_cast<Eigen::Index>(d))));
    }
}

void SeGpPosterior::evaluate(const StateRef& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
    const auto n = static_cast<Eigen::Index>(kernels_.size());
    mean.resize(n);
    variance.resize(n);
    Eigen::VectorXd kx(inputs_t_.cols());
    for (Eigen::Index d = 0; d < n; ++d) {
        const SeKernel& k = kernels_[static_cast<std::size_t>(d)];
        for (Eigen::Index i = 0; i < inputs_t_.cols(); ++i) kx[i] = k.eval(inputs_t_.col(i), x);
        mean[d] = kx.dot(weights_[static_cast<std::size_t>(d)]);
        const Eigen::VectorXd v = factors_[static_cast<std::size_t>(d)].matrixL().solve(kx);
        const double post = std::max(k.variance() - v.squaredNorm(), std::numeric_limits<double>::min());
        switch (mode_) {
            case TransitionVariance::Posterior: variance[d] = post; break;
            case TransitionVariance::PosteriorPlusNoise: variance[d] = post + noise_var_; break;
            case TransitionVariance::Noise: variance[d] = noise_var_; break;
        }
    }
}

Imc build_imc_continuous_reference(const PosteriorField& posterior, const ErrorTable& errors,
                                   const PartitionScheme& scheme, std::span<const CellId> target,
                                   const StateRef& x_init, const ReferenceOptions& options) {
    check_consistency(scheme, posterior.dim(), errors);
    require(options.grid_per_axis >= 1, "grid must have at least one point per axis");
    auto mask = target_mask(scheme, target);
    const CellId initial = scheme.encode(x_init);
    const auto tables = slice_tables(scheme);
    const std::size_t cells = scheme.cell_count();
    const std::size_t n = scheme.dim();
    const auto m = static_cast<std::size_t>(options.grid_per_axis);
    std::size_t points = 1;
    for (std::size_t d = 0; d < n; ++d) points *= m;

    std::vector<RowData> rows(cells);
    parallel_for(cells, options.abstraction.threads, [&](std::size_t src) {
        const StateBox box = scheme.cell_box(CellId(src, scheme.precision()));
        Eigen::VectorXd eps = errors.total.row(static_cast<Eigen::Index>(src)).transpose();
        std::vector<double> dense_lo(cells, std::numeric_limits<double>::infinity());
        std::vector<double> dense_hi(cells, 0.0);
        std::vector<std::vector<double>> lo(n), hi(n);
        Eigen::VectorXd x(static_cast<Eigen::Index>(n)), mean, var;

        for (std::size_t p = 0; p < points; ++p) {
            std::size_t rest = p;
            for (std::size_t d = 0; d < n; ++d) {
                const auto di = static_cast<Eigen::Index>(d);
                const double frac = (static_cast<double>(rest % m) + 0.5) / static_cast<double>(m);
                rest /= m;
                x[di] = box.lower[di] + frac * (box.upper[di] - box.lower[di]);
            }
            posterior.evaluate(x, mean, var);
            slice_bounds(scheme, mean, var, eps, lo, hi);
            for (std::size_t c = 0; c < cells; ++c) {
                double l = 1.0, u = 1.0;
                for (std::size_t d = 0; d < n; ++d) {
                    l *= lo[d][tables[d][c]];
                    u *= hi[d][tables[d][c]];
                }
                dense_lo[c] = std::min(dense_lo[c], l);
                dense_hi[c] = std::max(dense_hi[c], u);
            }
        }
        rows[src] = assemble_row(dense_lo, dense_hi, mask, options.abstraction.prune_threshold);
    });
    return collect(scheme, initial, std::move(mask), rows);
}

}  // namespace btimc
