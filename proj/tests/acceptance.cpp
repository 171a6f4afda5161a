// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "btimc/abstraction.hpp"
#include "btimc/config.hpp"
#include "btimc/errbound.hpp"
#include "btimc/gp.hpp"
#include "btimc/io.hpp"
#include "btimc/kernel.hpp"
#include "btimc/pipeline.hpp"
#include "btimc/verify.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace btimc;
using testing_support::box;
using testing_support::square_scheme;
using testing_support::vec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineConfig case_study_config() {
    return config_from_tree(load_config_tree(fs::path(BTIMC_SOURCE_DIR) / "configs/casestudy.cfg"));
}

/// Average ranks (ties share the mean rank).
std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double chebyshev_to_box(const Eigen::VectorXd& x, const StateBox& b) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) d = std::max({d, b.lower[i] - x[i], x[i] - b.upper[i]});
    return d;
}

/// Finite SE-kernel expansion f(x) = sum_j a_j k(x, z_j) with its exact RKHS norm.
struct SeExpansion {
    SeKernel kernel;
    Eigen::MatrixXd centers;  // one per row
    Eigen::VectorXd coef;

    double operator()(const Eigen::VectorXd& x) const {
        double v = 0.0;
        for (Eigen::Index j = 0; j < centers.rows(); ++j) v += coef[j] * kernel.eval(centers.row(j).transpose(), x);
        return v;
    }
    double norm() const { return std::sqrt(coef.dot(gram(centers, kernel) * coef)); }
};

// 1. Case study --------------------------------------------------------------

Outcome case_study() {
    const PipelineConfig cfg = case_study_config();
    const PipelineResult r = run_pipeline(cfg, PipelineOptions{false, {}});
    const PartitionScheme scheme = make_scheme(cfg);
    double t_fit = 0, t_abs = 0, t_ver = 0;
    for (const auto& t : r.timings) {
        if (t.stage == "fit") t_fit = t.seconds;
        if (t.stage == "abstraction") t_abs = t.seconds;
        if (t.stage == "verify") t_ver = t.seconds;
    }
    bool inside_one = true;
    for (const CellId c : target_cells(cfg)) inside_one = inside_one && r.bounds.v_min[c.value()] == 1.0;
    bool ordered = true;
    std::vector<double> dist, vmin, dist_out, vmin_out;
    for (std::uint64_t v = 0; v < scheme.cell_count(); ++v) {
        ordered = ordered && r.bounds.v_min[v] <= r.bounds.v_max[v];
        const double d = chebyshev_to_box(scheme.cell_center(CellId(v, cfg.precision)), cfg.target);
        dist.push_back(d);
        vmin.push_back(r.bounds.v_min[v]);
        if (!r.imc.target[v]) {
            dist_out.push_back(d);
            vmin_out.push_back(r.bounds.v_min[v]);
        }
    }
    const double rho = spearman(dist, vmin);
    const double rho_out = spearman(dist_out, vmin_out);
    const double vmin_out_max = *std::max_element(vmin_out.begin(), vmin_out.end());
    const bool budget = t_fit <= 60 && t_abs <= 30 && t_ver <= 60;
    const bool pass = r.bounds.converged && inside_one && ordered && rho <= -0.8 && budget;
    return {pass, "converged=" + std::string(r.bounds.converged ? "yes" : "no") +
                      " target_vmin_1=" + (inside_one ? "yes" : "no") + " ordered=" + (ordered ? "yes" : "no") +
                      fmt(" spearman=%.4f", rho) + fmt(" (non-target %.4f,", rho_out) +
                      fmt(" max non-target V_min %.3g)", vmin_out_max) + fmt(" fit=%.1fs", t_fit) +
                      fmt(" abstraction=%.1fs", t_abs) + fmt(" verify=%.2fs", t_ver) +
                      fmt(" V_min(x_init)=%.3g", r.certificate.v_min) + fmt(" V_max(x_init)=%.3g", r.certificate.v_max)};
}

// 2. Speedup over the in-cell grid baseline ----------------------------------

Outcome speedup() {
    PipelineConfig cfg = case_study_config();
    cfg.precision = 6;
    cfg.samples = 1000;
    cfg.threads = cfg.errors.threads = cfg.abstraction.threads = 1;
    const Dataset data = acquire_dataset(cfg);
    const BtgpModel model = fit_stage(cfg, data);
    const ErrorTable errors = bound_stage(cfg, data, model);
    const auto target = target_cells(cfg);
    const SeGpPosterior field(data, cfg.errors.true_kernels, cfg.abstraction.variance);
    ReferenceOptions ro;
    ro.abstraction = cfg.abstraction;
    ro.grid_per_axis = 5;

    // best of three for both sides to damp scheduler noise
    double fast = 1e300, slow = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        const Imc a = build_imc(model, errors, target, cfg.x_init, cfg.abstraction);
        fast = std::min(fast, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        const Imc b = build_imc_continuous_reference(field, errors, make_scheme(cfg), target, cfg.x_init, ro);
        slow = std::min(slow, seconds_since(t0));
    }
    const double ratio = slow / fast;
    return {ratio >= 10.0, fmt("build_imc=%.3gs", fast) + fmt(" reference=%.3gs", slow) + fmt(" speedup=%.1fx", ratio)};
}

// 3. Inner solver ------------------------------------------------------------

Outcome inner_solver() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    int checked = 0;
    double worst = 0.0;
    while (checked < 10000) {
        const std::size_t k = 1 + rng() % 4;
        InnerProblem p;
        std::vector<oracle::LpItem> items;
        for (std::size_t i = 0; i < k; ++i) {
            double a = u(rng) * 0.5, b = u(rng) * 0.7;
            if (a > b) std::swap(a, b);
            const double v = rng() % 5 == 0 ? 0.25 : u(rng);
            p.successors.push_back({i, a, b, v});
            items.push_back({a, b, v});
        }
        const double r0 = u(rng) * 0.2, r1 = r0 + u(rng) * 0.3, l0 = u(rng) * 0.2, l1 = l0 + u(rng) * 0.4;
        p.reward = {r0, r1};
        p.loss = {l0, l1};
        items.push_back({r0, r1, 1.0});
        items.push_back({l0, l1, 0.0});
        double lo = r0 + l0, hi = r1 + l1;
        for (const auto& s : p.successors) {
            lo += s.lower;
            hi += s.upper;
        }
        if (lo > 1.0 || hi < 1.0) continue;
        ++checked;
        for (Sense sense : {Sense::Min, Sense::Max}) {
            const double got = solve_inner(p, sense).objective;
            worst = std::max(worst, std::abs(got - oracle::vertex_enumeration(items, sense == Sense::Max)));
        }
    }
    return {worst <= 1e-12, "instances=10000" + fmt(" max_abs_error=%.3g", worst)};
}

// 4. Transition bounds -------------------------------------------------------

Outcome transition_bounds_exact() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3, 3), w(0.05, 2.0), sd(0.1, 1.5), e(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        TransitionQuery q;
        Eigen::VectorXd lo(2), hi(2);
        for (int d = 0; d < 2; ++d) {
            lo[d] = u(rng);
            hi[d] = lo[d] + w(rng);
        }
        q.destination = StateBox::checked(lo, hi);
        q.mean = vec({u(rng), u(rng)});
        const Eigen::VectorXd s = vec({sd(rng), sd(rng)});
        q.variance = s.array().square();
        q.eps = vec({e(rng), e(rng)});
        double ref_lo = 1.0, ref_hi = 1.0;
        for (Eigen::Index d = 0; d < 2; ++d) {
            const auto [a, b] = oracle::search_shift(lo[d], hi[d], q.mean[d], s[d], q.eps[d]);
            ref_lo *= a;
            ref_hi *= b;
        }
        const Interval got = transition_bounds(q);
        worst = std::max({worst, std::abs(got.lower - ref_lo), std::abs(got.upper - ref_hi)});
    }
    return {worst <= 1e-6, "queries=1000" + fmt(" max_abs_error=%.3g", worst)};
}

// 5. Aggregation -------------------------------------------------------------

Outcome aggregation() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int q = 1 + trial % 4;
        const int dim = 1 + trial % 2;
        const PartitionScheme s = square_scheme(2, q, dim);
        const BtKernel k(s);
        const std::size_t n = 10 + rng() % 191;
        Dataset d;
        d.noise_std = 0.1 + 0.9 * std::abs(g(rng));
        d.inputs.resize(static_cast<Eigen::Index>(n), dim);
        d.outputs.resize(static_cast<Eigen::Index>(n), dim);
        for (Eigen::Index i = 0; i < d.inputs.rows(); ++i) {
            d.inputs.row(i) = testing_support::uniform_in(s.domain(), rng).transpose();
            for (int j = 0; j < dim; ++j) d.outputs(i, j) = std::sin(2 * d.inputs(i, j)) + d.noise_std * g(rng);
        }
        const BtgpModel m = fit(d, k);
        const oracle::BisectionBtKernel ref{s.domain().lower, s.domain().upper, k.weights()};
        Eigen::MatrixXd centers(static_cast<Eigen::Index>(s.cell_count()), dim);
        for (std::uint64_t v = 0; v < s.cell_count(); ++v) centers.row(static_cast<Eigen::Index>(v)) = s.cell_center(CellId(v, q)).transpose();
        const auto p = oracle::dense_posterior(d.inputs, d.outputs, d.noise_std * d.noise_std, centers, ref);
        worst = std::max(worst, (m.mean() - p.mean).cwiseAbs().maxCoeff());
        for (int j = 0; j < dim; ++j) worst = std::max(worst, (m.variance().col(j) - p.variance).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-8, "datasets=100" + fmt(" max_abs_error=%.3g", worst)};
}

// 6. Feature map -------------------------------------------------------------

Outcome feature_map() {
    std::mt19937_64 rng(6);
    const PartitionScheme s = square_scheme(10, 12);
    const BtKernel k(s, {5, 1, 4, 2, 3, 3, 2, 4, 1, 5, 1, 1});
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd a = testing_support::uniform_in(s.domain(), rng);
        const Eigen::VectorXd b = i % 2 ? testing_support::uniform_in(s.domain(), rng)
                                        : Eigen::VectorXd(a + 0.05 * (testing_support::uniform_in(s.domain(), rng) - a));
        const auto fa = k.feature_map(a), fb = k.feature_map(b);
        double dot = 0.0;
        for (std::size_t j = 0; j < fa.size(); ++j) dot += fa[j] * fb[j];
        mismatches += dot != k.eval(a, b);
    }
    double worst_ratio = 0.0;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd pts(50, 2);
        for (int i = 0; i < 50; ++i) pts.row(i) = testing_support::uniform_in(s.domain(), rng).transpose();
        const Eigen::MatrixXd K = gram(pts, k);
        const double min_ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        worst_ratio = std::min(worst_ratio, min_ev / K.norm());
    }
    const bool pass = mismatches == 0 && worst_ratio >= -1e-9;
    return {pass, "pairs=1000 mismatches=" + std::to_string(mismatches) +
                      fmt(" min_eigenvalue/||K||=%.3g over 20 sets of 50", worst_ratio)};
}

// 7. Verification oracle -----------------------------------------------------

Imc point_chain(const std::vector<std::vector<double>>& p, const std::vector<bool>& target) {
    const std::size_t n = p.size();
    int q = 0;
    while ((std::size_t{1} << q) < n) ++q;
    Imc imc;
    imc.scheme = square_scheme(1, q, 1);
    imc.initial = CellId(0, q);
    imc.row_start.push_back(0);
    for (std::size_t s = 0; s < n; ++s) {
        imc.target.push_back(target[s]);
        double total = 0, reward = 0;
        for (std::size_t t = 0; t < n; ++t) {
            total += p[s][t];
            if (p[s][t] == 0) continue;
            imc.column.push_back(static_cast<std::uint32_t>(t));
            imc.lower.push_back(p[s][t]);
            imc.upper.push_back(p[s][t]);
            if (target[t]) reward += p[s][t];
        }
        imc.row_start.push_back(imc.column.size());
        imc.reward_lower.push_back(reward);
        imc.reward_upper.push_back(reward);
        imc.loss_lower.push_back(std::max(0.0, 1 - total));
        imc.loss_upper.push_back(std::max(0.0, 1 - total));
        imc.pruned.push_back(0.0);
    }
    return imc;
}

Outcome verification() {
    const double nu = 1e-8;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> p(32, std::vector<double>(32, 0.0));
        for (auto& row : p) {
            double total = 0;
            for (double& x : row) {
                if (u(rng) < 0.15) {
                    x = u(rng);
                    total += x;
                }
            }
            const double keep = 1.0 - 0.3 * u(rng);
            if (total > 0) for (double& x : row) x *= keep / total;
        }
        std::vector<bool> target(32, false);
        for (int i = 0; i < 3; ++i) target[rng() % 32] = true;
        const ValueBounds b = interval_iteration(point_chain(p, target), IterationOptions{nu, 1'000'000, 1});
        const auto ref = oracle::value_iteration(p, target);
        for (std::size_t s = 0; s < 32; ++s) worst = std::max({worst, std::abs(b.v_min[s] - ref[s]), std::abs(b.v_max[s] - ref[s])});
    }
    const ValueBounds two = interval_iteration(point_chain({{0.25, 0.5}, {0.0, 1.0}}, {false, true}), IterationOptions{nu, 1'000'000, 1});
    const double err2 = std::max(std::abs(two.v_min[0] - 2.0 / 3.0), std::abs(two.v_max[0] - 2.0 / 3.0));
    return {worst <= 10 * nu && err2 <= nu,
            "chains=100" + fmt(" max_abs_error=%.3g", worst) + fmt(" two_state_error=%.3g", err2)};
}

// 8. Error-bound coverage ----------------------------------------------------

Outcome coverage() {
    const double delta = 0.1;
    const PartitionScheme s = square_scheme(2, 4);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<SeExpansion> f(2);
    for (int d = 0; d < 2; ++d) {
        f[static_cast<std::size_t>(d)].kernel = SeKernel(1.0, vec({1.0 + 0.5 * d, 1.5 - 0.5 * d}));
        f[static_cast<std::size_t>(d)].centers.resize(8, 2);
        f[static_cast<std::size_t>(d)].coef.resize(8);
        for (int j = 0; j < 8; ++j) {
            f[static_cast<std::size_t>(d)].centers.row(j) = testing_support::uniform_in(s.domain(), rng).transpose();
            f[static_cast<std::size_t>(d)].coef[j] = g(rng);
        }
    }
    ErrorConfig cfg;
    cfg.delta = delta;
    for (const auto& fd : f) {
        cfg.complexity.push_back(fd.norm());
        cfg.true_kernels.push_back(fd.kernel);
    }
    // 10x10 grid of every cell, precomputed once
    std::vector<std::vector<Eigen::Vector2d>> grid(s.cell_count());
    std::vector<std::vector<std::array<double, 2>>> truth(s.cell_count());
    for (std::uint64_t v = 0; v < s.cell_count(); ++v) {
        const StateBox b = s.cell_box(CellId(v, 4));
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) {
                const Eigen::Vector2d x(b.lower[0] + (i + 0.5) / 10 * (b.upper[0] - b.lower[0]),
                                        b.lower[1] + (j + 0.5) / 10 * (b.upper[1] - b.lower[1]));
                grid[v].push_back(x);
                truth[v].push_back({f[0](x), f[1](x)});
            }
    }
    int held = 0;
    double worst_ratio = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
        Dataset d;
        d.noise_std = 0.1;
        d.inputs.resize(500, 2);
        d.outputs.resize(500, 2);
        for (int i = 0; i < 500; ++i) {
            const Eigen::VectorXd x = testing_support::uniform_in(s.domain(), rng);
            d.inputs.row(i) = x.transpose();
            for (int k = 0; k < 2; ++k) d.outputs(i, k) = f[static_cast<std::size_t>(k)](x) + 0.1 * g(rng);
        }
        const BtgpModel m = fit(d, BtKernel(s));
        const ErrorTable t = error_table(d, m, cfg);
        bool ok = true;
        for (std::uint64_t v = 0; v < s.cell_count(); ++v) {
            for (std::size_t p = 0; p < grid[v].size(); ++p) {
                for (int k = 0; k < 2; ++k) {
                    const double dev = std::abs(m.mean()(static_cast<Eigen::Index>(v), k) - truth[v][p][static_cast<std::size_t>(k)]);
                    const double eps = t.total(static_cast<Eigen::Index>(v), k);
                    worst_ratio = std::max(worst_ratio, dev / eps);
                    ok = ok && dev <= eps;
                }
            }
        }
        held += ok;
    }
    const double rate = held / 200.0;
    const double need = 1.0 - 2 * 2 * delta;
    return {rate >= need, fmt("coverage=%.3f", rate) + fmt(" required=%.2f", need) +
                              fmt(" max deviation/eps=%.3f", worst_ratio)};
}

// 9. Soundness sandwich ------------------------------------------------------

constexpr int kSandwichSamples = 2000;

Outcome sandwich() {
    const double delta = 0.1, noise = 1.0, x0 = 8.8;
    const StateBox domain = box({-10}, {10});
    const StateBox target = box({-2.5}, {2.5});
    // near-linear contraction x' ~ 0.9 x as a finite SE expansion: least-squares
    // fit of 0.9 x on a 21-center grid with a wide kernel
    SeExpansion f;
    f.kernel = SeKernel(10.0, vec({6.0}));
    f.centers.resize(21, 1);
    for (int j = 0; j < 21; ++j) f.centers(j, 0) = -15.0 + 1.5 * j;
    {
        Eigen::MatrixXd a(401, 21);
        Eigen::VectorXd y(401);
        for (int i = 0; i < 401; ++i) {
            const double x = -10.0 + 0.05 * i;
            for (int j = 0; j < 21; ++j) a(i, j) = f.kernel.eval(vec({x}), f.centers.row(j).transpose());
            y[i] = 0.9 * x;
        }
        f.coef = (a.transpose() * a + 1e-6 * Eigen::MatrixXd::Identity(21, 21)).ldlt().solve(a.transpose() * y);
    }
    const double norm = f.norm();

    // ground truth by Monte Carlo: reach the target before leaving the domain
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, noise);
    const int runs = 1'000'000;
    // tabulate f on a fine grid; linear interpolation error is far below MC error
    std::vector<double> table(20001);
    for (int i = 0; i <= 20000; ++i) table[static_cast<std::size_t>(i)] = f(vec({-10.0 + 0.001 * i}));
    const auto fast_f = [&](double x) {
        const double t = (x + 10.0) / 0.001;
        const auto i = std::min<std::size_t>(19999, static_cast<std::size_t>(t));
        const double w = t - static_cast<double>(i);
        return (1 - w) * table[i] + w * table[i + 1];
    };
    long hits = 0;
    for (int r = 0; r < runs; ++r) {
        double x = x0;
        for (int step = 0; step < 10000; ++step) {
            if (x >= target.lower[0] && x <= target.upper[0]) {
                ++hits;
                break;
            }
            if (x < domain.lower[0] || x > domain.upper[0]) break;
            x = fast_f(x) + g(rng);
        }
    }
    const double p_mc = static_cast<double>(hits) / runs;

    const PartitionScheme s(domain, 6);
    ErrorConfig cfg;
    cfg.delta = delta;
    cfg.complexity = {norm};
    cfg.true_kernels = {f.kernel};
    AbstractionOptions ao;
    ao.variance = TransitionVariance::Noise;
    const auto cells = s.project_set(target);
    int held = 0;
    double lo_sum = 0, hi_sum = 0;
    Eigen::Vector3d eps_sum = Eigen::Vector3d::Zero();
    for (int draw = 0; draw < 50; ++draw) {
        Dataset d;
        d.noise_std = noise;
        d.inputs.resize(kSandwichSamples, 1);
        d.outputs.resize(kSandwichSamples, 1);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        for (int i = 0; i < kSandwichSamples; ++i) {
            d.inputs(i, 0) = u(rng);
            d.outputs(i, 0) = f(vec({d.inputs(i, 0)})) + g(rng);
        }
        const BtgpModel m = fit(d, BtKernel(s));
        const ErrorTable t = error_table(d, m, cfg);
        eps_sum += Eigen::Vector3d(t.eps1.mean(), t.eps2.mean(), t.eps3.mean());
        const Imc imc = build_imc(m, t, cells, vec({x0}), ao);
        const ValueBounds b = interval_iteration(imc);
        const Certificate c = certify(imc, vec({x0}), b, t.confidence, 1e-8);
        held += c.v_min <= p_mc && p_mc <= c.v_max;
        lo_sum += c.v_min;
        hi_sum += c.v_max;
    }
    const double rate = held / 50.0;
    return {rate >= 1.0 - 2 * delta, fmt("p_mc=%.4f", p_mc) + fmt(" mean[V_min,V_max]=[%.4f,", lo_sum / 50) +
                                         fmt("%.4f]", hi_sum / 50) + fmt(" containment=%.2f", rate) +
                                         fmt(" required=%.2f", 1.0 - 2 * delta) + fmt(" ||f||=%.3f", norm) +
                                         fmt(" mean eps1/eps2/eps3=%.3g/", eps_sum[0] / 50) +
                                         fmt("%.3g/", eps_sum[1] / 50) + fmt("%.3g", eps_sum[2] / 50)};
}

// 10. Determinism -------------------------------------------------------------

Outcome determinism() {
    std::vector<std::string> lines;
    for (const char* threads : {"1", "1", "8"}) {
        ConfigTree tree = load_config_tree(fs::path(BTIMC_SOURCE_DIR) / "configs/casestudy.cfg");
        set_config_value(tree, "partition.precision", "8");
        set_config_value(tree, "run.threads", threads);
        const PipelineResult r = run_pipeline(config_from_tree(tree), PipelineOptions{false, {}});
        lines.push_back(certificate_line(r.certificate) + "|" + values_to_text(r.bounds, r.imc.scheme));
    }
    const bool same_runs = lines[0] == lines[1];
    const bool same_threads = lines[0] == lines[2];
    return {same_runs && same_threads, std::string("repeat_identical=") + (same_runs ? "yes" : "no") +
                                           " threads_1_vs_8_identical=" + (same_threads ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 case-study reproduction", case_study},
        {"2 abstraction speedup", speedup},
        {"3 inner-solver exactness", inner_solver},
        {"4 transition-bound exactness", transition_bounds_exact},
        {"5 aggregation exactness", aggregation},
        {"6 feature-map identity", feature_map},
        {"7 verification oracle", verification},
        {"8 error-bound coverage", coverage},
        {"9 soundness sandwich", sandwich},
        {"10 determinism", determinism},
    };
    // optional filter: run only the criteria whose numbers are given
    std::vector<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const std::string number = name.substr(0, name.find(' '));
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failed;
}
