#include <doctest.h>

#include <cmath>
#include <random>

#include "btimc/error.hpp"
#include "btimc/verify.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace btimc;
using testing_support::square_scheme;
using testing_support::vec;

namespace {

using Dense = std::vector<std::vector<double>>;

/// IMC over a 1-D scheme from dense per-destination bounds; reward and loss
/// bounds follow the row-sum construction.
Imc dense_imc(const Dense& lo, const Dense& hi, const std::vector<bool>& target) {
    const std::size_t n = lo.size();
    int q = 0;
    while ((std::size_t{1} << q) < n) ++q;
    Imc imc;
    imc.scheme = square_scheme(1, q, 1);
    imc.initial = CellId(0, q);
    imc.target.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) imc.target[s] = target[s];
    imc.row_start.push_back(0);
    for (std::size_t s = 0; s < n; ++s) {
        double sl = 0, su = 0, tl = 0, tu = 0;
        for (std::size_t t = 0; t < n; ++t) {
            sl += lo[s][t];
            su += hi[s][t];
            if (hi[s][t] == 0.0) continue;
            imc.column.push_back(static_cast<std::uint32_t>(t));
            imc.lower.push_back(lo[s][t]);
            imc.upper.push_back(hi[s][t]);
            if (target[t]) {
                tl += lo[s][t];
                tu += hi[s][t];
            }
        }
        imc.row_start.push_back(imc.column.size());
        imc.reward_lower.push_back(tl);
        imc.reward_upper.push_back(std::min(tu, 1.0));
        imc.loss_upper.push_back(std::max(0.0, 1.0 - sl));
        imc.loss_lower.push_back(std::max(0.0, 1.0 - su));
        imc.pruned.push_back(0.0);
    }
    imc.validate();
    return imc;
}

Imc point_imc(const Dense& p, const std::vector<bool>& target) { return dense_imc(p, p, target); }

Dense random_chain(std::size_t n, std::mt19937_64& rng, double loss_max = 0.3) {
    std::uniform_real_distribution<double> u(0, 1);
    Dense p(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        double total = 0;
        for (std::size_t t = 0; t < n; ++t) {
            if (u(rng) < 0.2) {
                p[s][t] = u(rng);
                total += p[s][t];
            }
        }
        const double keep = 1.0 - loss_max * u(rng);
        if (total > 0) for (double& x : p[s]) x *= keep / total;
    }
    return p;
}

}  // namespace

TEST_CASE("inner problem example") {
    InnerProblem p;
    p.successors = {{1, 0.2, 0.8, 0.9}, {2, 0.2, 0.8, 0.1}};
    const InnerSolution hi = solve_inner(p, Sense::Max);
    const InnerSolution lo = solve_inner(p, Sense::Min);
    CHECK(hi.objective == doctest::Approx(0.74).epsilon(1e-15));
    CHECK(lo.objective == doctest::Approx(0.26).epsilon(1e-15));
    CHECK(hi.successor_mass[0] == doctest::Approx(0.8));
    CHECK(lo.successor_mass[1] == doctest::Approx(0.8));
    CHECK(hi.reward == 0.0);
    CHECK(hi.loss == 0.0);
}

TEST_CASE("point intervals make the sense irrelevant") {
    InnerProblem p;
    p.successors = {{4, 0.3, 0.3, 0.2}, {9, 0.1, 0.1, 0.7}};
    p.reward = {0.25, 0.25};
    p.loss = {0.35, 0.35};
    CHECK(solve_inner(p, Sense::Max).objective == solve_inner(p, Sense::Min).objective);
    CHECK(solve_inner(p, Sense::Max).objective == doctest::Approx(0.25 + 0.06 + 0.07).epsilon(1e-15));
}

TEST_CASE("greedy agrees with vertex enumeration") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    int checked = 0;
    while (checked < 2000) {
        const std::size_t k = 1 + rng() % 4;
        InnerProblem p;
        std::vector<oracle::LpItem> items;
        for (std::size_t i = 0; i < k; ++i) {
            double a = u(rng) * 0.5, b = u(rng) * 0.6;
            if (a > b) std::swap(a, b);
            const double v = (rng() % 4 == 0) ? 0.5 : u(rng);  // some ties
            p.successors.push_back({i, a, b, v});
            items.push_back({a, b, v});
        }
        double r0 = u(rng) * 0.2, r1 = r0 + u(rng) * 0.3, l0 = u(rng) * 0.2, l1 = l0 + u(rng) * 0.4;
        p.reward = {r0, r1};
        p.loss = {l0, l1};
        items.push_back({r0, r1, 1.0});
        items.push_back({l0, l1, 0.0});
        double lower = r0 + l0, upper = r1 + l1;
        for (const auto& s : p.successors) {
            lower += s.lower;
            upper += s.upper;
        }
        if (lower > 1.0 || upper < 1.0) continue;
        ++checked;
        for (Sense sense : {Sense::Min, Sense::Max}) {
            const InnerSolution sol = solve_inner(p, sense);
            CHECK(std::abs(sol.objective - oracle::vertex_enumeration(items, sense == Sense::Max)) <= 1e-12);
            double mass = sol.reward + sol.loss, obj = sol.reward;
            for (std::size_t i = 0; i < k; ++i) {
                CHECK(sol.successor_mass[i] >= p.successors[i].lower - 1e-15);
                CHECK(sol.successor_mass[i] <= p.successors[i].upper + 1e-15);
                mass += sol.successor_mass[i];
                obj += sol.successor_mass[i] * p.successors[i].value;
            }
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(obj == doctest::Approx(sol.objective).epsilon(1e-12));
        }
    }
}

TEST_CASE("infeasible inner problems are rejected") {
    InnerProblem over;
    over.successors = {{0, 0.6, 0.7, 0.1}, {1, 0.6, 0.7, 0.2}};
    InnerProblem under;
    under.successors = {{0, 0.1, 0.2, 0.1}};
    under.loss = {0.0, 0.3};
    for (const InnerProblem* p : {&over, &under}) {
        try {
            solve_inner(*p, Sense::Min);
            FAIL("expected Infeasible");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Infeasible);
        }
    }
}

TEST_CASE("two-state geometric chain") {
    const Dense p{{0.25, 0.5}, {0.0, 1.0}};
    const Imc imc = point_imc(p, {false, true});
    IterationOptions opt;
    const ValueBounds b = interval_iteration(imc, opt);
    CHECK(b.converged);
    CHECK(std::abs(b.v_min[0] - 2.0 / 3.0) <= opt.nu);
    CHECK(std::abs(b.v_max[0] - 2.0 / 3.0) <= opt.nu);
    CHECK(b.v_min[1] == 1.0);
    CHECK(b.v_max[1] == 1.0);
}

TEST_CASE("certain reach converges in one step") {
    const Dense p{{0.0, 0.0, 1.0, 0.0}, {0.5, 0.0, 0.0, 0.0}, {0, 0, 1, 0}, {0, 0, 0, 0}};  // state 3 only leaves
    const Imc imc = point_imc(p, {false, false, true, false});
    IterationOptions opt;
    opt.max_iters = 1;
    const ValueBounds b = interval_iteration(imc, opt);
    CHECK(b.v_min[0] == 1.0);
    CHECK(b.v_max[3] == 0.0);
}

TEST_CASE("point-interval chains agree with value iteration") {
    std::mt19937_64 rng(45);
    for (int trial = 0; trial < 30; ++trial) {
        const Dense p = random_chain(32, rng);
        std::vector<bool> target(32, false);
        for (int i = 0; i < 3; ++i) target[rng() % 32] = true;
        const Imc imc = point_imc(p, target);
        IterationOptions opt;
        const ValueBounds b = interval_iteration(imc, opt);
        const std::vector<double> ref = oracle::value_iteration(p, target);
        CHECK(b.converged);
        for (std::size_t s = 0; s < 32; ++s) {
            CHECK(std::abs(b.v_min[s] - ref[s]) <= 10 * opt.nu);
            CHECK(std::abs(b.v_max[s] - ref[s]) <= 10 * opt.nu);
        }
    }
}

TEST_CASE("envelopes are ordered and monotone across iterations") {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const Dense p = random_chain(16, rng);
        Dense lo = p, hi = p;
        for (std::size_t s = 0; s < 16; ++s)
            for (std::size_t t = 0; t < 16; ++t) {
                if (p[s][t] == 0.0) continue;
                lo[s][t] = std::max(0.0, p[s][t] - 0.05 * u(rng));
                hi[s][t] = std::min(1.0, p[s][t] + 0.05 * u(rng));
            }
        std::vector<bool> target(16, false);
        target[rng() % 16] = true;
        const Imc imc = dense_imc(lo, hi, target);
        std::vector<double> prev_min(16, 0.0), prev_max(16, 1.0);
        for (std::uint64_t k = 1; k <= 40; ++k) {
            IterationOptions opt;
            opt.max_iters = k;
            const ValueBounds b = interval_iteration(imc, opt);
            for (std::size_t s = 0; s < 16; ++s) {
                CHECK(b.v_min[s] <= b.v_max[s]);
                CHECK(b.v_min[s] >= 0.0);
                CHECK(b.v_max[s] <= 1.0);
                if (target[s]) continue;
                CHECK(b.v_min[s] >= prev_min[s] - 1e-12);
                CHECK(b.v_max[s] <= prev_max[s] + 1e-12);
            }
            prev_min = b.v_min;
            prev_max = b.v_max;
            if (b.converged) break;
        }
    }
}

TEST_CASE("interval chains bracket every chain they contain") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const Dense p = random_chain(16, rng);
        Dense lo = p, hi = p;
        for (std::size_t s = 0; s < 16; ++s)
            for (std::size_t t = 0; t < 16; ++t) {
                lo[s][t] = std::max(0.0, p[s][t] - 0.03);
                hi[s][t] = std::min(1.0, p[s][t] + 0.03);
            }
        std::vector<bool> target(16, false);
        target[0] = target[7] = true;
        const ValueBounds b = interval_iteration(dense_imc(lo, hi, target));
        const std::vector<double> ref = oracle::value_iteration(p, target);
        for (std::size_t s = 0; s < 16; ++s) {
            CHECK(b.v_min[s] <= ref[s] + 1e-7);
            CHECK(b.v_max[s] >= ref[s] - 1e-7);
        }
    }
}

TEST_CASE("non-convergence is reported, not thrown") {
    const Dense p{{0.999, 0.001}, {0.0, 1.0}};
    IterationOptions opt;
    opt.max_iters = 5;
    const ValueBounds b = interval_iteration(point_imc(p, {false, true}), opt);
    CHECK_FALSE(b.converged);
    CHECK(b.final_gap() > opt.nu);
    CHECK(b.v_min[0] <= b.v_max[0]);
}

namespace {

Imc gaussian_imc(double eps, const std::vector<CellId>& target, double prune = 1e-12) {
    const PartitionScheme s = square_scheme(4, 6);
    Eigen::MatrixXd mean(64, 2);
    for (std::uint64_t c = 0; c < 64; ++c) mean.row(static_cast<Eigen::Index>(c)) = (0.7 * s.cell_center(CellId(c, 6))).transpose();
    const BtgpModel m(BtKernel(s), 1.0, mean, Eigen::MatrixXd::Constant(64, 2, 0.3));
    ErrorTable err;
    err.eps1 = Eigen::MatrixXd::Constant(64, 2, eps);
    err.eps2 = err.eps3 = Eigen::MatrixXd::Zero(64, 2);
    err.total = err.eps1;
    AbstractionOptions opt;
    opt.prune_threshold = prune;
    return build_imc(m, err, target, vec({2.5, -2.5}), opt);
}

}  // namespace

TEST_CASE("certificates") {
    const PartitionScheme s = square_scheme(4, 6);
    const auto target = s.project_set(StateBox::checked(vec({-1, -1}), vec({1, 1})));
    const Imc imc = gaussian_imc(0.1, target, 1e-4);
    IterationOptions opt;
    const ValueBounds b = interval_iteration(imc, opt);
    REQUIRE(b.converged);
    const Certificate in_target = certify(imc, vec({0.1, 0.1}), b, 0.6, opt.nu);
    CHECK(in_target.v_min == 1.0);
    CHECK(in_target.v_max == 1.0);
    const Certificate c = certify(imc, vec({2.5, -2.5}), b, 0.6, opt.nu);
    CHECK(c.initial == s.encode(vec({2.5, -2.5})));
    CHECK(c.confidence == 0.6);
    CHECK(c.nu == opt.nu);
    CHECK(c.v_min <= c.v_max);
    CHECK(c.v_min > 0.0);
    CHECK(c.iterations_min == b.iterations_min);
    // width is bounded by the spread the interval chain admits, not by bookkeeping slack
    const Imc exact = gaussian_imc(0.0, target, 0.0);
    const ValueBounds e = interval_iteration(exact, opt);
    for (std::size_t st = 0; st < 64; ++st) {
        CHECK(e.v_max[st] - e.v_min[st] <= e.final_gap() + e.inflation + 1e-12);
    }
    CHECK(c.v_min <= e.v_min[c.initial.value()] + 1e-9);
    CHECK(c.v_max >= e.v_max[c.initial.value()] - 1e-9);
}

TEST_CASE("pruned mass inflates the upper bound") {
    Imc imc = point_imc({{0.25, 0.5}, {0.0, 1.0}}, {false, true});
    imc.pruned[0] = 0.01;
    const ValueBounds b = interval_iteration(imc);
    CHECK(b.inflation == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(b.v_max[0] == doctest::Approx(2.0 / 3.0 + 0.01).epsilon(1e-8));
    CHECK(std::abs(b.v_min[0] - 2.0 / 3.0) <= 1e-8);
    const Certificate c = certify(imc, vec({-0.5}), b, 0.9, 1e-8);
    CHECK(c.inflation == b.inflation);
    CHECK(c.v_max - c.v_min <= c.gap + c.inflation + 1e-12);
    imc.pruned[0] = 0.5;
    CHECK(interval_iteration(imc).v_max[0] == 1.0);
}

TEST_CASE("widening the error radius never shrinks the certificate") {
    const PartitionScheme s = square_scheme(4, 6);
    const auto target = s.project_set(StateBox::checked(vec({-1, -1}), vec({1, 1})));
    double prev_lo = 2.0, prev_hi = -1.0;
    for (double eps : {0.0, 0.05, 0.2, 0.5}) {
        const Imc imc = gaussian_imc(eps, target);
        const ValueBounds b = interval_iteration(imc);
        const Certificate c = certify(imc, vec({2.5, -2.5}), b, 0.6, 1e-8);
        CHECK(c.v_min <= prev_lo + 1e-9);
        CHECK(c.v_max >= prev_hi - 1e-9);
        prev_lo = c.v_min;
        prev_hi = c.v_max;
    }
}

TEST_CASE("interval iteration is independent of thread count") {
    const PartitionScheme s = square_scheme(4, 6);
    const auto target = s.project_set(StateBox::checked(vec({-1, -1}), vec({1, 1})));
    const Imc imc = gaussian_imc(0.3, target, 1e-9);
    IterationOptions one, four;
    four.threads = 4;
    const ValueBounds a = interval_iteration(imc, one), b = interval_iteration(imc, four);
    CHECK(a.v_min == b.v_min);
    CHECK(a.v_max == b.v_max);
    CHECK(a.iterations_min == b.iterations_min);
    CHECK(a.iterations_max == b.iterations_max);
}
