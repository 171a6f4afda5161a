#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "btimc/gp.hpp"

namespace btimc {

/// Discrete-time system x_{t+1} = f(x_t) + v_t with v_t ~ N(0, noise_std^2 I).
struct BenchmarkSystem {
    std::string name;
    std::size_t dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> step;
    double noise_std = 0.0;
};

/// x1' = x1 - tau x1 + 0.5 tau sin(x2), x2' = x2 - tau x2 + 0.5 tau sin(x1).
BenchmarkSystem sine_system(double tau, double noise_std);
/// x' = A x; A must be square.
BenchmarkSystem linear_system(std::string name, Eigen::MatrixXd a, double noise_std);

struct SystemParams {
    double tau = 0.5;   ///< sine2d step
    double gain = 0.8;  ///< contraction factor of the linear systems
};

/// Built-in systems by name: sine2d, linear1d (x' = g x) and linear2d
/// (x' = g R x with R a rotation by 0.3 rad).
BenchmarkSystem builtin_system(const std::string& name, double noise_std, const SystemParams& params = {});
std::vector<std::string> builtin_system_names();

/// N inputs uniform over the domain, outputs f(x) + v. Reproducible from seed.
Dataset simulate(const BenchmarkSystem& system, std::size_t samples, std::uint64_t seed, const StateBox& domain);

}  // namespace btimc
