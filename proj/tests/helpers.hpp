#pragma once

#include <initializer_list>
#include <random>

#include <Eigen/Core>

#include "btimc/partition.hpp"

namespace testing_support {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline btimc::StateBox box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
    return btimc::StateBox::checked(vec(lo), vec(hi));
}

inline btimc::PartitionScheme square_scheme(double half, int q, int dim = 2) {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -half), hi = Eigen::VectorXd::Constant(dim, half);
    return btimc::PartitionScheme(btimc::StateBox::checked(lo, hi), q);
}

inline Eigen::VectorXd uniform_in(const btimc::StateBox& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd x(b.lower.size());
    for (Eigen::Index d = 0; d < x.size(); ++d) x[d] = b.lower[d] + u(rng) * (b.upper[d] - b.lower[d]);
    return x;
}

}  // namespace testing_support
