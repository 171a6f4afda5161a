#include "btimc/systems.hpp"

#include <cmath>
#include <random>

#include "btimc/error.hpp"

namespace btimc {

BenchmarkSystem sine_system(double tau, double noise_std) {
    require(std::isfinite(tau), "tau must be finite");
    require(noise_std >= 0.0, "noise standard deviation must be nonnegative");
    BenchmarkSystem s;
    s.name = "sine2d";
    s.dim = 2;
    s.noise_std = noise_std;
    s.step = [tau](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(2);
        y[0] = x[0] - tau * x[0] + 0.5 * tau * std::sin(x[1]);
        y[1] = x[1] - tau * x[1] + 0.5 * tau * std::sin(x[0]);
        return y;
    };
    return s;
}

BenchmarkSystem linear_system(std::string name, Eigen::MatrixXd a, double noise_std) {
    require(a.rows() == a.cols() && a.rows() >= 1, "linear system matrix must be square");
    require(noise_std >= 0.0, "noise standard deviation must be nonnegative");
    BenchmarkSystem s;
    s.name = std::move(name);
    s.dim = static_cast<std::size_t>(a.rows());
    s.noise_std = noise_std;
    s.step = [a = std::move(a)](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; };
    return s;
}

std::vector<std::string> builtin_system_names() { return {"sine2d", "linear1d", "linear2d"}; }

BenchmarkSystem builtin_system(const std::string& name, double noise_std, const SystemParams& params) {
    if (name == "sine2d") return sine_system(params.tau, noise_std);
    if (name == "linear1d") {
        Eigen::MatrixXd a(1, 1);
        a(0, 0) = params.gain;
        return linear_system(name, a, noise_std);
    }
    if (name == "linear2d") {
        const double c = std::cos(0.3), s = std::sin(0.3);
        Eigen::MatrixXd a(2, 2);
        a << c, -s, s, c;
        return linear_system(name, params.gain * a, noise_std);
    }
    fail(ErrorKind::InvalidArgument, "unknown system '" + name + "' (expected sine2d, linear1d or linear2d)");
}

Dataset simulate(const BenchmarkSystem& system, std::size_t samples, std::uint64_t seed, const StateBox& domain) {
    require(samples >= 1, "at least one sample is required");
    require(domain.dim() == system.dim, "domain dimension does not match the system");
    const auto n = static_cast<Eigen::Index>(system.dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset data;
    data.noise_std = system.noise_std;
    data.inputs.resize(static_cast<Eigen::Index>(samples), n);
    data.outputs.resize(static_cast<Eigen::Index>(samples), n);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(samples); ++i) {
        for (Eigen::Index d = 0; d < n; ++d) {
            x[d] = domain.lower[d] + unit(rng) * (domain.upper[d] - domain.lower[d]);
        }
        const Eigen::VectorXd fx = system.step(x);
        data.inputs.row(i) = x.transpose();
        for (Eigen::Index d = 0; d < n; ++d) data.outputs(i, d) = fx[d] + system.noise_std * noise(rng);
    }
    return data;
}

}  // namespace btimc
