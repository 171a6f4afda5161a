#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "btimc/abstraction.hpp"
#include "btimc/errbound.hpp"
#include "btimc/partition.hpp"
#include "btimc/systems.hpp"

namespace btimc {

/// Every setting of an end-to-end run. Field groups follow the config file
/// sections: [domain] [data] [partition] [error] [abstraction] [spec]
/// [verify] [run].
struct PipelineConfig {
    StateBox domain;
    int precision = 12;
    std::vector<double> weights;  ///< empty: uniform

    std::string system = "sine2d";
    std::filesystem::path dataset;  ///< CSV input; overrides `system` when set
    std::size_t samples = 5000;
    double noise_std = 3.16;
    std::uint64_t seed = 1;
    SystemParams system_params;

    ErrorConfig errors;

    AbstractionOptions abstraction;

    StateBox target;
    Eigen::VectorXd x_init;

    double nu = 1e-8;
    std::uint64_t max_iters = 1'000'000;

    unsigned threads = 0;
    std::filesystem::path output = "out";

    /// Throws InvalidArgument (or OutOfDomain for x_init) on bad settings.
    void validate() const;
};

using ConfigTree = boost::property_tree::ptree;

struct ConfigKey {
    std::string name;  ///< section.key
    std::string help;
};

/// Fixed keys; [error] additionally takes lengthscales_1 .. lengthscales_n.
const std::vector<ConfigKey>& config_keys();

/// Parses INI text with `;` or `#` comments, also after values.
ConfigTree parse_config_tree(const std::string& text);
ConfigTree load_config_tree(const std::filesystem::path& path);
/// Sets section.key; the key must be known.
void set_config_value(ConfigTree& tree, const std::string& key, const std::string& value);
/// Converts and validates; unknown keys are rejected.
PipelineConfig config_from_tree(const ConfigTree& tree);

}  // namespace btimc
