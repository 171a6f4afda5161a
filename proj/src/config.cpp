#include "btimc/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "btimc/error.hpp"
#include "btimc/io.hpp"

namespace btimc {

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"domain.lower", "lower domain corner, one value per dimension"},
        {"domain.upper", "upper domain corner, one value per dimension"},
        {"data.system", "built-in system: sine2d, linear1d or linear2d"},
        {"data.path", "dataset CSV (x1..xn,y1..yn); replaces simulation when set"},
        {"data.samples", "number of simulated samples N"},
        {"data.noise_std", "measurement noise standard deviation sigma_v"},
        {"data.seed", "random seed for simulation"},
        {"data.tau", "sine2d step size"},
        {"data.gain", "contraction factor of the linear systems"},
        {"partition.precision", "bit depth q (2^q cells)"},
        {"partition.weights", "q binary-tree kernel weights; empty means uniform"},
        {"error.delta", "per-dimension failure probability delta"},
        {"error.complexity", "RKHS norm bounds B_d"},
        {"error.amplitude", "SE amplitudes c_d of the true-dynamics kernels"},
        {"error.eps1_branch", "noise term: termA, termB or min"},
        {"error.noise_scaled", "scale the noise term by sigma_v (true/false)"},
        {"error.dense_cap", "largest N bounded with the dense true-kernel path"},
        {"error.subsample", "above dense_cap, bound a subsample instead of failing"},
        {"error.subsample_seed", "seed of the subsample"},
        {"abstraction.prune_threshold", "drop transitions whose upper bound is below this"},
        {"abstraction.variance", "transition variance: posterior, posterior_plus_noise or noise"},
        {"spec.target_lower", "lower target corner"},
        {"spec.target_upper", "upper target corner"},
        {"spec.x_init", "initial state"},
        {"verify.nu", "interval iteration stopping gap"},
        {"verify.max_iters", "interval iteration cap"},
        {"run.threads", "worker threads; 0 uses every hardware thread"},
        {"run.output", "directory for artifacts"},
    };
    return keys;
}

namespace {

bool is_lengthscale_key(const std::string& key) {
    const std::string prefix = "error.lengthscales_";
    if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size()) return false;
    for (std::size_t i = prefix.size(); i < key.size(); ++i) {
        if (key[i] < '0' || key[i] > '9') return false;
    }
    return key[prefix.size()] != '0';
}

bool is_known_key(const std::string& key) {
    for (const auto& k : config_keys()) {
        if (k.name == key) return true;
    }
    return is_lengthscale_key(key);
}

std::string strip_comments(const std::string& text) {
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if ((line[i] == ';' || line[i] == '#') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                line.erase(i);
                break;
            }
        }
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::string token;
    const auto flush = [&] {
        if (token.empty()) return;
        try {
            out.push_back(parse_double(token));
        } catch (const Error&) {
            fail(ErrorKind::Parse, "config key " + key + ": invalid number '" + token + "'");
        }
        token.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            flush();
        } else {
            token += c;
        }
    }
    flush();
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

class Reader {
public:
    explicit Reader(const ConfigTree& tree) : tree_(tree) {}

    bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

    std::string text(const std::string& key, const std::string& fallback) const {
        return tree_.get<std::string>(key, fallback);
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto v = parse_list(key, tree_.get<std::string>(key));
        if (v.size() != 1) fail(ErrorKind::InvalidArgument, "config key " + key + " expects one number");
        return v[0];
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
        const double v = number(key, static_cast<double>(fallback));
        if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) {
            fail(ErrorKind::InvalidArgument, "config key " + key + " expects a nonnegative integer");
        }
        return static_cast<std::uint64_t>(v);
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string v = tree_.get<std::string>(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(ErrorKind::InvalidArgument, "config key " + key + " expects true or false");
    }

    std::vector<double> list(const std::string& key) const {
        if (!has(key)) return {};
        return parse_list(key, tree_.get<std::string>(key));
    }

    std::vector<double> required_list(const std::string& key, std::size_t size) const {
        if (!has(key)) fail(ErrorKind::InvalidArgument, "config key " + key + " is required");
        auto v = list(key);
        if (v.size() != size) {
            fail(ErrorKind::InvalidArgument,
                 "config key " + key + " expects " + std::to_string(size) + " values, got " + std::to_string(v.size()));
        }
        return v;
    }

private:
    const ConfigTree& tree_;
};

}  // namespace

ConfigTree parse_config_tree(const std::string& text) {
    ConfigTree tree;
    std::istringstream in(strip_comments(text));
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        fail(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    return tree;
}

ConfigTree load_config_tree(const std::filesystem::path& path) { return parse_config_tree(read_file(path)); }

void set_config_value(ConfigTree& tree, const std::string& key, const std::string& value) {
    if (!is_known_key(key)) fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
    tree.put(key, value);
}

PipelineConfig config_from_tree(const ConfigTree& tree) {
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            fail(ErrorKind::InvalidArgument, "config key '" + section + "' must belong to a section");
        }
        for (const auto& entry : entries) {
            const std::string key = section + "." + entry.first;
            if (!is_known_key(key)) fail(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
        }
    }
    const Reader r(tree);
    PipelineConfig c;

    if (!r.has("domain.lower")) fail(ErrorKind::InvalidArgument, "config key domain.lower is required");
    const auto lower = r.list("domain.lower");
    const std::size_t n = lower.size();
    require(n >= 1, "domain.lower must list at least one value");
    c.domain = StateBox::checked(to_vector(lower), to_vector(r.required_list("domain.upper", n)));

    c.system = r.text("data.system", c.system);
    c.dataset = r.text("data.path", "");
    c.samples = r.count("data.samples", c.samples);
    c.noise_std = r.number("data.noise_std", c.noise_std);
    c.seed = r.count("data.seed", c.seed);
    c.system_params.tau = r.number("data.tau", c.system_params.tau);
    c.system_params.gain = r.number("data.gain", c.system_params.gain);

    const std::uint64_t q = r.count("partition.precision", static_cast<std::uint64_t>(c.precision));
    require(q >= 1 && q <= static_cast<std::uint64_t>(kMaxPrecision), "partition.precision must lie in [1, 30]");
    c.precision = static_cast<int>(q);
    c.weights = r.list("partition.weights");

    c.errors.delta = r.number("error.delta", c.errors.delta);
    c.errors.complexity = r.required_list("error.complexity", n);
    const auto amplitude = r.required_list("error.amplitude", n);
    for (std::size_t d = 0; d < n; ++d) {
        const auto ls = r.required_list("error.lengthscales_" + std::to_string(d + 1), n);
        require(amplitude[d] > 0.0, "error.amplitude values must be positive");
        for (double l : ls) require(l > 0.0, "error.lengthscales values must be positive");
        c.errors.true_kernels.emplace_back(amplitude[d], to_vector(ls));
    }
    for (const auto& [section, entries] : tree) {
        for (const auto& entry : entries) {
            const std::string key = section + "." + entry.first;
            if (is_lengthscale_key(key) && std::stoul(entry.first.substr(13)) > n) {
                fail(ErrorKind::InvalidArgument, "config key " + key + " exceeds the state dimension");
            }
        }
    }
    c.errors.branch = parse_eps1_branch(r.text("error.eps1_branch", to_string(c.errors.branch)));
    c.errors.noise_scaled = r.flag("error.noise_scaled", c.errors.noise_scaled);
    c.errors.dense_cap = r.count("error.dense_cap", c.errors.dense_cap);
    c.errors.subsample = r.flag("error.subsample", c.errors.subsample);
    c.errors.subsample_seed = r.count("error.subsample_seed", c.errors.subsample_seed);

    c.abstraction.prune_threshold = r.number("abstraction.prune_threshold", c.abstraction.prune_threshold);
    c.abstraction.variance =
        parse_transition_variance(r.text("abstraction.variance", to_string(c.abstraction.variance)));

    c.target = StateBox::checked(to_vector(r.required_list("spec.target_lower", n)),
                                 to_vector(r.required_list("spec.target_upper", n)));
    c.x_init = r.has("spec.x_init") ? to_vector(r.required_list("spec.x_init", n)) : c.domain.center();

    c.nu = r.number("verify.nu", c.nu);
    c.max_iters = r.count("verify.max_iters", c.max_iters);

    c.threads = static_cast<unsigned>(r.count("run.threads", c.threads));
    c.output = r.text("run.output", c.output.string());

    c.errors.threads = c.threads;
    c.abstraction.threads = c.threads;
    c.validate();
    return c;
}

void PipelineConfig::validate() const {
    const std::size_t n = domain.dim();
    require(n >= 1, "domain must have at least one dimension");
    require(precision >= 1 && precision <= kMaxPrecision, "precision must lie in [1, 30]");
    require(weights.empty() || weights.size() == static_cast<std::size_t>(precision),
            "partition.weights must list one weight per precision level");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, "partition.weights must be nonnegative");
        total += w;
    }
    require(weights.empty() || total > 0.0, "partition.weights must not all be zero");
    if (dataset.empty()) {
        const auto names = builtin_system_names();
        require(std::find(names.begin(), names.end(), system) != names.end(),
                "unknown system '" + system + "' (expected sine2d, linear1d or linear2d)");
        require((system == "linear1d") == (n == 1), "system '" + system + "' does not match the domain dimension");
        require(samples >= 1, "data.samples must be at least 1");
    }
    require(std::isfinite(noise_std) && noise_std > 0.0, "data.noise_std must be positive");
    errors.validate(n);
    require(abstraction.prune_threshold >= 0.0 && abstraction.prune_threshold < 1.0,
            "abstraction.prune_threshold must lie in [0, 1)");
    require(target.dim() == n, "target dimension does not match the domain");
    require(domain.contains(target), "target box must lie inside the domain");
    require(x_init.size() == static_cast<Eigen::Index>(n), "x_init dimension does not match the domain");
    if (!domain.contains(x_init)) fail(ErrorKind::OutOfDomain, "x_init lies outside the domain");
    require(nu > 0.0, "verify.nu must be positive");
    require(max_iters >= 1, "verify.max_iters must be at least 1");
}

}  // namespace btimc
