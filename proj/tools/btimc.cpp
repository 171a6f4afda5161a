// Command-line front end: runs the pipeline end to end or one stage at a time.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "btimc/error.hpp"
#include "btimc/io.hpp"
#include "btimc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace btimc;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNonConverged = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::OutOfDomain:
        case ErrorKind::InconsistentScheme:
        case ErrorKind::Infeasible:
        case ErrorKind::DataTooLarge:
        case ErrorKind::Parse: return kExitValidation;
        case ErrorKind::NonConverged: return kExitNonConverged;
        case ErrorKind::NumericalFailure: return kExitNumerical;
        case ErrorKind::Io: return kExitOther;
    }
    return kExitOther;
}

struct Settings {
    std::string config_path;
    std::map<std::string, std::string> overrides;
    unsigned max_dimension = 4;

    PipelineConfig load() const {
        ConfigTree tree = config_path.empty() ? ConfigTree{} : load_config_tree(config_path);
        for (const auto& [key, value] : overrides) set_config_value(tree, key, value);
        return config_from_tree(tree);
    }
};

void add_config_options(CLI::App& app, Settings& settings) {
    app.add_option("-c,--config", settings.config_path, "configuration file (INI)")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
        app.add_option_function<std::string>(
               "--" + key.name, [&settings, name = key.name](const std::string& v) { settings.overrides[name] = v; },
               key.help)
            ->group("Config overrides");
    }
    for (unsigned d = 1; d <= settings.max_dimension; ++d) {
        const std::string name = "error.lengthscales_" + std::to_string(d);
        app.add_option_function<std::string>(
               "--" + name, [&settings, name](const std::string& v) { settings.overrides[name] = v; },
               "SE lengthscales of output dimension " + std::to_string(d))
            ->group("Config overrides");
    }
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
    return given.empty() ? fallback : fs::path(given);
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void print_timing(const StageTiming& t) {
    std::printf("stage %-12s %8.3f s\n", t.stage.c_str(), t.seconds);
    std::fflush(stdout);
}

int report_bounds(const ValueBounds& bounds, const Certificate& cert) {
    std::cout << certificate_line(cert) << '\n';
    if (!bounds.converged) {
        std::cerr << "warning: interval iteration stopped at max_iters with gap " << format_double(bounds.final_gap())
                  << '\n';
        return kExitNonConverged;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified reachability bounds from data via binary-tree GP abstractions"};
    app.require_subcommand(1);
    app.fallthrough();
    Settings settings;
    add_config_options(app, settings);

    std::string data_path, model_path, errors_path, imc_path, values_path, out_path;
    std::string which = "vmin";

    auto* simulate_cmd = app.add_subcommand("simulate", "simulate the configured system and write a dataset CSV");
    simulate_cmd->add_option("-o,--out", out_path, "dataset CSV (default <run.output>/dataset.csv)");

    auto* fit_cmd = app.add_subcommand("fit", "fit the BTGP model");
    fit_cmd->add_option("--data", data_path, "dataset CSV (default: data.path or a fresh simulation)");
    fit_cmd->add_option("-o,--out", out_path, "model JSON (default <run.output>/model.json)");

    auto* bound_cmd = app.add_subcommand("bound", "compute the learning-error table");
    bound_cmd->add_option("--data", data_path, "dataset CSV used for the fit");
    bound_cmd->add_option("--model", model_path, "model JSON (default <run.output>/model.json)");
    bound_cmd->add_option("-o,--out", out_path, "error table JSON (default <run.output>/errors.json)");

    auto* abstract_cmd = app.add_subcommand("abstract", "build the interval Markov chain");
    abstract_cmd->add_option("--model", model_path, "model JSON (default <run.output>/model.json)");
    abstract_cmd->add_option("--errors", errors_path, "error table JSON (default <run.output>/errors.json)");
    abstract_cmd->add_option("-o,--out", out_path, "IMC file stem (default <run.output>/imc)");

    auto* verify_cmd = app.add_subcommand("verify", "run interval iteration on an IMC");
    verify_cmd->add_option("--imc", imc_path, "IMC file stem (default <run.output>/imc)");
    verify_cmd->add_option("-o,--out", out_path, "per-cell values (default <run.output>/values.txt)");

    auto* run_cmd = app.add_subcommand("run", "run every stage and write all artifacts to run.output");

    auto* export_cmd = app.add_subcommand("export", "write a heatmap CSV and PGM from per-cell values");
    export_cmd->add_option("--values", values_path, "per-cell values (default <run.output>/values.txt)");
    export_cmd->add_option("--which", which, "vmin or vmax")->check(CLI::IsMember({"vmin", "vmax"}));
    export_cmd->add_option("-o,--out", out_path, "output stem (default <run.output>/<which>)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        const PipelineConfig config = settings.load();
        const fs::path dir = config.output;
        const auto dataset = [&]() -> Dataset {
            if (!data_path.empty()) return load_dataset(data_path, config.noise_std);
            return acquire_dataset(config);
        };

        if (*simulate_cmd) {
            const fs::path out = or_default(out_path, dir / "dataset.csv");
            ensure_parent(out);
            save_dataset(out, acquire_dataset(config));
            std::cout << "wrote " << out.string() << '\n';
        } else if (*fit_cmd) {
            const fs::path out = or_default(out_path, dir / "model.json");
            ensure_parent(out);
            save_model(out, fit_stage(config, dataset()));
            std::cout << "wrote " << out.string() << '\n';
        } else if (*bound_cmd) {
            const fs::path out = or_default(out_path, dir / "errors.json");
            ensure_parent(out);
            const BtgpModel model = load_model(or_default(model_path, dir / "model.json"));
            const ErrorTable table = bound_stage(config, dataset(), model);
            save_error_table(out, table, model.scheme());
            std::cout << "wrote " << out.string() << " (confidence " << format_double(table.confidence) << ")\n";
        } else if (*abstract_cmd) {
            const fs::path out = or_default(out_path, dir / "imc");
            ensure_parent(out);
            const BtgpModel model = load_model(or_default(model_path, dir / "model.json"));
            const ErrorTable errors = load_error_table(or_default(errors_path, dir / "errors.json"), model.scheme());
            const Imc imc = abstract_stage(config, model, errors);
            save_imc(out, imc);
            std::cout << "wrote " << out.string() << ".tra/.sta (" << imc.transition_count() << " transitions)\n";
        } else if (*verify_cmd) {
            const fs::path out = or_default(out_path, dir / "values.txt");
            ensure_parent(out);
            const Imc imc = load_imc(or_default(imc_path, dir / "imc"));
            const ValueBounds bounds = verify_stage(config, imc);
            write_file_atomic(out, values_to_text(bounds, imc.scheme));
            const double confidence = reported_confidence(config.errors.delta, imc.scheme.dim(), config.errors.branch);
            return report_bounds(bounds, certify(imc, config.x_init, bounds, confidence, config.nu));
        } else if (*run_cmd) {
            PipelineOptions options;
            options.on_stage = print_timing;
            const PipelineResult r = run_pipeline(config, options);
            std::cout << "artifacts in " << dir.string() << '\n';
            return report_bounds(r.bounds, r.certificate);
        } else if (*export_cmd) {
            const PartitionScheme scheme = make_scheme(config);
            const ValueBounds bounds = values_from_text(read_file(or_default(values_path, dir / "values.txt")), scheme);
            const fs::path out = or_default(out_path, dir / which);
            ensure_parent(out);
            export_heatmap(bounds, scheme, which == "vmin" ? HeatmapValue::VMin : HeatmapValue::VMax, out);
            std::cout << "wrote " << out.string() << ".csv/.pgm\n";
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error [IoError]: " << e.what() << '\n';
        return kExitOther;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return 0;
}
