#include "btimc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "btimc/error.hpp"
#include "btimc/io.hpp"
#include "btimc/systems.hpp"

namespace btimc {

PartitionScheme make_scheme(const PipelineConfig& config) { return PartitionScheme(config.domain, config.precision); }

BtKernel make_kernel(const PipelineConfig& config) {
    if (config.weights.empty()) return BtKernel(make_scheme(config));
    return BtKernel(make_scheme(config), config.weights);
}

std::vector<CellId> target_cells(const PipelineConfig& config) { return make_scheme(config).project_set(config.target); }

Dataset acquire_dataset(const PipelineConfig& config) {
    if (!config.dataset.empty()) return load_dataset(config.dataset, config.noise_std);
    const BenchmarkSystem system = builtin_system(config.system, config.noise_std, config.system_params);
    return simulate(system, config.samples, config.seed, config.domain);
}

BtgpModel fit_stage(const PipelineConfig& config, const Dataset& data) {
    return fit(data, make_kernel(config), FitOptions{config.threads});
}

ErrorTable bound_stage(const PipelineConfig& config, const Dataset& data, const BtgpModel& model) {
    return error_table(data, model, config.errors);
}

Imc abstract_stage(const PipelineConfig& config, const BtgpModel& model, const ErrorTable& errors) {
    const auto target = target_cells(config);
    return build_imc(model, errors, target, config.x_init, config.abstraction);
}

ValueBounds verify_stage(const PipelineConfig& config, const Imc& imc) {
    return interval_iteration(imc, IterationOptions{config.nu, config.max_iters, config.threads});
}

namespace {

template <typename Fn>
auto timed_stage(const std::string& name, std::vector<StageTiming>& timings, const PipelineOptions& options, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        auto result = fn();
        const StageTiming t{name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
        timings.push_back(t);
        if (options.on_stage) options.on_stage(t);
        return result;
    } catch (const Error& e) {
        throw Error(e.kind(), name + ": " + e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineOptions& options) {
    config.validate();
    PipelineResult r;
    const auto& out = config.output;
    if (options.write_artifacts) {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec) fail(ErrorKind::Io, "cannot create output directory '" + out.string() + "': " + ec.message());
    }

    r.data = timed_stage("data", r.timings, options, [&] {
        Dataset d = acquire_dataset(config);
        if (options.write_artifacts) save_dataset(out / "dataset.csv", d);
        return d;
    });
    r.model = timed_stage("fit", r.timings, options, [&] {
        BtgpModel m = fit_stage(config, r.data);
        if (options.write_artifacts) save_model(out / "model.json", m);
        return m;
    });
    r.errors = timed_stage("bound", r.timings, options, [&] {
        ErrorTable t = bound_stage(config, r.data, r.model);
        if (options.write_artifacts) save_error_table(out / "errors.json", t, r.model.scheme());
        return t;
    });
    r.imc = timed_stage("abstraction", r.timings, options, [&] {
        Imc imc = abstract_stage(config, r.model, r.errors);
        if (options.write_artifacts) save_imc(out / "imc", imc);
        return imc;
    });
    r.bounds = timed_stage("verify", r.timings, options, [&] {
        ValueBounds b = verify_stage(config, r.imc);
        if (options.write_artifacts) write_file_atomic(out / "values.txt", values_to_text(b, r.imc.scheme));
        return b;
    });
    r.certificate = certify(r.imc, config.x_init, r.bounds, r.errors.confidence, config.nu);
    if (options.write_artifacts) {
        write_file_atomic(out / "certificate.txt", certificate_line(r.certificate) + '\n');
        if (r.imc.scheme.dim() <= 2) {
            export_heatmap(r.bounds, r.imc.scheme, HeatmapValue::VMin, out / "vmin");
            export_heatmap(r.bounds, r.imc.scheme, HeatmapValue::VMax, out / "vmax");
        }
    }
    return r;
}

Heatmap make_heatmap(const ValueBounds& bounds, const PartitionScheme& scheme, HeatmapValue which) {
    require(scheme.dim() <= 2, "heatmaps need a one- or two-dimensional state space");
    require(bounds.v_min.size() == scheme.cell_count() && bounds.v_max.size() == scheme.cell_count(),
            "value bounds do not match the partition");
    const auto& v = which == HeatmapValue::VMin ? bounds.v_min : bounds.v_max;
    Heatmap map;
    map.cols = scheme.slices(0);
    map.rows = scheme.dim() == 2 ? scheme.slices(1) : 1;
    map.values.resize(map.rows * map.cols);
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            std::vector<std::uint64_t> idx{c};
            if (scheme.dim() == 2) idx.push_back(map.rows - 1 - r);
            map.values[r * map.cols + c] = v[scheme.compose(idx).value()];
        }
    }
    return map;
}

std::pair<std::size_t, std::size_t> heatmap_pixel(const PartitionScheme& scheme, const StateRef& x) {
    require(scheme.dim() <= 2, "heatmaps need a one- or two-dimensional state space");
    const auto g = scheme.grid_index(scheme.encode(x));
    if (scheme.dim() == 1) return {0, g[0]};
    return {scheme.slices(1) - 1 - g[1], g[0]};
}

std::string heatmap_csv(const Heatmap& map) {
    std::string out;
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            if (c) out += ',';
            out += format_double(map.at(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string heatmap_pgm(const Heatmap& map) {
    std::string out = "P5\n" + std::to_string(map.cols) + ' ' + std::to_string(map.rows) + "\n255\n";
    for (double v : map.values) {
        out += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
    return out;
}

void export_heatmap(const ValueBounds& bounds, const PartitionScheme& scheme, HeatmapValue which,
                    const std::filesystem::path& stem) {
    const Heatmap map = make_heatmap(bounds, scheme, which);
    std::filesystem::path csv = stem, pgm = stem;
    csv += ".csv";
    pgm += ".pgm";
    write_file_atomic(csv, heatmap_csv(map));
    write_file_atomic(pgm, heatmap_pgm(map));
}

}  // namespace btimc
