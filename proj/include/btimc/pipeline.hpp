#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "btimc/abstraction.hpp"
#include "btimc/config.hpp"
#include "btimc/errbound.hpp"
#include "btimc/gp.hpp"
#include "btimc/verify.hpp"

namespace btimc {

PartitionScheme make_scheme(const PipelineConfig& config);
BtKernel make_kernel(const PipelineConfig& config);
std::vector<CellId> target_cells(const PipelineConfig& config);

/// Loads the CSV named in the config, or simulates the built-in system.
Dataset acquire_dataset(const PipelineConfig& config);
BtgpModel fit_stage(const PipelineConfig& config, const Dataset& data);
ErrorTable bound_stage(const PipelineConfig& config, const Dataset& data, const BtgpModel& model);
Imc abstract_stage(const PipelineConfig& config, const BtgpModel& model, const ErrorTable& errors);
ValueBounds verify_stage(const PipelineConfig& config, const Imc& imc);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineResult {
    Dataset data;
    BtgpModel model;
    ErrorTable errors;
    Imc imc;
    ValueBounds bounds;
    Certificate certificate;
    std::vector<StageTiming> timings;
};

struct PipelineOptions {
    bool write_artifacts = true;
    /// Called after each stage with its wall-clock time.
    std::function<void(const StageTiming&)> on_stage;
};

/// data -> fit -> error bounds -> IMC -> interval iteration -> certificate.
/// Stage failures are rethrown with the stage name prefixed. With
/// write_artifacts every stage output lands in config.output.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineOptions& options = {});

enum class HeatmapValue { VMin, VMax };

struct Heatmap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  ///< row-major; row 0 is the top (largest second coordinate)
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Dense grid of per-cell values for n = 1 (one row) or n = 2.
Heatmap make_heatmap(const ValueBounds& bounds, const PartitionScheme& scheme, HeatmapValue which);
/// Row and column of the heatmap pixel covering x.
std::pair<std::size_t, std::size_t> heatmap_pixel(const PartitionScheme& scheme, const StateRef& x);
std::string heatmap_csv(const Heatmap& map);
/// Binary 8-bit PGM, value 0 -> 0 and 1 -> 255.
std::string heatmap_pgm(const Heatmap& map);
/// Writes <stem>.csv and <stem>.pgm.
void export_heatmap(const ValueBounds& bounds, const PartitionScheme& scheme, HeatmapValue which,
                    const std::filesystem::path& stem);

}  // namespace btimc
