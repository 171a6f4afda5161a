#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "btimc/abstraction.hpp"
#include "btimc/errbound.hpp"
#include "btimc/gp.hpp"
#include "btimc/verify.hpp"

namespace btimc {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
/// Parses a whole token as a double; throws Parse on trailing garbage.
double parse_double(std::string_view text);

/// Writes `content` next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// CSV with header x1..xn,y1..yn, one sample per row. The noise level is not
/// part of the file and must be supplied by the caller.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text, double noise_std);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path, double noise_std);

/// JSON: scheme, weights, noise_std and one {id, mean, variance} row per cell.
std::string model_to_json(const BtgpModel& model);
BtgpModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const BtgpModel& model);
BtgpModel load_model(const std::filesystem::path& path);

/// JSON: run settings and one row per cell with eps1_d, eps2_d, eps3_d, eps_d.
std::string error_table_to_json(const ErrorTable& table, const PartitionScheme& scheme);
ErrorTable error_table_from_json(const std::string& text, const PartitionScheme& scheme);
void save_error_table(const std::filesystem::path& path, const ErrorTable& table, const PartitionScheme& scheme);
ErrorTable load_error_table(const std::filesystem::path& path, const PartitionScheme& scheme);

/// Sparse triplets `src dst t_lower t_upper` and the per-state table
/// `cell r_lower r_upper l_lower l_upper pruned_mass`; cells are integer ids.
/// Scheme, initial state and target cells travel in `#` header lines.
struct ImcText {
    std::string transitions;
    std::string states;
};
ImcText imc_to_text(const Imc& imc);
Imc imc_from_text(const ImcText& text);
/// Writes <stem>.tra and <stem>.sta.
void save_imc(const std::filesystem::path& stem, const Imc& imc);
Imc load_imc(const std::filesystem::path& stem);

/// One line per cell: `cell_id bitstring v_min v_max`.
std::string values_to_text(const ValueBounds& bounds, const PartitionScheme& scheme);
/// Reads values_to_text output; only v_min and v_max are restored.
ValueBounds values_from_text(const std::string& text, const PartitionScheme& scheme);
std::string certificate_line(const Certificate& c);

}  // namespace btimc
