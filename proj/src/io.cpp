#include "btimc/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "btimc/error.hpp"

namespace btimc {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(std::string_view text) {
    text = trim(text);
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        fail(ErrorKind::Parse, "invalid integer '" + std::string(text) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto line : split(text, '\n')) {
        if (!trim(line).empty()) out.push_back(line);
    }
    return out;
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd json_vector(const json& a) {
    if (!a.is_array()) fail(ErrorKind::Parse, "expected a JSON array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json scheme_json(const PartitionScheme& scheme) {
    return {{"lower", vector_json(scheme.domain().lower)},
            {"upper", vector_json(scheme.domain().upper)},
            {"precision", scheme.precision()},
            {"split_order", scheme.split_order()}};
}

PartitionScheme json_scheme(const json& j) {
    return PartitionScheme(StateBox::checked(json_vector(j.at("lower")), json_vector(j.at("upper"))),
                           j.at("precision").get<int>(), j.at("split_order").get<std::vector<int>>());
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed JSON: ") + e.what());
    }
}

/// Runs a JSON field extraction and reports schema errors as Parse errors.
template <typename Fn>
auto guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        fail(ErrorKind::Parse, std::string("unexpected JSON layout: ") + e.what());
    }
}

std::string scheme_header(const PartitionScheme& scheme) {
    std::ostringstream os;
    os << "# precision " << scheme.precision() << '\n' << "# split_order";
    for (int d : scheme.split_order()) os << ' ' << d;
    os << '\n' << "# domain_lower";
    for (Eigen::Index d = 0; d < scheme.domain().lower.size(); ++d) os << ' ' << format_double(scheme.domain().lower[d]);
    os << '\n' << "# domain_upper";
    for (Eigen::Index d = 0; d < scheme.domain().upper.size(); ++d) os << ' ' << format_double(scheme.domain().upper[d]);
    os << '\n';
    return os.str();
}

/// `# key values...` header lines of a text artifact.
std::map<std::string, std::vector<std::string_view>> header_fields(std::string_view text) {
    std::map<std::string, std::vector<std::string_view>> out;
    for (auto line : lines(text)) {
        line = trim(line);
        if (line.front() != '#') continue;
        auto w = words(line.substr(1));
        if (w.empty()) continue;
        out[std::string(w.front())] = std::vector<std::string_view>(w.begin() + 1, w.end());
    }
    return out;
}

const std::vector<std::string_view>& header_field(const std::map<std::string, std::vector<std::string_view>>& h,
                                                  const std::string& key) {
    const auto it = h.find(key);
    if (it == h.end()) fail(ErrorKind::Parse, "missing header line '# " + key + "'");
    return it->second;
}

PartitionScheme header_scheme(std::string_view text) {
    const auto h = header_fields(text);
    const auto& p = header_field(h, "precision");
    if (p.size() != 1) fail(ErrorKind::Parse, "malformed precision header");
    std::vector<int> order;
    for (auto w : header_field(h, "split_order")) order.push_back(parse_integer<int>(w));
    const auto& lo = header_field(h, "domain_lower");
    const auto& hi = header_field(h, "domain_upper");
    Eigen::VectorXd lower(static_cast<Eigen::Index>(lo.size())), upper(static_cast<Eigen::Index>(hi.size()));
    for (std::size_t i = 0; i < lo.size(); ++i) lower[static_cast<Eigen::Index>(i)] = parse_double(lo[i]);
    for (std::size_t i = 0; i < hi.size(); ++i) upper[static_cast<Eigen::Index>(i)] = parse_double(hi[i]);
    return PartitionScheme(StateBox::checked(lower, upper), parse_integer<int>(p[0]), order);
}

}  // namespace

double parse_double(std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        fail(ErrorKind::Parse, "invalid number '" + std::string(text) + "'");
    }
    return v;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) fail(ErrorKind::Io, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::Io, "cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string dataset_to_csv(const Dataset& data) {
    const std::size_t n = data.dim();
    std::string out;
    for (std::size_t d = 0; d < n; ++d) out += (d ? ",x" : "x") + std::to_string(d + 1);
    for (std::size_t d = 0; d < n; ++d) out += ",y" + std::to_string(d + 1);
    out += '\n';
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
        for (Eigen::Index d = 0; d < data.inputs.cols(); ++d) {
            if (d) out += ',';
            out += format_double(data.inputs(i, d));
        }
        for (Eigen::Index d = 0; d < data.outputs.cols(); ++d) {
            out += ',';
            out += format_double(data.outputs(i, d));
        }
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(const std::string& text, double noise_std) {
    const auto rows = lines(text);
    if (rows.empty()) fail(ErrorKind::Parse, "dataset CSV is empty");
    const auto header = split(rows.front(), ',');
    if (header.size() < 2 || header.size() % 2 != 0) {
        fail(ErrorKind::Parse, "dataset header must list x1..xn,y1..yn");
    }
    const std::size_t n = header.size() / 2;
    for (std::size_t d = 0; d < n; ++d) {
        if (trim(header[d]) != "x" + std::to_string(d + 1) || trim(header[n + d]) != "y" + std::to_string(d + 1)) {
            fail(ErrorKind::Parse, "dataset header must list x1..xn,y1..yn");
        }
    }
    Dataset data;
    data.noise_std = noise_std;
    const auto samples = static_cast<Eigen::Index>(rows.size() - 1);
    data.inputs.resize(samples, static_cast<Eigen::Index>(n));
    data.outputs.resize(samples, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < samples; ++i) {
        const auto cells = split(rows[static_cast<std::size_t>(i) + 1], ',');
        if (cells.size() != 2 * n) {
            fail(ErrorKind::Parse, "dataset row " + std::to_string(i + 1) + " has " + std::to_string(cells.size()) +
                                       " fields, expected " + std::to_string(2 * n));
        }
        for (std::size_t d = 0; d < n; ++d) {
            data.inputs(i, static_cast<Eigen::Index>(d)) = parse_double(cells[d]);
            data.outputs(i, static_cast<Eigen::Index>(d)) = parse_double(cells[n + d]);
        }
    }
    return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    write_file_atomic(path, dataset_to_csv(data));
}

Dataset load_dataset(const std::filesystem::path& path, double noise_std) {
    return dataset_from_csv(read_file(path), noise_std);
}

std::string model_to_json(const BtgpModel& model) {
    json j;
    j["format"] = "btimc-model";
    j["version"] = 1;
    j["scheme"] = scheme_json(model.scheme());
    j["weights"] = model.kernel().input_weights();
    j["noise_std"] = model.noise_std();
    json cells = json::array();
    const int q = model.scheme().precision();
    for (Eigen::Index s = 0; s < model.mean().rows(); ++s) {
        cells.push_back({{"id", CellId(static_cast<std::uint64_t>(s), q).to_string()},
                         {"mean", vector_json(model.mean().row(s).transpose())},
                         {"variance", vector_json(model.variance().row(s).transpose())}});
    }
    j["cells"] = std::move(cells);
    return j.dump(1);
}

BtgpModel model_from_json(const std::string& text) {
    const json j = parse_json(text);
    return guarded([&] {
        if (j.at("format") != "btimc-model") fail(ErrorKind::Parse, "not a model artifact");
        const PartitionScheme scheme = json_scheme(j.at("scheme"));
        BtKernel kernel(scheme, j.at("weights").get<std::vector<double>>());
        const json& cells = j.at("cells");
        if (cells.size() != scheme.cell_count()) fail(ErrorKind::Parse, "model must list every cell");
        const auto n = static_cast<Eigen::Index>(scheme.dim());
        Eigen::MatrixXd mean(static_cast<Eigen::Index>(cells.size()), n), var(mean.rows(), n);
        for (std::size_t s = 0; s < cells.size(); ++s) {
            const auto row = static_cast<Eigen::Index>(s);
            if (CellId::from_string(cells[s].at("id").get<std::string>()) != CellId(s, scheme.precision())) {
                fail(ErrorKind::Parse, "model cells must be ordered by cell id");
            }
            const Eigen::VectorXd m = json_vector(cells[s].at("mean"));
            const Eigen::VectorXd v = json_vector(cells[s].at("variance"));
            if (m.size() != n || v.size() != n) fail(ErrorKind::Parse, "model cell row has the wrong dimension");
            mean.row(row) = m.transpose();
            var.row(row) = v.transpose();
        }
        return BtgpModel(std::move(kernel), j.at("noise_std").get<double>(), std::move(mean), std::move(var));
    });
}

void save_model(const std::filesystem::path& path, const BtgpModel& model) {
    write_file_atomic(path, model_to_json(model));
}

BtgpModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

std::string error_table_to_json(const ErrorTable& table, const PartitionScheme& scheme) {
    json j;
    j["format"] = "btimc-errors";
    j["version"] = 1;
    j["scheme"] = scheme_json(scheme);
    j["delta"] = table.delta;
    j["eps1_branch"] = to_string(table.branch);
    j["confidence"] = table.confidence;
    j["heuristic"] = table.heuristic;
    json cells = json::array();
    for (Eigen::Index s = 0; s < table.total.rows(); ++s) {
        json row;
        row["id"] = CellId(static_cast<std::uint64_t>(s), scheme.precision()).to_string();
        for (Eigen::Index d = 0; d < table.total.cols(); ++d) {
            const std::string k = std::to_string(d + 1);
            row["eps1_" + k] = table.eps1(s, d);
            row["eps2_" + k] = table.eps2(s, d);
            row["eps3_" + k] = table.eps3(s, d);
            row["eps_" + k] = table.total(s, d);
        }
        cells.push_back(std::move(row));
    }
    j["cells"] = std::move(cells);
    return j.dump(1);
}

ErrorTable error_table_from_json(const std::string& text, const PartitionScheme& scheme) {
    const json j = parse_json(text);
    return guarded([&] {
        if (j.at("format") != "btimc-errors") fail(ErrorKind::Parse, "not an error-table artifact");
        if (!(json_scheme(j.at("scheme")) == scheme)) {
            fail(ErrorKind::InconsistentScheme, "error table was computed on a different partition");
        }
        ErrorTable t;
        t.delta = j.at("delta").get<double>();
        t.branch = parse_eps1_branch(j.at("eps1_branch").get<std::string>());
        t.confidence = j.at("confidence").get<double>();
        t.heuristic = j.at("heuristic").get<bool>();
        const json& cells = j.at("cells");
        if (cells.size() != scheme.cell_count()) fail(ErrorKind::Parse, "error table must list every cell");
        const auto rows = static_cast<Eigen::Index>(cells.size());
        const auto n = static_cast<Eigen::Index>(scheme.dim());
        t.eps1.resize(rows, n);
        t.eps2.resize(rows, n);
        t.eps3.resize(rows, n);
        t.total.resize(rows, n);
        for (Eigen::Index s = 0; s < rows; ++s) {
            const json& row = cells[static_cast<std::size_t>(s)];
            for (Eigen::Index d = 0; d < n; ++d) {
                const std::string k = std::to_string(d + 1);
                t.eps1(s, d) = row.at("eps1_" + k).get<double>();
                t.eps2(s, d) = row.at("eps2_" + k).get<double>();
                t.eps3(s, d) = row.at("eps3_" + k).get<double>();
                t.total(s, d) = row.at("eps_" + k).get<double>();
            }
        }
        return t;
    });
}

void save_error_table(const std::filesystem::path& path, const ErrorTable& table, const PartitionScheme& scheme) {
    write_file_atomic(path, error_table_to_json(table, scheme));
}

ErrorTable load_error_table(const std::filesystem::path& path, const PartitionScheme& scheme) {
    return error_table_from_json(read_file(path), scheme);
}

ImcText imc_to_text(const Imc& imc) {
    ImcText out;
    const std::string header = scheme_header(imc.scheme) + "# initial " + imc.initial.to_string() + '\n';
    out.transitions = "# btimc-imc transitions: src dst t_lower t_upper\n" + header;
    for (std::size_t s = 0; s < imc.state_count(); ++s) {
        for (std::size_t k = imc.row_begin(s); k < imc.row_end(s); ++k) {
            out.transitions += std::to_string(s) + ' ' + std::to_string(imc.column[k]) + ' ' +
                               format_double(imc.lower[k]) + ' ' + format_double(imc.upper[k]) + '\n';
        }
    }
    out.states = "# btimc-imc states: cell r_lower r_upper l_lower l_upper pruned_mass\n" + header + "# target";
    for (std::size_t s = 0; s < imc.state_count(); ++s) {
        if (imc.target[s]) out.states += ' ' + std::to_string(s);
    }
    out.states += '\n';
    for (std::size_t s = 0; s < imc.state_count(); ++s) {
        out.states += std::to_string(s) + ' ' + format_double(imc.reward_lower[s]) + ' ' +
                      format_double(imc.reward_upper[s]) + ' ' + format_double(imc.loss_lower[s]) + ' ' +
                      format_double(imc.loss_upper[s]) + ' ' + format_double(imc.pruned[s]) + '\n';
    }
    return out;
}

Imc imc_from_text(const ImcText& text) {
    Imc imc;
    imc.scheme = header_scheme(text.states);
    if (!(header_scheme(text.transitions) == imc.scheme)) {
        fail(ErrorKind::InconsistentScheme, "IMC transition and state files describe different partitions");
    }
    const auto h = header_fields(text.states);
    const auto& init = header_field(h, "initial");
    if (init.size() != 1) fail(ErrorKind::Parse, "malformed initial header");
    imc.initial = CellId::from_string(init[0]);
    if (imc.initial.length() != imc.scheme.precision()) fail(ErrorKind::Parse, "initial cell precision mismatch");

    const std::size_t n = imc.scheme.cell_count();
    imc.target.assign(n, 0);
    for (auto w : header_field(h, "target")) {
        const auto s = parse_integer<std::uint64_t>(w);
        if (s >= n) fail(ErrorKind::Parse, "target cell out of range");
        imc.target[s] = 1;
    }
    imc.reward_lower.assign(n, 0.0);
    imc.reward_upper.assign(n, 0.0);
    imc.loss_lower.assign(n, 0.0);
    imc.loss_upper.assign(n, 0.0);
    imc.pruned.assign(n, 0.0);
    std::vector<std::uint8_t> seen(n, 0);
    for (auto line : lines(text.states)) {
        if (trim(line).front() == '#') continue;
        const auto w = words(line);
        if (w.size() != 6) fail(ErrorKind::Parse, "state line must have 6 fields");
        const auto s = parse_integer<std::uint64_t>(w[0]);
        if (s >= n || seen[s]) fail(ErrorKind::Parse, "state id out of range or repeated");
        seen[s] = 1;
        imc.reward_lower[s] = parse_double(w[1]);
        imc.reward_upper[s] = parse_double(w[2]);
        imc.loss_lower[s] = parse_double(w[3]);
        imc.loss_upper[s] = parse_double(w[4]);
        imc.pruned[s] = parse_double(w[5]);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!seen[s]) fail(ErrorKind::Parse, "state table misses cell " + std::to_string(s));
    }

    imc.row_start.assign(n + 1, 0);
    std::uint64_t previous_src = 0;
    for (auto line : lines(text.transitions)) {
        if (trim(line).front() == '#') continue;
        const auto w = words(line);
        if (w.size() != 4) fail(ErrorKind::Parse, "transition line must have 4 fields");
        const auto src = parse_integer<std::uint64_t>(w[0]);
        const auto dst = parse_integer<std::uint64_t>(w[1]);
        if (src >= n || dst >= n) fail(ErrorKind::Parse, "transition cell out of range");
        if (src < previous_src) fail(ErrorKind::Parse, "transitions must be ordered by source cell");
        previous_src = src;
        ++imc.row_start[src + 1];
        imc.column.push_back(static_cast<std::uint32_t>(dst));
        imc.lower.push_back(parse_double(w[2]));
        imc.upper.push_back(parse_double(w[3]));
    }
    for (std::size_t s = 0; s < n; ++s) imc.row_start[s + 1] += imc.row_start[s];
    imc.validate();
    return imc;
}

void save_imc(const std::filesystem::path& stem, const Imc& imc) {
    const ImcText text = imc_to_text(imc);
    std::filesystem::path tra = stem, sta = stem;
    tra += ".tra";
    sta += ".sta";
    write_file_atomic(tra, text.transitions);
    write_file_atomic(sta, text.states);
}

Imc load_imc(const std::filesystem::path& stem) {
    std::filesystem::path tra = stem, sta = stem;
    tra += ".tra";
    sta += ".sta";
    return imc_from_text({read_file(tra), read_file(sta)});
}

std::string values_to_text(const ValueBounds& bounds, const PartitionScheme& scheme) {
    std::string out = "# cell_id bitstring v_min v_max\n";
    for (std::size_t s = 0; s < bounds.v_min.size(); ++s) {
        out += std::to_string(s) + ' ' + CellId(s, scheme.precision()).to_string() + ' ' +
               format_double(bounds.v_min[s]) + ' ' + format_double(bounds.v_max[s]) + '\n';
    }
    return out;
}

ValueBounds values_from_text(const std::string& text, const PartitionScheme& scheme) {
    const std::size_t n = scheme.cell_count();
    ValueBounds b;
    b.v_min.assign(n, 0.0);
    b.v_max.assign(n, 1.0);
    std::vector<std::uint8_t> seen(n, 0);
    for (auto line : lines(text)) {
        if (trim(line).front() == '#') continue;
        const auto w = words(line);
        if (w.size() != 4) fail(ErrorKind::Parse, "value line must have 4 fields");
        const auto s = parse_integer<std::uint64_t>(w[0]);
        if (s >= n || seen[s]) fail(ErrorKind::Parse, "value cell out of range or repeated");
        if (CellId::from_string(w[1]) != CellId(s, scheme.precision())) {
            fail(ErrorKind::Parse, "value line bit string does not match its cell id");
        }
        seen[s] = 1;
        b.v_min[s] = parse_double(w[2]);
        b.v_max[s] = parse_double(w[3]);
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (!seen[s]) fail(ErrorKind::Parse, "value file misses cell " + std::to_string(s));
    }
    return b;
}

std::string certificate_line(const Certificate& c) {
    return "certificate initial=" + c.initial.to_string() + " v_min=" + format_double(c.v_min) +
           " v_max=" + format_double(c.v_max) + " confidence=" + format_double(c.confidence) +
           " nu=" + format_double(c.nu) + " iterations_min=" + std::to_string(c.iterations_min) +
           " iterations_max=" + std::to_string(c.iterations_max) + " gap=" + format_double(c.gap) +
           " inflation=" + format_double(c.inflation) + " converged=" + (c.converged ? "true" : "false");
}

}  // namespace btimc
