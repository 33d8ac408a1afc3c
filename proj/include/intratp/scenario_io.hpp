#pragma once

// Scenario ingestion and result writing.
//
// On-disk layout of a scenario:
//   manifest.json     resolution, horizon, node list, file references,
//                     per-category ramp rates, netting + correction config
//   network.json      nodes, AC lines (ntc_forward, ntc_reverse, trm),
//                     HVDC lines (ramp_mw_per_min, capacities)
//   <category>.csv    header `node,tp_index,energy_mwh`   (per node series)
//   ac.csv, hvdc.csv  header `from,to,tp_index,energy_mwh` (per line series)
//
// TP indices are 1-based.  Energies are MWh per TP on disk; power is MW
// internally.  Every (node, category) and every line must carry exactly one
// complete series — gaps, duplicates, NaN, or negative values in
// nonnegative categories are rejected with the offending file and row
// named.  All writers are deterministic: identical data produces
// byte-identical files.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "intratp/csv.hpp"
#include "intratp/disaggregate.hpp"
#include "intratp/errors.hpp"
#include "intratp/metrics.hpp"
#include "intratp/netting.hpp"
#include "intratp/timeseries.hpp"
#include "intratp/version.hpp"

namespace intratp {

// ---- loaded scenario ---------------------------------------------------------

/// Per-TP energies of one node, one series per category.
struct NodeTp {
    TpSeries hydro;
    TpSeries flexible;
    TpSeries thermal;
    TpSeries nuclear;
    TpSeries vres;
    TpSeries demand;

    const TpSeries& series(Category category) const {
        switch (category) {
            case Category::hydro: return hydro;
            case Category::flexible: return flexible;
            case Category::thermal: return thermal;
            case Category::nuclear: return nuclear;
            case Category::vres: return vres;
            case Category::demand: return demand;
        }
        return demand;  // unreachable
    }
};

/// Ramp-rate assumption for one controllable category; w_max is filled in
/// per component from the data (horizon maximum, floored at 1 MW).
struct CategoryRampRate {
    RampMode mode = RampMode::percent_of_max;
    double rate = 0.0;
};

struct CorrectionConfig {
    double e_min = 0.0;  // MWh^2; 0 means the per-series default
    std::size_t max_iterations = kDefaultMaxIterations;
};

/// Fully validated in-memory scenario at TP resolution plus configuration.
struct Scenario {
    Resolution res;
    std::size_t horizon_tps = 0;
    std::vector<std::string> node_names;  // sorted
    std::vector<NodeTp> node_series;      // parallel to node_names
    Network network;
    std::vector<TpSeries> ac_energy;    // parallel to network.ac_lines
    std::vector<TpSeries> hvdc_energy;  // parallel to network.hvdc_lines
    std::map<Category, CategoryRampRate> ramp_rates;
    NettingConfig netting;
    CorrectionConfig correction;

    std::size_t node_index(const std::string& name) const {
        const auto it = std::find(node_names.begin(), node_names.end(), name);
        if (it == node_names.end()) {
            throw ValidationError("Scenario: unknown node '" + name + "'");
        }
        return static_cast<std::size_t>(it - node_names.begin());
    }

    /// Horizon maximum of the basic power, floored at 1 MW.
    double g_max(std::size_t node, Category category) const {
        const TpSeries& series = node_series[node].series(category);
        double max_level = 0.0;
        for (std::size_t t = 0; t < series.size(); ++t) {
            max_level = std::max(max_level, series[t] / res.tp_hours());
        }
        return std::max(max_level, 1.0);
    }

    /// RampSpec of one controllable component, with w_max resolved.
    RampSpec ramp_spec(std::size_t node, Category category) const {
        const auto it = ramp_rates.find(category);
        if (it == ramp_rates.end()) {
            throw ValidationError(std::string("Scenario: no ramp rate for category ") +
                                  to_string(category));
        }
        if (it->second.mode == RampMode::percent_of_max) {
            return RampSpec::percent_of_max(it->second.rate, g_max(node, category));
        }
        return RampSpec::absolute(it->second.rate);
    }
};

// ---- helpers -------------------------------------------------------------------

namespace iodetail {

inline void require_identifier(const std::string& name, const std::string& context) {
    if (name.empty()) {
        throw ValidationError(context + ": empty identifier");
    }
    for (const char c : name) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) {
            throw ValidationError(context + ": identifier '" + name +
                                  "' may only contain letters, digits, '_' and '-'");
        }
    }
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file '" + path + "'");
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("'" + path + "': invalid JSON: " + e.what());
    }
    return parsed;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ValidationError("cannot write file '" + path + "'");
    }
    out << content;
    if (!out) {
        throw ValidationError("write failed for '" + path + "'");
    }
}

template <typename T>
T field(const nlohmann::json& object, const std::string& key, const std::string& context) {
    if (!object.contains(key)) {
        throw ValidationError(context + ": missing field '" + key + "'");
    }
    try {
        return object.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(context + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field_or(const nlohmann::json& object, const std::string& key, T fallback,
           const std::string& context) {
    if (!object.contains(key) || object.at(key).is_null()) {
        return fallback;
    }
    try {
        return object.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(context + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace iodetail

// ---- network file ---------------------------------------------------------------

inline Network load_network(const std::string& path) {
    const nlohmann::json doc = iodetail::read_json_file(path);
    const std::string context = "'" + path + "'";
    Network network;
    network.nodes = iodetail::field<std::vector<std::string>>(doc, "nodes", context);
    for (const std::string& node : network.nodes) {
        iodetail::require_identifier(node, context + " nodes");
    }
    for (const auto& entry : iodetail::field_or<nlohmann::json>(
             doc, "ac_lines", nlohmann::json::array(), context)) {
        AcLine line;
        line.from = iodetail::field<std::string>(entry, "from", context + " ac_lines");
        line.to = iodetail::field<std::string>(entry, "to", context + " ac_lines");
        line.ntc_forward =
            iodetail::field<double>(entry, "ntc_forward", context + " ac_lines");
        line.ntc_reverse =
            iodetail::field<double>(entry, "ntc_reverse", context + " ac_lines");
        line.trm = iodetail::field_or<double>(entry, "trm", 0.0, context + " ac_lines");
        network.ac_lines.push_back(std::move(line));
    }
    for (const auto& entry : iodetail::field_or<nlohmann::json>(
             doc, "hvdc_lines", nlohmann::json::array(), context)) {
        HvdcLine line;
        line.from = iodetail::field<std::string>(entry, "from", context + " hvdc_lines");
        line.to = iodetail::field<std::string>(entry, "to", context + " hvdc_lines");
        line.ramp_mw_per_min =
            iodetail::field<double>(entry, "ramp_mw_per_min", context + " hvdc_lines");
        line.capacity_forward =
            iodetail::field<double>(entry, "capacity_forward", context + " hvdc_lines");
        line.capacity_reverse =
            iodetail::field<double>(entry, "capacity_reverse", context + " hvdc_lines");
        network.hvdc_lines.push_back(std::move(line));
    }
    for (const HvdcLine& line : network.hvdc_lines) {
        iodetail::require_identifier(line.from, context + " hvdc_lines");
        iodetail::require_identifier(line.to, context + " hvdc_lines");
        // Duplicate HVDC corridors would collide in output file names.
        int count = 0;
        for (const HvdcLine& other : network.hvdc_lines) {
            if (other.from == line.from && other.to == line.to) {
                ++count;
            }
        }
        if (count > 1) {
            throw ValidationError(context + ": duplicate HVDC line " + line.from + "->" +
                                  line.to);
        }
    }
    validate(network);
    return network;
}

inline void save_network(const Network& network, const std::string& path) {
    nlohmann::json doc;
    doc["nodes"] = network.nodes;
    doc["ac_lines"] = nlohmann::json::array();
    for (const AcLine& line : network.ac_lines) {
        doc["ac_lines"].push_back({{"from", line.from},
                                   {"to", line.to},
                                   {"ntc_forward", line.ntc_forward},
                                   {"ntc_reverse", line.ntc_reverse},
                                   {"trm", line.trm}});
    }
    doc["hvdc_lines"] = nlohmann::json::array();
    for (const HvdcLine& line : network.hvdc_lines) {
        doc["hvdc_lines"].push_back({{"from", line.from},
                                     {"to", line.to},
                                     {"ramp_mw_per_min", line.ramp_mw_per_min},
                                     {"capacity_forward", line.capacity_forward},
                                     {"capacity_reverse", line.capacity_reverse}});
    }
    iodetail::write_text_file(path, doc.dump(2) + "\n");
}

// ---- series CSV files --------------------------------------------------------------

inline constexpr const char* kNodeSeriesHeader = "node,tp_index,energy_mwh";
inline constexpr const char* kLineSeriesHeader = "from,to,tp_index,energy_mwh";

/// Read a per-node category file: every node in `nodes` must carry exactly
/// one value for every TP 1..horizon; unknown nodes are rejected.  Values
/// must be finite, and nonnegative when `nonnegative` is set.
inline std::map<std::string, std::vector<double>> read_node_series_csv(
    const std::string& path, const std::vector<std::string>& nodes, std::size_t horizon,
    bool nonnegative) {
    const std::vector<csvio::CsvRow> rows = csvio::read_csv(path, kNodeSeriesHeader);
    std::map<std::string, std::vector<double>> out;
    std::map<std::string, std::vector<bool>> seen;
    for (const std::string& node : nodes) {
        out[node].assign(horizon, 0.0);
        seen[node].assign(horizon, false);
    }
    for (const csvio::CsvRow& row : rows) {
        const std::string context = "'" + path + "' line " + csvio::format_size(row.line_number);
        if (row.fields.size() != 3) {
            throw ValidationError(context + ": expected 3 fields, found " +
                                  csvio::format_size(row.fields.size()));
        }
        const std::string& node = row.fields[0];
        const auto it = out.find(node);
        if (it == out.end()) {
            throw ValidationError(context + ": unknown node '" + node + "'");
        }
        const std::size_t tp = csvio::parse_index(row.fields[1], context);
        if (tp < 1 || tp > horizon) {
            throw ValidationError(context + ": tp_index " + csvio::format_size(tp) +
                                  " outside 1.." + csvio::format_size(horizon));
        }
        const double energy = csvio::parse_double(row.fields[2], context);
        if (!std::isfinite(energy)) {
            throw ValidationError(context + ": non-finite energy");
        }
        if (nonnegative && energy < 0.0) {
            throw ValidationError(context + ": negative energy " +
                                  csvio::format_double(energy) +
                                  " in a nonnegative category");
        }
        if (seen[node][tp - 1]) {
            throw ValidationError(context + ": duplicate entry for node '" + node +
                                  "' TP " + csvio::format_size(tp));
        }
        seen[node][tp - 1] = true;
        it->second[tp - 1] = energy;
    }
    for (const std::string& node : nodes) {
        for (std::size_t t = 0; t < horizon; ++t) {
            if (!seen[node][t]) {
                throw ValidationError("'" + path + "': missing TP " +
                                      csvio::format_size(t + 1) + " for node '" + node + "'");
            }
        }
    }
    return out;
}

inline void write_node_series_csv(const std::string& path,
                                  const std::vector<std::string>& nodes,
                                  const std::vector<std::vector<double>>& values) {
    csvio::CsvWriter writer(path);
    writer.line(kNodeSeriesHeader);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        for (std::size_t t = 0; t < values[n].size(); ++t) {
            writer.line(nodes[n] + "," + csvio::format_size(t + 1) + "," +
                        csvio::format_double(values[n][t]));
        }
    }
    writer.finish();
}

/// Read a per-line file (AC or HVDC); `lines` gives the expected (from, to)
/// pairs in network order.
inline std::vector<std::vector<double>> read_line_series_csv(
    const std::string& path, const std::vector<std::pair<std::string, std::string>>& lines,
    std::size_t horizon) {
    const std::vector<csvio::CsvRow> rows = csvio::read_csv(path, kLineSeriesHeader);
    std::vector<std::vector<double>> out(lines.size(), std::vector<double>(horizon, 0.0));
    std::vector<std::vector<bool>> seen(lines.size(), std::vector<bool>(horizon, false));
    auto line_index = [&](const std::string& from, const std::string& to) {
        for (std::size_t a = 0; a < lines.size(); ++a) {
            if (lines[a].first == from && lines[a].second == to) {
                return a;
            }
        }
        return lines.size();
    };
    for (const csvio::CsvRow& row : rows) {
        const std::string context = "'" + path + "' line " + csvio::format_size(row.line_number);
        if (row.fields.size() != 4) {
            throw ValidationError(context + ": expected 4 fields, found " +
                                  csvio::format_size(row.fields.size()));
        }
        const std::size_t a = line_index(row.fields[0], row.fields[1]);
        if (a == lines.size()) {
            throw ValidationError(context + ": unknown line " + row.fields[0] + "->" +
                                  row.fields[1]);
        }
        const std::size_t tp = csvio::parse_index(row.fields[2], context);
        if (tp < 1 || tp > horizon) {
            throw ValidationError(context + ": tp_index " + csvio::format_size(tp) +
                                  " outside 1.." + csvio::format_size(horizon));
        }
        const double energy = csvio::parse_double(row.fields[3], context);
        if (!std::isfinite(energy)) {
            throw ValidationError(context + ": non-finite energy");
        }
        if (seen[a][tp - 1]) {
            throw ValidationError(context + ": duplicate entry for line " + row.fields[0] +
                                  "->" + row.fields[1] + " TP " + csvio::format_size(tp));
        }
        seen[a][tp - 1] = true;
        out[a][tp - 1] = energy;
    }
    for (std::size_t a = 0; a < lines.size(); ++a) {
        for (std::size_t t = 0; t < horizon; ++t) {
            if (!seen[a][t]) {
                throw ValidationError("'" + path + "': missing TP " +
                                      csvio::format_size(t + 1) + " for line " +
                                      lines[a].first + "->" + lines[a].second);
            }
        }
    }
    return out;
}

inline void write_line_series_csv(
    const std::string& path, const std::vector<std::pair<std::string, std::string>>& lines,
    const std::vector<std::vector<double>>& values) {
    csvio::CsvWriter writer(path);
    writer.line(kLineSeriesHeader);
    for (std::size_t a = 0; a < lines.size(); ++a) {
        for (std::size_t t = 0; t < values[a].size(); ++t) {
            writer.line(lines[a].first + "," + lines[a].second + "," +
                        csvio::format_size(t + 1) + "," + csvio::format_double(values[a][t]));
        }
    }
    writer.finish();
}

// ---- high-resolution CSV files ------------------------------------------------------

inline constexpr const char* kHrSeriesHeader = "step_index,power_mw";

inline void write_hr_csv(const std::string& path, const std::vector<double>& values) {
    csvio::CsvWriter writer(path);
    writer.line(kHrSeriesHeader);
    for (std::size_t j = 0; j < values.size(); ++j) {
        writer.line(csvio::format_size(j + 1) + "," + csvio::format_double(values[j]));
    }
    writer.finish();
}

/// Read a high-resolution series written by write_hr_csv; step indices must
/// be the consecutive sequence 1..T̂.
inline std::vector<double> read_hr_csv(const std::string& path) {
    const std::vector<csvio::CsvRow> rows = csvio::read_csv(path, kHrSeriesHeader);
    std::vector<double> values;
    values.reserve(rows.size());
    for (const csvio::CsvRow& row : rows) {
        const std::string context = "'" + path + "' line " + csvio::format_size(row.line_number);
        if (row.fields.size() != 2) {
            throw ValidationError(context + ": expected 2 fields, found " +
                                  csvio::format_size(row.fields.size()));
        }
        const std::size_t step = csvio::parse_index(row.fields[0], context);
        if (step != values.size() + 1) {
            throw ValidationError(context + ": expected step_index " +
                                  csvio::format_size(values.size() + 1) + ", found " +
                                  csvio::format_size(step));
        }
        const double value = csvio::parse_double(row.fields[1], context);
        if (!std::isfinite(value)) {
            throw ValidationError(context + ": non-finite value");
        }
        values.push_back(value);
    }
    if (values.empty()) {
        throw ValidationError("'" + path + "': no data rows");
    }
    return values;
}

// ---- manifest --------------------------------------------------------------------

namespace iodetail {

inline RampMode parse_ramp_mode(const std::string& text, const std::string& context) {
    if (text == "percent_of_max") {
        return RampMode::percent_of_max;
    }
    if (text == "absolute") {
        return RampMode::absolute;
    }
    throw ValidationError(context + ": unknown ramp mode '" + text + "'");
}

inline const char* ramp_mode_name(RampMode mode) {
    return mode == RampMode::percent_of_max ? "percent_of_max" : "absolute";
}

}  // namespace iodetail

/// Table I normal-ramping rates (%/min of g_max).
inline std::map<Category, CategoryRampRate> normal_ramp_rates() {
    return {{Category::hydro, {RampMode::percent_of_max, 5.0}},
            {Category::flexible, {RampMode::percent_of_max, 5.0}},
            {Category::thermal, {RampMode::percent_of_max, 3.0}},
            {Category::nuclear, {RampMode::percent_of_max, 1.5}}};
}

/// Table I fast-ramping rates (%/min of g_max).
inline std::map<Category, CategoryRampRate> fast_ramp_rates() {
    return {{Category::hydro, {RampMode::percent_of_max, 15.0}},
            {Category::flexible, {RampMode::percent_of_max, 15.0}},
            {Category::thermal, {RampMode::percent_of_max, 10.0}},
            {Category::nuclear, {RampMode::percent_of_max, 5.0}}};
}

/// Load and fully validate a scenario from its manifest.  Relative file
/// references resolve against the manifest's directory.
inline Scenario load_scenario(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const nlohmann::json doc = iodetail::read_json_file(manifest_path);
    const std::string context = "'" + manifest_path + "'";
    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& name) { return (base / name).string(); };

    const nlohmann::json res_doc =
        iodetail::field<nlohmann::json>(doc, "resolution", context);
    const Resolution res(
        iodetail::field<int>(res_doc, "tp_minutes", context + " resolution"),
        iodetail::field<int>(res_doc, "step_minutes", context + " resolution"));

    const long long horizon_raw = iodetail::field<long long>(doc, "horizon_tps", context);
    if (horizon_raw < 2) {
        throw ValidationError(context + ": horizon_tps must be at least 2");
    }
    const auto horizon = static_cast<std::size_t>(horizon_raw);

    std::vector<std::string> nodes =
        iodetail::field<std::vector<std::string>>(doc, "nodes", context);
    if (nodes.empty()) {
        throw ValidationError(context + ": node list is empty");
    }
    std::sort(nodes.begin(), nodes.end());
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (nodes[i] == nodes[i + 1]) {
            throw ValidationError(context + ": duplicate node '" + nodes[i] + "'");
        }
    }
    for (const std::string& node : nodes) {
        iodetail::require_identifier(node, context + " nodes");
    }

    const Network network =
        load_network(resolve(iodetail::field<std::string>(doc, "network_file", context)));
    {
        std::vector<std::string> network_nodes = network.nodes;
        std::sort(network_nodes.begin(), network_nodes.end());
        if (network_nodes != nodes) {
            throw ValidationError(context + ": manifest nodes and network nodes differ");
        }
    }

    const nlohmann::json files = iodetail::field<nlohmann::json>(doc, "series_files", context);
    std::map<Category, std::map<std::string, std::vector<double>>> per_category;
    for (Category category : kAllCategories) {
        const std::string file = iodetail::field<std::string>(
            files, to_string(category), context + " series_files");
        // vRES, demand and all production categories are nonnegative
        // energies per TP; only flexible may swing negative (storage).
        const bool nonnegative = category != Category::flexible;
        per_category[category] =
            read_node_series_csv(resolve(file), nodes, horizon, nonnegative);
    }

    std::vector<std::pair<std::string, std::string>> ac_pairs;
    ac_pairs.reserve(network.ac_lines.size());
    for (const AcLine& line : network.ac_lines) {
        ac_pairs.emplace_back(line.from, line.to);
    }
    std::vector<std::pair<std::string, std::string>> hvdc_pairs;
    hvdc_pairs.reserve(network.hvdc_lines.size());
    for (const HvdcLine& line : network.hvdc_lines) {
        hvdc_pairs.emplace_back(line.from, line.to);
    }
    std::vector<std::vector<double>> ac_values(network.ac_lines.size());
    if (!network.ac_lines.empty() || files.contains("ac")) {
        const std::string file =
            iodetail::field<std::string>(files, "ac", context + " series_files");
        ac_values = read_line_series_csv(resolve(file), ac_pairs, horizon);
    }
    std::vector<std::vector<double>> hvdc_values(network.hvdc_lines.size());
    if (!network.hvdc_lines.empty() || files.contains("hvdc")) {
        const std::string file =
            iodetail::field<std::string>(files, "hvdc", context + " series_files");
        hvdc_values = read_line_series_csv(resolve(file), hvdc_pairs, horizon);
    }

    Scenario scenario{res,
                      horizon,
                      nodes,
                      {},
                      network,
                      {},
                      {},
                      normal_ramp_rates(),
                      NettingConfig{},
                      CorrectionConfig{}};
    for (const std::string& node : nodes) {
        scenario.node_series.push_back(NodeTp{
            TpSeries(per_category[Category::hydro][node]),
            TpSeries(per_category[Category::flexible][node]),
            TpSeries(per_category[Category::thermal][node]),
            TpSeries(per_category[Category::nuclear][node]),
            TpSeries(per_category[Category::vres][node]),
            TpSeries(per_category[Category::demand][node]),
        });
    }
    for (auto& values : ac_values) {
        scenario.ac_energy.emplace_back(std::move(values));
    }
    for (auto& values : hvdc_values) {
        scenario.hvdc_energy.emplace_back(std::move(values));
    }

    if (doc.contains("ramp_rates")) {
        const nlohmann::json& table = doc.at("ramp_rates");
        for (Category category :
             {Category::hydro, Category::flexible, Category::thermal, Category::nuclear}) {
            if (!table.contains(to_string(category))) {
                continue;
            }
            const nlohmann::json& entry = table.at(to_string(category));
            const std::string entry_context =
                context + " ramp_rates." + to_string(category);
            CategoryRampRate rate;
            rate.mode = iodetail::parse_ramp_mode(
                iodetail::field<std::string>(entry, "mode", entry_context), entry_context);
            rate.rate = iodetail::field<double>(entry, "rate", entry_context);
            if (!(rate.rate > 0.0)) {
                throw ValidationError(entry_context + ": rate must be positive");
            }
            scenario.ramp_rates[category] = rate;
        }
    }

    if (doc.contains("netting")) {
        const nlohmann::json& netting = doc.at("netting");
        const std::string netting_context = context + " netting";
        scenario.netting.alpha =
            iodetail::field_or<double>(netting, "alpha", scenario.netting.alpha,
                                       netting_context);
        scenario.netting.use_trm = iodetail::field_or<bool>(
            netting, "use_trm", scenario.netting.use_trm, netting_context);
        if (netting.contains("window_tps") && !netting.at("window_tps").is_null()) {
            const nlohmann::json& window = netting.at("window_tps");
            if (window.is_string()) {
                if (window.get<std::string>() != "full") {
                    throw ValidationError(netting_context +
                                          ": window_tps must be a positive integer or \"full\"");
                }
                scenario.netting.window_tps = 0;
            } else {
                const long long tps =
                    iodetail::field<long long>(netting, "window_tps", netting_context);
                if (tps < 1) {
                    throw ValidationError(netting_context +
                                          ": window_tps must be a positive integer or \"full\"");
                }
                scenario.netting.window_tps = static_cast<std::size_t>(tps);
            }
        }
        scenario.netting.solver_tolerance = iodetail::field_or<double>(
            netting, "solver_tolerance", scenario.netting.solver_tolerance, netting_context);
        validate(scenario.netting);
    }

    if (doc.contains("correction")) {
        const nlohmann::json& correction = doc.at("correction");
        const std::string correction_context = context + " correction";
        scenario.correction.e_min =
            iodetail::field_or<double>(correction, "e_min", 0.0, correction_context);
        if (!std::isfinite(scenario.correction.e_min) || scenario.correction.e_min < 0.0) {
            throw ValidationError(correction_context + ": e_min must not be negative");
        }
        const long long max_iterations = iodetail::field_or<long long>(
            correction, "max_iterations",
            static_cast<long long>(scenario.correction.max_iterations), correction_context);
        if (max_iterations < 1) {
            throw ValidationError(correction_context + ": max_iterations must be >= 1");
        }
        scenario.correction.max_iterations = static_cast<std::size_t>(max_iterations);
    }

    return scenario;
}

/// Write a scenario back to disk (manifest, network, and all series files).
/// Loading the result yields an identical scenario.
inline void save_scenario(const Scenario& scenario, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const fs::path base(directory);

    save_network(scenario.network, (base / "network.json").string());

    for (Category category : kAllCategories) {
        std::vector<std::vector<double>> values;
        values.reserve(scenario.node_names.size());
        for (const NodeTp& node : scenario.node_series) {
            values.push_back(node.series(category).values());
        }
        write_node_series_csv((base / (std::string(to_string(category)) + ".csv")).string(),
                              scenario.node_names, values);
    }
    {
        std::vector<std::pair<std::string, std::string>> pairs;
        std::vector<std::vector<double>> values;
        for (std::size_t a = 0; a < scenario.network.ac_lines.size(); ++a) {
            pairs.emplace_back(scenario.network.ac_lines[a].from,
                               scenario.network.ac_lines[a].to);
            values.push_back(scenario.ac_energy[a].values());
        }
        write_line_series_csv((base / "ac.csv").string(), pairs, values);
    }
    {
        std::vector<std::pair<std::string, std::string>> pairs;
        std::vector<std::vector<double>> values;
        for (std::size_t b = 0; b < scenario.network.hvdc_lines.size(); ++b) {
            pairs.emplace_back(scenario.network.hvdc_lines[b].from,
                               scenario.network.hvdc_lines[b].to);
            values.push_back(scenario.hvdc_energy[b].values());
        }
        write_line_series_csv((base / "hvdc.csv").string(), pairs, values);
    }

    nlohmann::json manifest;
    manifest["resolution"] = {{"tp_minutes", scenario.res.tp_minutes()},
                              {"step_minutes", scenario.res.step_minutes()}};
    manifest["horizon_tps"] = scenario.horizon_tps;
    manifest["nodes"] = scenario.node_names;
    manifest["network_file"] = "network.json";
    nlohmann::json files;
    for (Category category : kAllCategories) {
        files[to_string(category)] = std::string(to_string(category)) + ".csv";
    }
    files["ac"] = "ac.csv";
    files["hvdc"] = "hvdc.csv";
    manifest["series_files"] = files;
    nlohmann::json rates;
    for (const auto& [category, rate] : scenario.ramp_rates) {
        rates[to_string(category)] = {{"mode", iodetail::ramp_mode_name(rate.mode)},
                                      {"rate", rate.rate}};
    }
    manifest["ramp_rates"] = rates;
    manifest["netting"] = {
        {"alpha", scenario.netting.alpha},
        {"use_trm", scenario.netting.use_trm},
        {"solver_tolerance", scenario.netting.solver_tolerance},
    };
    if (scenario.netting.window_tps == 0) {
        manifest["netting"]["window_tps"] = "full";
    } else {
        manifest["netting"]["window_tps"] = scenario.netting.window_tps;
    }
    manifest["correction"] = {{"max_iterations", scenario.correction.max_iterations}};
    if (scenario.correction.e_min > 0.0) {
        manifest["correction"]["e_min"] = scenario.correction.e_min;
    }
    iodetail::write_text_file((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

// ---- result files ---------------------------------------------------------------------

inline CauseLabel parse_cause_label(const std::string& text, const std::string& context) {
    if (text == "zero") {
        return CauseLabel::zero;
    }
    if (text == "ramping") {
        return CauseLabel::ramping;
    }
    if (text == "variability") {
        return CauseLabel::variability;
    }
    throw ValidationError(context + ": unknown cause label '" + text + "'");
}

/// Read one node's need file (step_index,need_mw,label) back.
inline std::pair<std::vector<double>, std::vector<CauseLabel>> read_need_csv(
    const std::string& path) {
    const std::vector<csvio::CsvRow> rows = csvio::read_csv(path, "step_index,need_mw,label");
    std::vector<double> values;
    std::vector<CauseLabel> labels;
    values.reserve(rows.size());
    labels.reserve(rows.size());
    for (const csvio::CsvRow& row : rows) {
        const std::string context = "'" + path + "' line " + csvio::format_size(row.line_number);
        if (row.fields.size() != 3) {
            throw ValidationError(context + ": expected 3 fields, found " +
                                  csvio::format_size(row.fields.size()));
        }
        const std::size_t step = csvio::parse_index(row.fields[0], context);
        if (step != values.size() + 1) {
            throw ValidationError(context + ": expected step_index " +
                                  csvio::format_size(values.size() + 1) + ", found " +
                                  csvio::format_size(step));
        }
        const double value = csvio::parse_double(row.fields[1], context);
        if (!std::isfinite(value)) {
            throw ValidationError(context + ": non-finite value");
        }
        values.push_back(value);
        labels.push_back(parse_cause_label(row.fields[2], context));
    }
    if (values.empty()) {
        throw ValidationError("'" + path + "': no data rows");
    }
    return {std::move(values), std::move(labels)};
}

// ---- result writing -----------------------------------------------------------------

/// Everything the analysis stage produces for one node.
struct NodeAnalysis {
    std::string node;
    BalancingStats stats;
    std::vector<HistogramBin> histogram;
    std::vector<CauseLabel> labels;
};

/// Write the netting outputs: per-node need series with cause labels,
/// per-line AC flows, and solver facts.  Files land under
/// `<directory>/need`, `<directory>/flows` and `<directory>/netting.json`.
inline void write_netting_outputs(const NettingResult& result, const Network& network,
                                  const std::vector<std::vector<CauseLabel>>& labels,
                                  const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(directory) / "need");
    fs::create_directories(fs::path(directory) / "flows");

    for (std::size_t n = 0; n < result.node_names.size(); ++n) {
        csvio::CsvWriter writer(
            (fs::path(directory) / "need" / ("need__" + result.node_names[n] + ".csv"))
                .string());
        writer.line("step_index,need_mw,label");
        const HrSeries& need = result.balancing_need[n];
        for (std::size_t j = 0; j < need.size(); ++j) {
            writer.line(csvio::format_size(j + 1) + "," + csvio::format_double(need[j]) + "," +
                        to_string(labels[n][j]));
        }
        writer.finish();
    }

    for (std::size_t a = 0; a < network.ac_lines.size(); ++a) {
        csvio::CsvWriter writer((fs::path(directory) / "flows" /
                                 ("ac__" + network.ac_lines[a].from + "__" +
                                  network.ac_lines[a].to + ".csv"))
                                    .string());
        writer.line("step_index,flow_mw");
        const HrSeries& flow = result.ac_flows[a];
        for (std::size_t j = 0; j < flow.size(); ++j) {
            writer.line(csvio::format_size(j + 1) + "," + csvio::format_double(flow[j]));
        }
        writer.finish();
    }

    nlohmann::json netting;
    netting["status"] = result.diagnostics.status;
    netting["objective"] = result.objective;
    netting["simplex_iterations"] = result.diagnostics.simplex_iterations;
    netting["windows"] = result.diagnostics.window_first_step.size();
    nlohmann::json window_first_step = nlohmann::json::array();
    for (const std::size_t step : result.diagnostics.window_first_step) {
        window_first_step.push_back(step + 1);  // 1-based on disk
    }
    netting["window_first_step"] = window_first_step;
    netting["max_balance_residual_mw"] = result.diagnostics.max_balance_residual_mw;
    netting["max_energy_residual_mwh"] = result.diagnostics.max_energy_residual_mwh;
    netting["max_bound_violation_mw"] = result.diagnostics.max_bound_violation_mw;
    iodetail::write_text_file((fs::path(directory) / "netting.json").string(),
                              netting.dump(2) + "\n");
}

/// Write the analysis tables: summary statistics, density histogram, and
/// ramp adequacy.
inline void write_analysis_outputs(const std::vector<NodeAnalysis>& analyses,
                                   const std::vector<RampAdequacyEntry>& adequacy,
                                   const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);

    csvio::CsvWriter stats((fs::path(directory) / "stats.csv").string());
    stats.line("node,max_need_mw,min_need_mw,mean_abs_need_mw,zero_share");
    for (const NodeAnalysis& analysis : analyses) {
        stats.line(analysis.node + "," + csvio::format_double(analysis.stats.max_need_mw) +
                   "," + csvio::format_double(analysis.stats.min_need_mw) + "," +
                   csvio::format_double(analysis.stats.mean_abs_need_mw) + "," +
                   csvio::format_double(analysis.stats.zero_share));
    }
    stats.finish();

    csvio::CsvWriter histogram((fs::path(directory) / "histogram.csv").string());
    histogram.line("node,bin_center_mw,density");
    for (const NodeAnalysis& analysis : analyses) {
        for (const HistogramBin& bin : analysis.histogram) {
            histogram.line(analysis.node + "," + csvio::format_double(bin.center_mw) + "," +
                           csvio::format_double(bin.density));
        }
    }
    histogram.finish();

    csvio::CsvWriter ramp((fs::path(directory) / "ramp_adequacy.csv").string());
    ramp.line("component,clipped_shifts,total_shifts,share");
    for (const RampAdequacyEntry& entry : adequacy) {
        ramp.line(entry.component + "," + csvio::format_size(entry.clipped_shifts) + "," +
                  csvio::format_size(entry.total_shifts) + "," +
                  csvio::format_double(entry.share));
    }
    ramp.finish();
}

/// Umbrella writer: netting outputs, flow files and analysis tables in one
/// call (the per-stage writers above are reused so stage commands and the
/// end-to-end run emit byte-identical files).
inline void write_results(const NettingResult& result, const Network& network,
                          const std::vector<NodeAnalysis>& analyses,
                          const std::vector<RampAdequacyEntry>& adequacy,
                          const std::string& directory) {
    std::vector<std::vector<CauseLabel>> labels;
    labels.reserve(analyses.size());
    for (const NodeAnalysis& analysis : analyses) {
        labels.push_back(analysis.labels);
    }
    write_netting_outputs(result, network, labels, directory);
    write_analysis_outputs(analyses, adequacy, directory);
}

}  // namespace intratp
