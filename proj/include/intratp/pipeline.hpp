#pragma once

// Pipeline orchestration: TP scenario -> high-resolution trajectories ->
// netted balancing need -> metrics, as one call or as separate stages that
// exchange on-disk intermediates.
//
// The stage functions and the end-to-end run share the same writers and
// write the same in-memory values, and every number on disk is serialized
// with shortest round-trip formatting, so composing the stages is
// byte-identical to the single run.
//
// Setups (named assumption bundles):
//   S1  normal ramp rates, netting bounded by NTC
//   S2  normal ramp rates, NTC widened by the TRM
//   S3  fast ramp rates, NTC
//   S4  fast ramp rates, NTC widened by the TRM
// with normal/fast per-category rates {hydro, flexible: 5|15, thermal:
// 3|10, nuclear: 1.5|5 %/min of g_max} and HVDC always 30 MW/min.

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "intratp/disaggregate.hpp"
#include "intratp/errors.hpp"
#include "intratp/metrics.hpp"
#include "intratp/netting.hpp"
#include "intratp/scenario_io.hpp"
#include "intratp/timeseries.hpp"
#include "intratp/version.hpp"

namespace intratp {

// ---- configuration resolution ------------------------------------------------

/// Command-line overrides; unset fields fall back to the manifest (setup
/// beats manifest, explicit flags beat the setup).
struct RunOptions {
    std::optional<std::string> setup;        // "S1".."S4"
    std::optional<double> alpha;
    std::optional<bool> use_trm;
    std::optional<std::size_t> window_tps;   // 0 = full horizon
    std::optional<double> e_min;             // MWh^2
    std::optional<std::size_t> max_iterations;
    double zero_threshold = kDefaultZeroThresholdMw;
    double bin_width = kDefaultBinWidthMw;
    std::size_t threads = 0;                 // 0 = hardware concurrency
};

/// Every knob the pipeline runs with, after merging manifest, setup, and
/// explicit flags.
struct ResolvedConfig {
    std::string setup_name;  // "S1".."S4" or "manifest"
    std::map<Category, CategoryRampRate> ramp_rates;
    NettingConfig netting;
    CorrectionConfig correction;
    double zero_threshold = kDefaultZeroThresholdMw;
    double bin_width = kDefaultBinWidthMw;
    std::size_t threads = 0;
};

inline ResolvedConfig resolve_config(const Scenario& scenario, const RunOptions& options) {
    ResolvedConfig resolved;
    resolved.setup_name = "manifest";
    resolved.ramp_rates = scenario.ramp_rates;
    resolved.netting = scenario.netting;
    resolved.correction = scenario.correction;
    resolved.zero_threshold = options.zero_threshold;
    resolved.bin_width = options.bin_width;
    resolved.threads = options.threads;

    if (options.setup.has_value()) {
        const std::string& setup = *options.setup;
        if (setup == "S1") {
            resolved.ramp_rates = normal_ramp_rates();
            resolved.netting.use_trm = false;
        } else if (setup == "S2") {
            resolved.ramp_rates = normal_ramp_rates();
            resolved.netting.use_trm = true;
        } else if (setup == "S3") {
            resolved.ramp_rates = fast_ramp_rates();
            resolved.netting.use_trm = false;
        } else if (setup == "S4") {
            resolved.ramp_rates = fast_ramp_rates();
            resolved.netting.use_trm = true;
        } else {
            throw ValidationError("unknown setup '" + setup +
                                  "' (expected S1, S2, S3 or S4)");
        }
        resolved.setup_name = setup;
    }

    if (options.alpha.has_value()) {
        resolved.netting.alpha = *options.alpha;
    }
    if (options.use_trm.has_value()) {
        resolved.netting.use_trm = *options.use_trm;
    }
    if (options.window_tps.has_value()) {
        resolved.netting.window_tps = *options.window_tps;
    }
    if (options.e_min.has_value()) {
        if (!(*options.e_min > 0.0) || !std::isfinite(*options.e_min)) {
            throw ValidationError("e_min override must be positive");
        }
        resolved.correction.e_min = *options.e_min;
    }
    if (options.max_iterations.has_value()) {
        if (*options.max_iterations < 1) {
            throw ValidationError("max_iterations override must be >= 1");
        }
        resolved.correction.max_iterations = *options.max_iterations;
    }
    if (!(resolved.zero_threshold >= 0.0) || !std::isfinite(resolved.zero_threshold)) {
        throw ValidationError("zero_threshold must be nonnegative");
    }
    if (!(resolved.bin_width > 0.0) || !std::isfinite(resolved.bin_width)) {
        throw ValidationError("bin_width must be positive");
    }
    validate(resolved.netting);
    return resolved;
}

inline nlohmann::json config_json(const ResolvedConfig& resolved) {
    nlohmann::json doc;
    doc["setup"] = resolved.setup_name;
    nlohmann::json rates;
    for (const auto& [category, rate] : resolved.ramp_rates) {
        rates[to_string(category)] = {{"mode", iodetail::ramp_mode_name(rate.mode)},
                                      {"rate", rate.rate}};
    }
    doc["ramp_rates"] = rates;
    doc["alpha"] = resolved.netting.alpha;
    doc["use_trm"] = resolved.netting.use_trm;
    if (resolved.netting.window_tps == 0) {
        doc["window_tps"] = "full";
    } else {
        doc["window_tps"] = resolved.netting.window_tps;
    }
    doc["solver_tolerance"] = resolved.netting.solver_tolerance;
    if (resolved.correction.e_min > 0.0) {
        doc["e_min"] = resolved.correction.e_min;
    } else {
        doc["e_min"] = "default";
    }
    doc["max_iterations"] = resolved.correction.max_iterations;
    doc["zero_threshold"] = resolved.zero_threshold;
    doc["bin_width"] = resolved.bin_width;
    return doc;
}

// ---- component enumeration ----------------------------------------------------

/// One disaggregated component: a (node, category) pair or an HVDC line.
struct ComponentRef {
    std::string name;                  // "<category>__<node>" or "hvdc__<from>__<to>"
    bool is_hvdc = false;
    std::size_t node = 0;              // node index (non-HVDC)
    Category category = Category::hydro;
    std::size_t hvdc_index = 0;        // line index (HVDC)
};

/// Deterministic component order: nodes in canonical order with categories
/// hydro, flexible, thermal, nuclear, vres, demand, then HVDC lines in
/// network order.
inline std::vector<ComponentRef> enumerate_components(const Scenario& scenario) {
    std::vector<ComponentRef> components;
    components.reserve(scenario.node_names.size() * std::size(kAllCategories) +
                       scenario.network.hvdc_lines.size());
    for (std::size_t n = 0; n < scenario.node_names.size(); ++n) {
        for (Category category : kAllCategories) {
            ComponentRef ref;
            ref.name = std::string(to_string(category)) + "__" + scenario.node_names[n];
            ref.node = n;
            ref.category = category;
            components.push_back(std::move(ref));
        }
    }
    for (std::size_t b = 0; b < scenario.network.hvdc_lines.size(); ++b) {
        ComponentRef ref;
        ref.name = "hvdc__" + scenario.network.hvdc_lines[b].from + "__" +
                   scenario.network.hvdc_lines[b].to;
        ref.is_hvdc = true;
        ref.hvdc_index = b;
        components.push_back(std::move(ref));
    }
    return components;
}

// ---- disaggregation stage ------------------------------------------------------

struct DisaggregateBundle {
    ScenarioHr hr;
    std::vector<ComponentRef> components;
    std::vector<ConvergenceReport> reports;  // parallel to components
    std::vector<std::pair<std::string, CapacityViolation>> violations;  // HVDC scans
    bool all_converged = true;
    std::vector<std::string> non_converged;
};

namespace pipedetail {

inline RampSpec component_spec(const Scenario& scenario, const ResolvedConfig& resolved,
                               const ComponentRef& ref) {
    if (ref.is_hvdc) {
        return RampSpec::absolute(scenario.network.hvdc_lines[ref.hvdc_index].ramp_mw_per_min);
    }
    const auto it = resolved.ramp_rates.find(ref.category);
    if (it == resolved.ramp_rates.end()) {
        throw ValidationError(std::string("no ramp rate configured for category ") +
                              to_string(ref.category));
    }
    if (it->second.mode == RampMode::percent_of_max) {
        return RampSpec::percent_of_max(it->second.rate,
                                        scenario.g_max(ref.node, ref.category));
    }
    return RampSpec::absolute(it->second.rate);
}

inline const TpSeries& component_tp(const Scenario& scenario, const ComponentRef& ref) {
    if (ref.is_hvdc) {
        return scenario.hvdc_energy[ref.hvdc_index];
    }
    return scenario.node_series[ref.node].series(ref.category);
}

/// Run one function per index over a small worker pool; results land in
/// deterministic slots, so the thread count never changes the output.
template <typename Job>
void run_parallel(std::size_t count, std::size_t threads, const Job& job) {
    if (count == 0) {
        return;
    }
    std::size_t thread_count = threads != 0 ? threads : std::thread::hardware_concurrency();
    thread_count = std::max<std::size_t>(1, std::min(thread_count, count));
    std::vector<std::exception_ptr> errors(count);
    if (thread_count == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> cursor{0};
        auto work = [&]() {
            while (true) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= count) {
                    return;
                }
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(thread_count);
        for (std::size_t k = 0; k < thread_count; ++k) {
            pool.emplace_back(work);
        }
        for (std::thread& worker : pool) {
            worker.join();
        }
    }
    for (const std::exception_ptr& error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
}

}  // namespace pipedetail

/// Disaggregate every component of the scenario (parallel across
/// components) and assemble the high-resolution scenario for netting.
inline DisaggregateBundle disaggregate_scenario(const Scenario& scenario,
                                                const ResolvedConfig& resolved) {
    DisaggregateBundle bundle;
    bundle.components = enumerate_components(scenario);
    const std::size_t count = bundle.components.size();
    std::vector<std::optional<DisaggResult>> results(count);

    pipedetail::run_parallel(count, resolved.threads, [&](std::size_t i) {
        const ComponentRef& ref = bundle.components[i];
        const TpSeries& tp = pipedetail::component_tp(scenario, ref);
        DisaggMethod method = DisaggMethod::varying();
        if (ref.is_hvdc || is_controllable(ref.category)) {
            method = DisaggMethod::controllable(
                pipedetail::component_spec(scenario, resolved, ref));
        }
        const double e_min = resolved.correction.e_min > 0.0
                                 ? resolved.correction.e_min
                                 : default_e_min(tp.size());
        results[i] =
            enforce_tp_energy(tp, method, scenario.res, e_min,
                              resolved.correction.max_iterations);
    });

    bundle.reports.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        bundle.reports.push_back(results[i]->report);
        if (!results[i]->report.converged) {
            bundle.all_converged = false;
            bundle.non_converged.push_back(bundle.components[i].name);
        }
    }

    bundle.hr.node_names = scenario.node_names;
    bundle.hr.node_series.reserve(scenario.node_names.size());
    for (std::size_t n = 0; n < scenario.node_names.size(); ++n) {
        const std::size_t base = n * std::size(kAllCategories);
        bundle.hr.node_series.push_back(NodeHr{
            results[base + 0]->series, results[base + 1]->series,
            results[base + 2]->series, results[base + 3]->series,
            results[base + 4]->series, results[base + 5]->series});
    }
    const std::size_t hvdc_base = scenario.node_names.size() * std::size(kAllCategories);
    for (std::size_t b = 0; b < scenario.network.hvdc_lines.size(); ++b) {
        bundle.hr.hvdc_flows.push_back(results[hvdc_base + b]->series);
    }
    bundle.hr.ac_tp_energy = scenario.ac_energy;

    for (std::size_t b = 0; b < scenario.network.hvdc_lines.size(); ++b) {
        const HvdcLine& line = scenario.network.hvdc_lines[b];
        const std::vector<CapacityViolation> violations = capacity_violation_scan(
            bundle.hr.hvdc_flows[b], -line.capacity_reverse, line.capacity_forward);
        for (const CapacityViolation& violation : violations) {
            bundle.violations.emplace_back(bundle.components[hvdc_base + b].name, violation);
        }
    }
    return bundle;
}

// ---- disaggregation outputs -----------------------------------------------------

inline void write_disaggregate_outputs(const DisaggregateBundle& bundle,
                                       const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(directory) / "hr");

    for (std::size_t i = 0; i < bundle.components.size(); ++i) {
        const ComponentRef& ref = bundle.components[i];
        const HrSeries& series =
            ref.is_hvdc ? bundle.hr.hvdc_flows[ref.hvdc_index]
                        : bundle.hr.node_series[ref.node].series(ref.category);
        write_hr_csv((fs::path(directory) / "hr" / (ref.name + ".csv")).string(),
                     series.values());
    }

    nlohmann::json disagg;
    disagg["all_converged"] = bundle.all_converged;
    disagg["non_converged"] = bundle.non_converged;
    nlohmann::json components;
    for (std::size_t i = 0; i < bundle.components.size(); ++i) {
        const ConvergenceReport& report = bundle.reports[i];
        nlohmann::json entry;
        entry["iterations"] = report.iterations;
        entry["final_error"] = report.final_error;
        entry["converged"] = report.converged;
        nlohmann::json windows = nlohmann::json::array();
        for (const RampWindow& window : report.ramp_windows) {
            windows.push_back({{"shift_index", window.shift_index},
                               {"c_minutes", window.c_minutes},
                               {"clipped", window.clipped}});
        }
        entry["ramp_windows"] = windows;
        components[bundle.components[i].name] = entry;
    }
    disagg["components"] = components;
    iodetail::write_text_file((fs::path(directory) / "disagg.json").string(),
                              disagg.dump(2) + "\n");

    csvio::CsvWriter violations(
        (fs::path(directory) / "capacity_violations.csv").string());
    violations.line("component,step_index,excess_mw");
    for (const auto& [component, violation] : bundle.violations) {
        violations.line(component + "," + csvio::format_size(violation.step_index + 1) +
                        "," + csvio::format_double(violation.excess_mw));
    }
    violations.finish();
}

/// Rebuild the disaggregation bundle from a stage directory written by
/// write_disaggregate_outputs.  Per-TP residuals are not round-tripped
/// (nothing downstream consumes them); everything else is exact.
inline DisaggregateBundle read_disaggregate_outputs(const Scenario& scenario,
                                                    const std::string& directory) {
    namespace fs = std::filesystem;
    DisaggregateBundle bundle;
    bundle.components = enumerate_components(scenario);

    const std::size_t steps =
        scenario.horizon_tps * static_cast<std::size_t>(scenario.res.steps_per_tp());
    std::vector<HrSeries> series;
    series.reserve(bundle.components.size());
    for (const ComponentRef& ref : bundle.components) {
        const std::string path = (fs::path(directory) / "hr" / (ref.name + ".csv")).string();
        std::vector<double> values = read_hr_csv(path);
        if (values.size() != steps) {
            throw ValidationError("'" + path + "': expected " + csvio::format_size(steps) +
                                  " steps, found " + csvio::format_size(values.size()));
        }
        series.emplace_back(std::move(values), scenario.res);
    }

    const std::string disagg_path = (fs::path(directory) / "disagg.json").string();
    const nlohmann::json disagg = iodetail::read_json_file(disagg_path);
    const std::string context = "'" + disagg_path + "'";
    const nlohmann::json components =
        iodetail::field<nlohmann::json>(disagg, "components", context);
    for (const ComponentRef& ref : bundle.components) {
        if (!components.contains(ref.name)) {
            throw ValidationError(context + ": missing component '" + ref.name + "'");
        }
        const nlohmann::json& entry = components.at(ref.name);
        const std::string entry_context = context + " component " + ref.name;
        ConvergenceReport report;
        report.iterations =
            iodetail::field<std::size_t>(entry, "iterations", entry_context);
        report.final_error = iodetail::field<double>(entry, "final_error", entry_context);
        report.converged = iodetail::field<bool>(entry, "converged", entry_context);
        for (const nlohmann::json& window :
             iodetail::field<nlohmann::json>(entry, "ramp_windows", entry_context)) {
            RampWindow parsed;
            parsed.shift_index =
                iodetail::field<std::size_t>(window, "shift_index", entry_context);
            parsed.c_minutes = iodetail::field<double>(window, "c_minutes", entry_context);
            parsed.clipped = iodetail::field<bool>(window, "clipped", entry_context);
            report.ramp_windows.push_back(parsed);
        }
        bundle.reports.push_back(std::move(report));
        if (!bundle.reports.back().converged) {
            bundle.all_converged = false;
            bundle.non_converged.push_back(ref.name);
        }
    }

    bundle.hr.node_names = scenario.node_names;
    for (std::size_t n = 0; n < scenario.node_names.size(); ++n) {
        const std::size_t base = n * std::size(kAllCategories);
        bundle.hr.node_series.push_back(
            NodeHr{series[base + 0], series[base + 1], series[base + 2], series[base + 3],
                   series[base + 4], series[base + 5]});
    }
    const std::size_t hvdc_base = scenario.node_names.size() * std::size(kAllCategories);
    for (std::size_t b = 0; b < scenario.network.hvdc_lines.size(); ++b) {
        bundle.hr.hvdc_flows.push_back(series[hvdc_base + b]);
    }
    bundle.hr.ac_tp_energy = scenario.ac_energy;
    return bundle;
}

// ---- netting stage ---------------------------------------------------------------

/// Per-node ramp-step ranges from the final ramp windows of the node's
/// controllable components and of HVDC lines touching the node.
inline std::vector<std::vector<StepRange>> node_ramp_ranges(
    const Scenario& scenario, const DisaggregateBundle& bundle) {
    const std::size_t steps =
        scenario.horizon_tps * static_cast<std::size_t>(scenario.res.steps_per_tp());
    std::vector<std::vector<StepRange>> ranges(scenario.node_names.size());
    for (std::size_t i = 0; i < bundle.components.size(); ++i) {
        const ComponentRef& ref = bundle.components[i];
        std::vector<std::size_t> nodes;
        if (ref.is_hvdc) {
            const HvdcLine& line = scenario.network.hvdc_lines[ref.hvdc_index];
            for (std::size_t n = 0; n < scenario.node_names.size(); ++n) {
                if (scenario.node_names[n] == line.from ||
                    scenario.node_names[n] == line.to) {
                    nodes.push_back(n);
                }
            }
        } else if (is_controllable(ref.category)) {
            nodes.push_back(ref.node);
        }
        for (const std::size_t n : nodes) {
            for (const RampWindow& window : bundle.reports[i].ramp_windows) {
                const StepRange range = ramp_window_steps(window, scenario.res, steps);
                if (!range.empty()) {
                    ranges[n].push_back(range);
                }
            }
        }
    }
    return ranges;
}

struct NetBundle {
    NettingResult result;
    std::vector<std::vector<CauseLabel>> labels;  // per node, per step
};

inline NetBundle net_scenario(const Scenario& scenario, const DisaggregateBundle& bundle,
                              const ResolvedConfig& resolved) {
    const NettingProblem problem = build_netting_problem(
        bundle.hr, scenario.network, scenario.res, resolved.netting);
    NetBundle net{solve_netting(problem), {}};
    const std::vector<std::vector<StepRange>> ranges = node_ramp_ranges(scenario, bundle);
    net.labels.reserve(net.result.node_names.size());
    for (std::size_t n = 0; n < net.result.node_names.size(); ++n) {
        net.labels.push_back(classify_cause(net.result.balancing_need[n], ranges[n],
                                            resolved.zero_threshold));
    }
    return net;
}

// ---- analysis stage ---------------------------------------------------------------

inline std::vector<NodeAnalysis> analyze_needs(const NettingResult& result,
                                               const std::vector<std::vector<CauseLabel>>& labels,
                                               const ResolvedConfig& resolved) {
    std::vector<NodeAnalysis> analyses;
    analyses.reserve(result.node_names.size());
    for (std::size_t n = 0; n < result.node_names.size(); ++n) {
        NodeAnalysis analysis;
        analysis.node = result.node_names[n];
        analysis.stats = summary_stats(result.balancing_need[n], resolved.zero_threshold);
        analysis.histogram = density_histogram(result.balancing_need[n], resolved.bin_width);
        analysis.labels = labels[n];
        analyses.push_back(std::move(analysis));
    }
    return analyses;
}

/// Adequacy covers every component that ramps: controllable categories and
/// HVDC lines.
inline std::vector<RampAdequacyEntry> adequacy_report(const DisaggregateBundle& bundle) {
    std::vector<std::pair<std::string, ConvergenceReport>> ramping;
    for (std::size_t i = 0; i < bundle.components.size(); ++i) {
        const ComponentRef& ref = bundle.components[i];
        if (ref.is_hvdc || is_controllable(ref.category)) {
            ramping.emplace_back(ref.name, bundle.reports[i]);
        }
    }
    return ramp_adequacy_report(ramping);
}

inline void write_run_metadata(const ResolvedConfig& resolved, bool all_converged,
                               const std::vector<std::string>& non_converged,
                               const std::string& directory) {
    nlohmann::json metadata = config_json(resolved);
    metadata["version"] = kVersion;
    metadata["all_converged"] = all_converged;
    metadata["non_converged_components"] = non_converged;
    iodetail::write_text_file(
        (std::filesystem::path(directory) / "run_metadata.json").string(),
        metadata.dump(2) + "\n");
}

// ---- stage entry points -------------------------------------------------------------

/// Disaggregate stage: manifest -> hr/, disagg.json, capacity_violations.csv.
inline DisaggregateBundle run_disaggregate(const Scenario& scenario,
                                           const ResolvedConfig& resolved,
                                           const std::string& out_dir) {
    DisaggregateBundle bundle = disaggregate_scenario(scenario, resolved);
    write_disaggregate_outputs(bundle, out_dir);
    return bundle;
}

/// Netting stage: hr intermediates -> need/, flows/, netting.json.
inline NetBundle run_net(const Scenario& scenario, const DisaggregateBundle& bundle,
                         const ResolvedConfig& resolved, const std::string& out_dir) {
    NetBundle net = net_scenario(scenario, bundle, resolved);
    write_netting_outputs(net.result, scenario.network, net.labels, out_dir);
    return net;
}

/// Analysis stage: need series + reports -> stats.csv, histogram.csv,
/// ramp_adequacy.csv, run_metadata.json.
inline void run_analyze(const NettingResult& result,
                        const std::vector<std::vector<CauseLabel>>& labels,
                        const DisaggregateBundle& bundle, const ResolvedConfig& resolved,
                        const std::string& out_dir) {
    const std::vector<NodeAnalysis> analyses = analyze_needs(result, labels, resolved);
    write_analysis_outputs(analyses, adequacy_report(bundle), out_dir);
    write_run_metadata(resolved, bundle.all_converged, bundle.non_converged, out_dir);
}

struct PipelineOutcome {
    bool all_converged = true;
    std::vector<std::string> non_converged;
    double objective = 0.0;
};

/// Full pipeline, equivalent to the three stages composed.
inline PipelineOutcome run_pipeline(const Scenario& scenario, const ResolvedConfig& resolved,
                                    const std::string& out_dir) {
    const DisaggregateBundle bundle = run_disaggregate(scenario, resolved, out_dir);
    const NetBundle net = run_net(scenario, bundle, resolved, out_dir);
    run_analyze(net.result, net.labels, bundle, resolved, out_dir);
    return PipelineOutcome{bundle.all_converged, bundle.non_converged,
                           net.result.objective};
}

}  // namespace intratp
