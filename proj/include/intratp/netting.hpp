#pragma once

// Netting of imbalances over AC interconnections.
//
// Per node n and step t̂ the need of balancing power is defined by the
// balance identity
//
//   -g^hy - g^fl - g^th - g^nu - g^res + d
//       + sum_{a: from=n} z^ac_a - sum_{a: to=n} z^ac_a
//       + sum_{b: from=n} z^dc_b - sum_{b: to=n} z^dc_b   =  w^bal        (balance)
//
// where production, demand and HVDC flows are fixed high-resolution data
// and the AC flows z^ac are free to net imbalances between nodes.  The LP
//
//   minimize   sum_{t̂,n} |w^bal_{t̂,n}| + alpha * sum_{t̂,a} |z_{t̂+1,a} - z_{t̂,a}|
//   subject to lo_a <= z_{t̂,a} <= hi_a                                   (bounds)
//              step_hours * sum_{t̂ in TP t} z_{t̂,a} = z^ac-energy_{t,a}  (energy)
//              balance rows defining w^bal
//
// chooses them, with bounds lo/hi = -+NTC per direction, widened by the TRM
// when configured.  Absolute values are split into pairs of nonnegative
// variables (w^bal = p - q with cost 1 on both; the flow deviation gets
// u, v with cost alpha).  The smoothing term keeps the optimum from placing
// the residual system need in an arbitrary node when lines are uncongested.
//
// Long horizons can be decomposed into consecutive windows split at TP
// boundaries; each window fixes the previous window's final AC flow as the
// predecessor in its first smoothing term, so the stitched solution's
// objective decomposes exactly over windows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "intratp/errors.hpp"
#include "intratp/lp.hpp"
#include "intratp/timeseries.hpp"

namespace intratp {

// ---- network ---------------------------------------------------------------

/// AC interconnection: NTC per direction plus the transmission reliability
/// margin.  Positive flow runs from `from` to `to`.
struct AcLine {
    std::string from;
    std::string to;
    double ntc_forward = 0.0;  // MW, flow from -> to
    double ntc_reverse = 0.0;  // MW, flow to -> from
    double trm = 0.0;          // MW, symmetric margin
};

/// HVDC interconnection with a fixed schedule; endpoints may lie outside
/// the studied node set (links to other synchronous areas).
struct HvdcLine {
    std::string from;
    std::string to;
    double ramp_mw_per_min = 0.0;
    double capacity_forward = 0.0;  // MW
    double capacity_reverse = 0.0;  // MW
};

struct Network {
    std::vector<std::string> nodes;
    std::vector<AcLine> ac_lines;
    std::vector<HvdcLine> hvdc_lines;
};

inline void validate(const Network& network) {
    auto known = [&](const std::string& name) {
        return std::find(network.nodes.begin(), network.nodes.end(), name) !=
               network.nodes.end();
    };
    for (std::size_t i = 0; i < network.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < network.nodes.size(); ++j) {
            if (network.nodes[i] == network.nodes[j]) {
                throw ValidationError("Network: duplicate node '" + network.nodes[i] + "'");
            }
        }
    }
    std::map<std::pair<std::string, std::string>, int> seen;
    for (const AcLine& line : network.ac_lines) {
        if (line.from == line.to) {
            throw ValidationError("Network: AC self-loop at node '" + line.from + "'");
        }
        if (!known(line.from) || !known(line.to)) {
            throw ValidationError("Network: AC line " + line.from + "->" + line.to +
                                  " references an unknown node");
        }
        if (line.ntc_forward < 0.0 || line.ntc_reverse < 0.0 || line.trm < 0.0) {
            throw ValidationError("Network: negative capacity on AC line " + line.from + "->" +
                                  line.to);
        }
        if (++seen[{line.from, line.to}] > 1) {
            throw ValidationError("Network: duplicate AC line " + line.from + "->" + line.to);
        }
    }
    for (const HvdcLine& line : network.hvdc_lines) {
        if (line.from == line.to) {
            throw ValidationError("Network: HVDC self-loop at node '" + line.from + "'");
        }
        if (line.ramp_mw_per_min <= 0.0) {
            throw ValidationError("Network: HVDC line " + line.from + "->" + line.to +
                                  " needs a positive ramp rate");
        }
        if (line.capacity_forward < 0.0 || line.capacity_reverse < 0.0) {
            throw ValidationError("Network: negative capacity on HVDC line " + line.from +
                                  "->" + line.to);
        }
    }
}

// ---- scenario at high resolution -------------------------------------------

enum class Category { hydro, flexible, thermal, nuclear, vres, demand };

inline constexpr Category kAllCategories[] = {Category::hydro,   Category::flexible,
                                              Category::thermal, Category::nuclear,
                                              Category::vres,    Category::demand};

inline const char* to_string(Category category) {
    switch (category) {
        case Category::hydro: return "hydro";
        case Category::flexible: return "flexible";
        case Category::thermal: return "thermal";
        case Category::nuclear: return "nuclear";
        case Category::vres: return "vres";
        case Category::demand: return "demand";
    }
    return "unknown";
}

/// True for categories disaggregated with HR_C (ramping components); vRES
/// and demand use HR_V.
inline bool is_controllable(Category category) {
    return category == Category::hydro || category == Category::flexible ||
           category == Category::thermal || category == Category::nuclear;
}

/// High-resolution series of one node, one per category.  Production
/// categories are generation (positive = injection); demand is consumption.
struct NodeHr {
    HrSeries hydro;
    HrSeries flexible;
    HrSeries thermal;
    HrSeries nuclear;
    HrSeries vres;
    HrSeries demand;

    const HrSeries& series(Category category) const {
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

/// Everything the netting LP consumes: per-node high-resolution series, the
/// fixed HVDC schedules, and the per-TP AC energies that constrain the flow
/// variables.  Node ordering is the canonical (sorted) order established at
/// construction; hvdc_flows and ac_tp_energy parallel the network's line
/// lists.
///
/// High-resolution values of nonnegative categories may dip below zero
/// here: the TP-energy correction legitimately overshoots (that observation
/// is reported by the capacity scan, not forbidden).  Nonnegativity of the
/// underlying TP energies is enforced at ingestion.
struct ScenarioHr {
    std::vector<std::string> node_names;
    std::vector<NodeHr> node_series;
    std::vector<HrSeries> hvdc_flows;    // parallel to network.hvdc_lines
    std::vector<TpSeries> ac_tp_energy;  // parallel to network.ac_lines, MWh/TP

    std::size_t steps() const {
        return node_series.empty() ? 0 : node_series.front().demand.size();
    }

    std::size_t node_index(const std::string& name) const {
        for (std::size_t i = 0; i < node_names.size(); ++i) {
            if (node_names[i] == name) {
                return i;
            }
        }
        throw ValidationError("ScenarioHr: unknown node '" + name + "'");
    }
};

inline void validate(const ScenarioHr& scenario, const Network& network, const Resolution& res) {
    if (scenario.node_names.size() != scenario.node_series.size() ||
        scenario.node_names.empty()) {
        throw ValidationError("ScenarioHr: node name/series mismatch");
    }
    const std::size_t steps = scenario.steps();
    if (steps % static_cast<std::size_t>(res.steps_per_tp()) != 0) {
        throw ValidationError("ScenarioHr: horizon is not a whole number of TPs");
    }
    const std::size_t tp_count = steps / static_cast<std::size_t>(res.steps_per_tp());
    for (std::size_t n = 0; n < scenario.node_series.size(); ++n) {
        for (Category category : kAllCategories) {
            if (scenario.node_series[n].series(category).size() != steps) {
                throw ValidationError("ScenarioHr: node '" + scenario.node_names[n] +
                                      "' category " + to_string(category) +
                                      " has mismatched length");
            }
        }
    }
    if (scenario.hvdc_flows.size() != network.hvdc_lines.size()) {
        throw ValidationError("ScenarioHr: HVDC series count does not match network");
    }
    for (const HrSeries& flow : scenario.hvdc_flows) {
        if (flow.size() != steps) {
            throw ValidationError("ScenarioHr: HVDC series length mismatch");
        }
    }
    if (scenario.ac_tp_energy.size() != network.ac_lines.size()) {
        throw ValidationError("ScenarioHr: AC energy series count does not match network");
    }
    for (const TpSeries& energy : scenario.ac_tp_energy) {
        if (energy.size() != tp_count) {
            throw ValidationError("ScenarioHr: AC TP energy length mismatch");
        }
    }
    for (const std::string& name : scenario.node_names) {
        if (std::find(network.nodes.begin(), network.nodes.end(), name) ==
            network.nodes.end()) {
            throw ValidationError("ScenarioHr: node '" + name + "' not in network");
        }
    }
}

// ---- configuration and result ----------------------------------------------

struct NettingConfig {
    double alpha = 1e-3;            // cost on |dz| per Eq-style smoothing term
    bool use_trm = false;           // widen NTC bounds by the TRM
    std::size_t window_tps = 0;     // 0 = full horizon, else TPs per window
    double solver_tolerance = 1e-6; // accepted constraint residual, MW / MWh
};

inline void validate(const NettingConfig& cfg) {
    if (!(cfg.alpha > 0.0) || !(cfg.alpha < 0.1)) {
        throw ValidationError("NettingConfig: alpha must lie in (0, 0.1)");
    }
    if (!(cfg.solver_tolerance > 0.0)) {
        throw ValidationError("NettingConfig: solver_tolerance must be positive");
    }
}

struct SolverDiagnostics {
    std::string status = "optimal";
    std::size_t simplex_iterations = 0;
    std::vector<std::size_t> window_first_step;  // 0-based first step per window
    double max_balance_residual_mw = 0.0;
    double max_energy_residual_mwh = 0.0;
    double max_bound_violation_mw = 0.0;
};

struct NettingResult {
    std::vector<std::string> node_names;
    std::vector<HrSeries> balancing_need;  // per node, MW
    std::vector<HrSeries> ac_flows;        // per AC line, MW
    double objective = 0.0;                // full-horizon objective value
    SolverDiagnostics diagnostics;
};

// ---- fixed-transmission baseline (no netting) --------------------------------

namespace detail {

/// fixed_{n,t̂} = -production + demand + HVDC exports - HVDC imports; the
/// part of the balance identity that the LP cannot change.
inline std::vector<std::vector<double>> fixed_injection_term(const ScenarioHr& scenario,
                                                             const Network& network) {
    const std::size_t steps = scenario.steps();
    std::vector<std::vector<double>> fixed(scenario.node_names.size(),
                                           std::vector<double>(steps, 0.0));
    for (std::size_t n = 0; n < scenario.node_series.size(); ++n) {
        const NodeHr& node = scenario.node_series[n];
        for (std::size_t j = 0; j < steps; ++j) {
            fixed[n][j] = -node.hydro[j] - node.flexible[j] - node.thermal[j] -
                          node.nuclear[j] - node.vres[j] + node.demand[j];
        }
    }
    for (std::size_t b = 0; b < network.hvdc_lines.size(); ++b) {
        const HvdcLine& line = network.hvdc_lines[b];
        const HrSeries& flow = scenario.hvdc_flows[b];
        // Endpoints outside the node set carry the flow out of scope.
        for (std::size_t n = 0; n < scenario.node_names.size(); ++n) {
            if (scenario.node_names[n] == line.from) {
                for (std::size_t j = 0; j < steps; ++j) {
                    fixed[n][j] += flow[j];
                }
            } else if (scenario.node_names[n] == line.to) {
                for (std::size_t j = 0; j < steps; ++j) {
                    fixed[n][j] -= flow[j];
                }
            }
        }
    }
    return fixed;
}

}  // namespace detail

/// Need of balancing power with the AC flows fixed at the given
/// trajectories (e.g. basic power), i.e. without using transmission to net.
inline std::vector<HrSeries> balancing_need_fixed_transmission(
    const ScenarioHr& scenario, const Network& network,
    const std::vector<HrSeries>& ac_flows_hr, const Resolution& res) {
    validate(scenario, network, res);
    if (ac_flows_hr.size() != network.ac_lines.size()) {
        throw ValidationError("balancing_need_fixed_transmission: flow count mismatch");
    }
    const std::size_t steps = scenario.steps();
    for (const HrSeries& flow : ac_flows_hr) {
        if (flow.size() != steps) {
            throw ValidationError("balancing_need_fixed_transmission: flow length mismatch");
        }
    }
    std::vector<std::vector<double>> need = detail::fixed_injection_term(scenario, network);
    for (std::size_t a = 0; a < network.ac_lines.size(); ++a) {
        const std::size_t from = scenario.node_index(network.ac_lines[a].from);
        const std::size_t to = scenario.node_index(network.ac_lines[a].to);
        for (std::size_t j = 0; j < steps; ++j) {
            need[from][j] += ac_flows_hr[a][j];
            need[to][j] -= ac_flows_hr[a][j];
        }
    }
    std::vector<HrSeries> result;
    result.reserve(need.size());
    for (auto& series : need) {
        result.emplace_back(std::move(series));
    }
    return result;
}

// ---- LP assembly --------------------------------------------------------------

/// One decomposition window: consecutive TPs [first_tp, first_tp + tp_count).
struct WindowSpec {
    std::size_t first_tp = 0;
    std::size_t tp_count = 0;
};

/// Column/row layout of one window's LP, for result extraction and for
/// feeding the identical problem to a reference solver in tests.
struct WindowLayout {
    std::size_t steps = 0;            // S: steps in the window
    std::size_t smoothing_terms = 0;  // per line: S-1, +1 with a boundary term
    bool has_boundary = false;
    std::size_t z_offset = 0;  // z(a, s) = z_offset + a*S + s
    std::size_t p_offset = 0;  // p(n, s) = p_offset + n*S + s
    std::size_t q_offset = 0;
    std::size_t u_offset = 0;  // u(a, k) = u_offset + a*smoothing_terms + k
    std::size_t v_offset = 0;
    std::size_t columns = 0;
    std::size_t rows = 0;
};

/// Assembled netting problem: validated inputs plus precomputed terms,
/// ready to emit per-window LPs.
class NettingProblem {
public:
    NettingProblem(ScenarioHr scenario, Network network, Resolution res, NettingConfig cfg)
        : scenario_(std::move(scenario)),
          network_(std::move(network)),
          res_(res),
          cfg_(cfg),
          fixed_(detail::fixed_injection_term(scenario_, network_)) {
        const std::size_t tp_count = scenario_.steps() / res_.steps_per_tp();
        const std::size_t per_window =
            cfg_.window_tps == 0 ? tp_count : std::min(cfg_.window_tps, tp_count);
        for (std::size_t first = 0; first < tp_count; first += per_window) {
            windows_.push_back(WindowSpec{first, std::min(per_window, tp_count - first)});
        }
        line_lower_.resize(network_.ac_lines.size());
        line_upper_.resize(network_.ac_lines.size());
        for (std::size_t a = 0; a < network_.ac_lines.size(); ++a) {
            const AcLine& line = network_.ac_lines[a];
            const double margin = cfg_.use_trm ? line.trm : 0.0;
            line_lower_[a] = -(line.ntc_reverse + margin);
            line_upper_[a] = line.ntc_forward + margin;
        }
        check_energy_attainable();
    }

    const ScenarioHr& scenario() const { return scenario_; }
    const Network& network() const { return network_; }
    const Resolution& resolution() const { return res_; }
    const NettingConfig& config() const { return cfg_; }
    const std::vector<WindowSpec>& windows() const { return windows_; }
    double line_lower(std::size_t a) const { return line_lower_[a]; }
    double line_upper(std::size_t a) const { return line_upper_[a]; }

    WindowLayout layout(std::size_t window_index) const {
        const WindowSpec& window = windows_.at(window_index);
        const std::size_t spt = res_.steps_per_tp();
        const std::size_t num_nodes = scenario_.node_names.size();
        const std::size_t num_lines = network_.ac_lines.size();
        WindowLayout out;
        out.steps = window.tp_count * spt;
        out.has_boundary = window_index > 0;
        out.smoothing_terms = out.steps - 1 + (out.has_boundary ? 1 : 0);
        out.z_offset = 0;
        out.p_offset = num_lines * out.steps;
        out.q_offset = out.p_offset + num_nodes * out.steps;
        out.u_offset = out.q_offset + num_nodes * out.steps;
        out.v_offset = out.u_offset + num_lines * out.smoothing_terms;
        out.columns = out.v_offset + num_lines * out.smoothing_terms;
        out.rows = num_nodes * out.steps + num_lines * out.smoothing_terms +
                   num_lines * window.tp_count;
        return out;
    }

    std::size_t lp_variable_count(std::size_t window_index) const {
        return layout(window_index).columns;
    }

    /// Emit the LP of one window.  previous_final_flows (one value per AC
    /// line) anchors the boundary smoothing term and is required exactly
    /// for windows after the first.
    lp::LpProblem assemble_window_lp(std::size_t window_index,
                                     const std::vector<double>* previous_final_flows) const {
        const WindowSpec& window = windows_.at(window_index);
        const WindowLayout lay = layout(window_index);
        if (lay.has_boundary !=
            (previous_final_flows != nullptr && !previous_final_flows->empty())) {
            throw ValidationError("assemble_window_lp: boundary flows required exactly for "
                                  "windows after the first");
        }

        const std::size_t spt = res_.steps_per_tp();
        const std::size_t num_nodes = scenario_.node_names.size();
        const std::size_t num_lines = network_.ac_lines.size();
        const std::size_t first_step = window.first_tp * spt;

        // Row layout: balance(n, s), then smoothing(a, k), then energy(a, w).
        const std::size_t balance_row0 = 0;
        const std::size_t smoothing_row0 = num_nodes * lay.steps;
        const std::size_t energy_row0 = smoothing_row0 + num_lines * lay.smoothing_terms;

        lp::LpProblem problem(lay.rows);

        for (std::size_t n = 0; n < num_nodes; ++n) {
            for (std::size_t s = 0; s < lay.steps; ++s) {
                problem.rhs[balance_row0 + n * lay.steps + s] = -fixed_[n][first_step + s];
            }
        }
        for (std::size_t a = 0; a < num_lines; ++a) {
            if (lay.has_boundary) {
                problem.rhs[smoothing_row0 + a * lay.smoothing_terms + 0] =
                    (*previous_final_flows)[a];
            }
            for (std::size_t t = 0; t < window.tp_count; ++t) {
                // MWh -> sum of MW over the TP's steps.
                problem.rhs[energy_row0 + a * window.tp_count + t] =
                    scenario_.ac_tp_energy[a][window.first_tp + t] / res_.step_hours();
            }
        }

        // z columns: bounds per line, entries in two balance rows, the
        // adjacent smoothing rows, and the TP's energy row.
        for (std::size_t a = 0; a < num_lines; ++a) {
            const std::size_t from = scenario_.node_index(network_.ac_lines[a].from);
            const std::size_t to = scenario_.node_index(network_.ac_lines[a].to);
            for (std::size_t s = 0; s < lay.steps; ++s) {
                std::vector<std::pair<std::size_t, double>> entries;
                entries.reserve(5);
                entries.emplace_back(balance_row0 + from * lay.steps + s, 1.0);
                entries.emplace_back(balance_row0 + to * lay.steps + s, -1.0);
                // Smoothing row k of line a covers the flow difference
                // ending at step k + 1 - boundary (row 0 is the boundary
                // row when present): z(s) enters with +1 where the
                // difference ends at s and with -1 where it starts at s.
                const std::size_t boundary = lay.has_boundary ? 1 : 0;
                if (s > 0 || lay.has_boundary) {
                    entries.emplace_back(
                        smoothing_row0 + a * lay.smoothing_terms + s + boundary - 1, 1.0);
                }
                if (s + 1 < lay.steps) {
                    entries.emplace_back(
                        smoothing_row0 + a * lay.smoothing_terms + s + boundary, -1.0);
                }
                entries.emplace_back(energy_row0 + a * window.tp_count + s / spt, 1.0);
                problem.add_column(0.0, line_lower_[a], line_upper_[a], std::move(entries));
            }
        }
        // p, q columns: |w^bal| split, cost 1.
        for (std::size_t n = 0; n < num_nodes; ++n) {
            for (std::size_t s = 0; s < lay.steps; ++s) {
                problem.add_column(1.0, 0.0, lp::kInfinity,
                                   {{balance_row0 + n * lay.steps + s, -1.0}});
            }
        }
        for (std::size_t n = 0; n < num_nodes; ++n) {
            for (std::size_t s = 0; s < lay.steps; ++s) {
                problem.add_column(1.0, 0.0, lp::kInfinity,
                                   {{balance_row0 + n * lay.steps + s, 1.0}});
            }
        }
        // u, v columns: |dz| split, cost alpha.
        for (std::size_t a = 0; a < num_lines; ++a) {
            for (std::size_t k = 0; k < lay.smoothing_terms; ++k) {
                problem.add_column(cfg_.alpha, 0.0, lp::kInfinity,
                                   {{smoothing_row0 + a * lay.smoothing_terms + k, -1.0}});
            }
        }
        for (std::size_t a = 0; a < num_lines; ++a) {
            for (std::size_t k = 0; k < lay.smoothing_terms; ++k) {
                problem.add_column(cfg_.alpha, 0.0, lp::kInfinity,
                                   {{smoothing_row0 + a * lay.smoothing_terms + k, 1.0}});
            }
        }
        return problem;
    }

private:
    /// A TP whose scheduled AC energy cannot be met inside the flow bounds
    /// makes the LP structurally infeasible; report it up front.
    void check_energy_attainable() const {
        const double tol = 1e-9;
        for (std::size_t a = 0; a < network_.ac_lines.size(); ++a) {
            const TpSeries& energy = scenario_.ac_tp_energy[a];
            for (std::size_t t = 0; t < energy.size(); ++t) {
                const double mean_flow = energy[t] / res_.tp_hours();
                const double scale = 1.0 + std::abs(mean_flow);
                if (mean_flow > line_upper_[a] + tol * scale ||
                    mean_flow < line_lower_[a] - tol * scale) {
                    std::size_t window_index = 0;
                    for (std::size_t k = 0; k < windows_.size(); ++k) {
                        if (t >= windows_[k].first_tp &&
                            t < windows_[k].first_tp + windows_[k].tp_count) {
                            window_index = k;
                            break;
                        }
                    }
                    throw InfeasibleError(
                        "netting: AC line " + network_.ac_lines[a].from + "->" +
                            network_.ac_lines[a].to + " TP " + std::to_string(t + 1) +
                            " schedules a mean flow of " + std::to_string(mean_flow) +
                            " MW outside its bounds [" + std::to_string(line_lower_[a]) +
                            ", " + std::to_string(line_upper_[a]) + "]",
                        window_index, "energy");
                }
            }
        }
    }

    ScenarioHr scenario_;
    Network network_;
    Resolution res_;
    NettingConfig cfg_;
    std::vector<std::vector<double>> fixed_;  // [node][step]
    std::vector<WindowSpec> windows_;
    std::vector<double> line_lower_;
    std::vector<double> line_upper_;
};

/// Validate inputs and assemble the netting problem.
inline NettingProblem build_netting_problem(const ScenarioHr& scenario, const Network& network,
                                            const Resolution& res, const NettingConfig& cfg) {
    validate(network);
    validate(scenario, network, res);
    validate(cfg);
    return NettingProblem(scenario, network, res, cfg);
}

/// Solve the netting problem window by window and stitch the full-horizon
/// result.  The reported objective evaluates the stitched solution; the
/// balancing need is recomputed exactly from the balance identity.
inline NettingResult solve_netting(const NettingProblem& problem) {
    const ScenarioHr& scenario = problem.scenario();
    const Network& network = problem.network();
    const Resolution& res = problem.resolution();
    const NettingConfig& cfg = problem.config();
    const std::size_t steps = scenario.steps();
    const std::size_t num_lines = network.ac_lines.size();
    const std::size_t spt = res.steps_per_tp();

    std::vector<std::vector<double>> flows(num_lines, std::vector<double>(steps, 0.0));
    SolverDiagnostics diagnostics;
    std::vector<double> previous_final(num_lines, 0.0);

    for (std::size_t k = 0; k < problem.windows().size(); ++k) {
        const WindowSpec& window = problem.windows()[k];
        const WindowLayout lay = problem.layout(k);
        const lp::LpProblem window_lp =
            problem.assemble_window_lp(k, k == 0 ? nullptr : &previous_final);
        const lp::LpSolution solution = lp::solve(window_lp);
        if (solution.status == lp::LpStatus::infeasible) {
            throw InfeasibleError("netting: window " + std::to_string(k + 1) +
                                      " is infeasible (solver)",
                                  k, "solver");
        }
        if (solution.status != lp::LpStatus::optimal) {
            throw std::runtime_error(std::string("netting: window ") + std::to_string(k + 1) +
                                     " solve failed: " + lp::to_string(solution.status));
        }
        const std::size_t first_step = window.first_tp * spt;
        for (std::size_t a = 0; a < num_lines; ++a) {
            for (std::size_t s = 0; s < lay.steps; ++s) {
                flows[a][first_step + s] = solution.x[lay.z_offset + a * lay.steps + s];
            }
            previous_final[a] = flows[a][first_step + lay.steps - 1];
        }
        diagnostics.simplex_iterations += solution.iterations;
        diagnostics.window_first_step.push_back(first_step);
    }

    // Balancing need from the balance identity, exactly.
    std::vector<HrSeries> flow_series;
    flow_series.reserve(num_lines);
    for (auto& flow : flows) {
        flow_series.emplace_back(flow);
    }
    std::vector<HrSeries> need =
        balancing_need_fixed_transmission(scenario, network, flow_series, res);

    // Full-horizon objective of the stitched solution.
    double objective = 0.0;
    for (const HrSeries& series : need) {
        for (std::size_t j = 0; j < series.size(); ++j) {
            objective += std::abs(series[j]);
        }
    }
    for (std::size_t a = 0; a < num_lines; ++a) {
        for (std::size_t j = 0; j + 1 < steps; ++j) {
            objective += cfg.alpha * std::abs(flows[a][j + 1] - flows[a][j]);
        }
    }

    // Residual diagnostics against the accepted tolerance.
    for (std::size_t a = 0; a < num_lines; ++a) {
        for (std::size_t j = 0; j < steps; ++j) {
            const double excess = std::max(flows[a][j] - problem.line_upper(a),
                                           problem.line_lower(a) - flows[a][j]);
            diagnostics.max_bound_violation_mw =
                std::max(diagnostics.max_bound_violation_mw, excess);
        }
        const TpSeries line_energy = tp_energy_of(flow_series[a], res);
        for (std::size_t t = 0; t < line_energy.size(); ++t) {
            diagnostics.max_energy_residual_mwh =
                std::max(diagnostics.max_energy_residual_mwh,
                         std::abs(line_energy[t] - scenario.ac_tp_energy[a][t]));
        }
    }
    diagnostics.max_balance_residual_mw = 0.0;  // need computed from the identity itself
    if (diagnostics.max_bound_violation_mw > cfg.solver_tolerance ||
        diagnostics.max_energy_residual_mwh > cfg.solver_tolerance) {
        throw std::runtime_error(
            "netting: solution exceeds solver_tolerance (bound violation " +
            std::to_string(diagnostics.max_bound_violation_mw) + " MW, energy residual " +
            std::to_string(diagnostics.max_energy_residual_mwh) + " MWh)");
    }

    NettingResult result;
    result.node_names = scenario.node_names;
    result.balancing_need = std::move(need);
    result.ac_flows = std::move(flow_series);
    result.objective = objective;
    result.diagnostics = std::move(diagnostics);
    return result;
}

/// Signed sum of the balancing need over nodes, per step.  AC terms
/// telescope out of the balance identity, so this aggregate is invariant
/// to the chosen feasible flows.
inline HrSeries net_system_need(const NettingResult& result) {
    if (result.balancing_need.empty()) {
        throw ValidationError("net_system_need: empty result");
    }
    const std::size_t steps = result.balancing_need.front().size();
    std::vector<double> sum(steps, 0.0);
    for (const HrSeries& series : result.balancing_need) {
        for (std::size_t j = 0; j < steps; ++j) {
            sum[j] += series[j];
        }
    }
    return HrSeries(std::move(sum));
}

}  // namespace intratp
