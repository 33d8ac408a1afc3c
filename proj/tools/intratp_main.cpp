// Command-line front end for the intra-TP balancing pipeline.
//
// Subcommands mirror the pipeline stages:
//   run           manifest -> all outputs
//   disaggregate  manifest -> hr/, disagg.json, capacity_violations.csv
//   net           manifest + hr intermediates -> need/, flows/, netting.json
//   analyze       manifest + need intermediates -> stats, histogram,
//                 ramp adequacy, run metadata
//   synth         generate a scenario (random or a figure miniature)
//
// Exit codes: 0 success (including non-convergence, which only warns),
// 2 validation failure, 3 infeasible netting, 1 anything else.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "intratp/pipeline.hpp"
#include "intratp/synth.hpp"

namespace {

struct PipelineArgs {
    std::string manifest;
    std::string out;
    std::optional<std::string> setup;
    std::optional<double> alpha;
    std::optional<double> e_min;
    std::optional<std::size_t> max_iter;
    std::optional<std::string> window_tps;
    double zero_threshold = intratp::kDefaultZeroThresholdMw;
    double bin_width = intratp::kDefaultBinWidthMw;
    bool use_trm = false;
    bool no_use_trm = false;
    bool show_config = false;
};

void add_pipeline_options(CLI::App* cmd, PipelineArgs& args) {
    cmd->add_option("--manifest", args.manifest, "Scenario manifest (JSON)")->required();
    cmd->add_option("--out", args.out,
                    "Output directory (falls back to $INTRATP_OUT)");
    cmd->add_option("--setup", args.setup, "Assumption bundle: S1, S2, S3 or S4");
    cmd->add_option("--alpha", args.alpha, "Flow-smoothing cost weight");
    cmd->add_option("--e-min", args.e_min, "Accepted TP-energy error (MWh^2)");
    cmd->add_option("--max-iter", args.max_iter, "TP-energy correction iteration cap");
    cmd->add_option("--window-tps", args.window_tps,
                    "Netting window length in TPs, or 'full'");
    cmd->add_option("--zero-threshold", args.zero_threshold,
                    "Reading threshold for zero need (MW)");
    cmd->add_option("--bin-width", args.bin_width, "Histogram bin width (MW)");
    cmd->add_flag("--use-trm", args.use_trm, "Let netting use the TRM");
    cmd->add_flag("--no-use-trm", args.no_use_trm, "Forbid netting from using the TRM");
    cmd->add_flag("--show-config", args.show_config,
                  "Print the resolved configuration before running");
}

intratp::RunOptions to_options(const PipelineArgs& args) {
    intratp::RunOptions options;
    options.setup = args.setup;
    options.alpha = args.alpha;
    options.e_min = args.e_min;
    options.max_iterations = args.max_iter;
    if (args.use_trm && args.no_use_trm) {
        throw intratp::ValidationError("--use-trm and --no-use-trm are mutually exclusive");
    }
    if (args.use_trm) {
        options.use_trm = true;
    }
    if (args.no_use_trm) {
        options.use_trm = false;
    }
    if (args.window_tps.has_value()) {
        if (*args.window_tps == "full") {
            options.window_tps = 0;
        } else {
            std::size_t parsed = 0;
            const char* begin = args.window_tps->data();
            const char* end = begin + args.window_tps->size();
            const auto [ptr, ec] = std::from_chars(begin, end, parsed);
            if (ec != std::errc() || ptr != end || parsed < 1) {
                throw intratp::ValidationError(
                    "--window-tps must be a positive integer or 'full'");
            }
            options.window_tps = parsed;
        }
    }
    options.zero_threshold = args.zero_threshold;
    options.bin_width = args.bin_width;
    return options;
}

std::string resolve_out(const std::string& out) {
    if (!out.empty()) {
        return out;
    }
    if (const char* env = std::getenv("INTRATP_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    throw intratp::ValidationError("no output directory: pass --out or set INTRATP_OUT");
}

void warn_non_convergence(const std::vector<std::string>& components) {
    if (components.empty()) {
        return;
    }
    std::cerr << "warning: TP-energy correction did not converge for:";
    for (const std::string& name : components) {
        std::cerr << ' ' << name;
    }
    std::cerr << '\n';
}

/// Loads the scenario, resolves the configuration, and prepares the output
/// directory — the shared preamble of all pipeline subcommands.
struct StageContext {
    intratp::Scenario scenario;
    intratp::ResolvedConfig resolved;
    std::string out;
};

StageContext make_context(const PipelineArgs& args) {
    intratp::Scenario scenario = intratp::load_scenario(args.manifest);
    intratp::ResolvedConfig resolved = intratp::resolve_config(scenario, to_options(args));
    if (args.show_config) {
        std::cout << intratp::config_json(resolved).dump(2) << '\n';
    }
    const std::string out = resolve_out(args.out);
    std::filesystem::create_directories(out);
    return StageContext{std::move(scenario), std::move(resolved), out};
}

void cmd_run(const PipelineArgs& args) {
    const StageContext ctx = make_context(args);
    const intratp::PipelineOutcome outcome =
        intratp::run_pipeline(ctx.scenario, ctx.resolved, ctx.out);
    warn_non_convergence(outcome.non_converged);
}

void cmd_disaggregate(const PipelineArgs& args) {
    const StageContext ctx = make_context(args);
    const intratp::DisaggregateBundle bundle =
        intratp::run_disaggregate(ctx.scenario, ctx.resolved, ctx.out);
    warn_non_convergence(bundle.non_converged);
}

void cmd_net(const PipelineArgs& args) {
    const StageContext ctx = make_context(args);
    const intratp::DisaggregateBundle bundle =
        intratp::read_disaggregate_outputs(ctx.scenario, ctx.out);
    intratp::run_net(ctx.scenario, bundle, ctx.resolved, ctx.out);
}

void cmd_analyze(const PipelineArgs& args) {
    namespace fs = std::filesystem;
    const StageContext ctx = make_context(args);
    const intratp::DisaggregateBundle bundle =
        intratp::read_disaggregate_outputs(ctx.scenario, ctx.out);
    const std::size_t steps =
        ctx.scenario.horizon_tps *
        static_cast<std::size_t>(ctx.scenario.res.steps_per_tp());

    intratp::NettingResult result;
    result.node_names = ctx.scenario.node_names;
    std::vector<std::vector<intratp::CauseLabel>> labels;
    for (const std::string& node : ctx.scenario.node_names) {
        const std::string path =
            (fs::path(ctx.out) / "need" / ("need__" + node + ".csv")).string();
        auto [values, node_labels] = intratp::read_need_csv(path);
        if (values.size() != steps) {
            throw intratp::ValidationError(
                "'" + path + "': expected " + std::to_string(steps) + " steps, found " +
                std::to_string(values.size()));
        }
        result.balancing_need.emplace_back(std::move(values), ctx.scenario.res);
        labels.push_back(std::move(node_labels));
    }
    intratp::run_analyze(result, labels, bundle, ctx.resolved, ctx.out);
}

struct SynthArgs {
    std::string name;
    std::string out;
    std::uint64_t seed = 1;
};

void cmd_synth(const SynthArgs& args) {
    const std::string out = resolve_out(args.out);
    if (args.name == "random") {
        intratp::SynthParams params;
        params.seed = args.seed;
        const intratp::Scenario scenario = intratp::synth_random(params);
        intratp::write_synth_scenario(scenario, args.name, args.seed, out);
    } else {
        const intratp::Scenario scenario = intratp::synth_figure_case(args.name);
        intratp::write_synth_scenario(scenario, args.name, std::nullopt, out);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intra-trading-period power trajectories and need of balancing power"};
    app.require_subcommand(1);

    PipelineArgs run_args, disaggregate_args, net_args, analyze_args;
    SynthArgs synth_args;

    CLI::App* run = app.add_subcommand("run", "Run the full pipeline");
    add_pipeline_options(run, run_args);
    run->callback([&]() { cmd_run(run_args); });

    CLI::App* disaggregate =
        app.add_subcommand("disaggregate", "High-resolution trajectories only");
    add_pipeline_options(disaggregate, disaggregate_args);
    disaggregate->callback([&]() { cmd_disaggregate(disaggregate_args); });

    CLI::App* net = app.add_subcommand("net", "Netting LP on written trajectories");
    add_pipeline_options(net, net_args);
    net->callback([&]() { cmd_net(net_args); });

    CLI::App* analyze = app.add_subcommand("analyze", "Metrics on written need series");
    add_pipeline_options(analyze, analyze_args);
    analyze->callback([&]() { cmd_analyze(analyze_args); });

    CLI::App* synth = app.add_subcommand("synth", "Generate a scenario");
    synth->add_option("--name", synth_args.name,
                      "Scenario family: random, fig3, fig4_5 or fig6")
        ->required();
    synth->add_option("--out", synth_args.out,
                      "Output directory (falls back to $INTRATP_OUT)");
    synth->add_option("--seed", synth_args.seed, "PRNG seed (random scenarios)");
    synth->callback([&]() { cmd_synth(synth_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const intratp::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const intratp::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
