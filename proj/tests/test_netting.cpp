#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "intratp/errors.hpp"
#include "intratp/netting.hpp"
#include "intratp/timeseries.hpp"

using namespace intratp;

namespace {

HrSeries flat(std::size_t steps, double value) {
    return HrSeries(std::vector<double>(steps, value));
}

NodeHr zero_node(std::size_t steps) {
    return NodeHr{flat(steps, 0.0), flat(steps, 0.0), flat(steps, 0.0),
                  flat(steps, 0.0), flat(steps, 0.0), flat(steps, 0.0)};
}

/// Two nodes A and B joined by one AC line, with mirrored deviations:
/// node A's hydro runs dev_a above its (flat 1000 MW) demand and node B
/// runs exactly opposite.  AC TP energies are given per TP.
struct TwoNodeCase {
    ScenarioHr scenario;
    Network network;
    Resolution res{60, 15};
};

TwoNodeCase two_node_case(const std::vector<double>& dev_a, const AcLine& line,
                          const std::vector<double>& ac_energy_mwh) {
    TwoNodeCase out;
    const std::size_t steps = dev_a.size();

    std::vector<double> hydro_a(steps), hydro_b(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        hydro_a[j] = 1000.0 + dev_a[j];
        hydro_b[j] = 1000.0 - dev_a[j];
    }
    NodeHr node_a = zero_node(steps);
    node_a.hydro = HrSeries(hydro_a);
    node_a.demand = flat(steps, 1000.0);
    NodeHr node_b = zero_node(steps);
    node_b.hydro = HrSeries(hydro_b);
    node_b.demand = flat(steps, 1000.0);

    out.network.nodes = {"A", "B"};
    out.network.ac_lines = {line};
    out.scenario.node_names = {"A", "B"};
    out.scenario.node_series = {std::move(node_a), std::move(node_b)};
    out.scenario.ac_tp_energy = {TpSeries(ac_energy_mwh)};
    return out;
}

}  // namespace

TEST_CASE("fixed-injection needs carry the documented signs") {
    const Resolution res(60, 15);
    const std::size_t steps = 8;

    SECTION("production shortfall is a positive need") {
        Network network;
        network.nodes = {"A"};
        ScenarioHr scenario;
        scenario.node_names = {"A"};
        NodeHr node = zero_node(steps);
        node.hydro = flat(steps, 100.0);
        node.demand = flat(steps, 120.0);
        scenario.node_series = {std::move(node)};

        const std::vector<HrSeries> need =
            balancing_need_fixed_transmission(scenario, network, {}, res);
        REQUIRE(need.size() == 1);
        for (std::size_t j = 0; j < steps; ++j) {
            CHECK(need[0][j] == Catch::Approx(20.0));
        }
    }

    SECTION("HVDC exports deepen the deficit, imports relieve it") {
        Network network;
        network.nodes = {"A"};
        network.hvdc_lines = {HvdcLine{"A", "EXT", 30.0, 500.0, 500.0}};
        ScenarioHr scenario;
        scenario.node_names = {"A"};
        NodeHr node = zero_node(steps);
        node.hydro = flat(steps, 100.0);
        node.demand = flat(steps, 120.0);
        scenario.node_series = {std::move(node)};
        scenario.hvdc_flows = {flat(steps, 10.0)};

        const std::vector<HrSeries> exporting =
            balancing_need_fixed_transmission(scenario, network, {}, res);
        CHECK(exporting[0][0] == Catch::Approx(30.0));

        network.hvdc_lines = {HvdcLine{"EXT", "A", 30.0, 500.0, 500.0}};
        const std::vector<HrSeries> importing =
            balancing_need_fixed_transmission(scenario, network, {}, res);
        CHECK(importing[0][0] == Catch::Approx(10.0));
    }

    SECTION("an AC export shows up as positive need at the sending node") {
        TwoNodeCase c = two_node_case(std::vector<double>(steps, 0.0),
                                      AcLine{"A", "B", 1000.0, 1000.0, 0.0},
                                      {0.0, 0.0});
        const std::vector<HrSeries> need = balancing_need_fixed_transmission(
            c.scenario, c.network, {flat(steps, 10.0)}, c.res);
        REQUIRE(need.size() == 2);
        CHECK(need[0][3] == Catch::Approx(10.0));
        CHECK(need[1][3] == Catch::Approx(-10.0));
    }
}

TEST_CASE("opposite constant imbalances net to zero need") {
    // A runs 100 MW above / B 100 MW below demand; the scheduled AC energy
    // matches a flat 100 MW transfer, so the line absorbs everything.
    const std::size_t steps = 8;
    TwoNodeCase c = two_node_case(std::vector<double>(steps, 100.0),
                                  AcLine{"A", "B", 1000.0, 1000.0, 0.0},
                                  {100.0, 100.0});
    const NettingProblem problem =
        build_netting_problem(c.scenario, c.network, c.res, NettingConfig{});
    const NettingResult result = solve_netting(problem);

    CHECK(result.diagnostics.status == "optimal");
    CHECK(result.objective == Catch::Approx(0.0).margin(1e-5));
    REQUIRE(result.ac_flows.size() == 1);
    REQUIRE(result.balancing_need.size() == 2);
    for (std::size_t j = 0; j < steps; ++j) {
        CHECK(result.ac_flows[0][j] == Catch::Approx(100.0).margin(1e-6));
        CHECK(result.balancing_need[0][j] == Catch::Approx(0.0).margin(1e-6));
        CHECK(result.balancing_need[1][j] == Catch::Approx(0.0).margin(1e-6));
    }
}

TEST_CASE("a line scheduled at capacity leaves the residual imbalance in place") {
    // Deviations of +-150 MW but NTC 100 with the schedule already at the
    // bound: z is pinned to 100 MW, leaving -50 MW at A and +50 MW at B.
    const std::size_t steps = 8;
    TwoNodeCase c = two_node_case(std::vector<double>(steps, 150.0),
                                  AcLine{"A", "B", 100.0, 100.0, 0.0},
                                  {100.0, 100.0});
    const NettingResult result =
        solve_netting(build_netting_problem(c.scenario, c.network, c.res, NettingConfig{}));

    for (std::size_t j = 0; j < steps; ++j) {
        CHECK(result.ac_flows[0][j] == Catch::Approx(100.0).margin(1e-6));
        CHECK(result.balancing_need[0][j] == Catch::Approx(-50.0).margin(1e-5));
        CHECK(result.balancing_need[1][j] == Catch::Approx(50.0).margin(1e-5));
    }
    CHECK(result.objective == Catch::Approx(800.0).margin(1e-4));
}

TEST_CASE("the TRM unlocks additional netting capacity") {
    // Mirrored deviations alternating +-150 MW per step against NTC 100 MW
    // with TRM 50 MW and a zero AC schedule.  Without the margin the flow
    // saturates at +-100 MW and 100 MW of need remains per step; with it the
    // line carries the full 150 MW and only the smoothing cost is left.
    const std::size_t steps = 8;
    std::vector<double> dev(steps);
    for (std::size_t j = 0; j < steps; ++j) {
        dev[j] = (j % 2 == 0) ? 150.0 : -150.0;
    }
    TwoNodeCase c =
        two_node_case(dev, AcLine{"A", "B", 100.0, 100.0, 50.0}, {0.0, 0.0});

    NettingConfig without;
    without.use_trm = false;
    const NettingResult base =
        solve_netting(build_netting_problem(c.scenario, c.network, c.res, without));
    // 8 steps x 100 MW residual + alpha * 7 jumps of 200 MW.
    CHECK(base.objective == Catch::Approx(801.4).margin(1e-4));
    CHECK(std::abs(base.balancing_need[0][0]) == Catch::Approx(50.0).margin(1e-5));

    NettingConfig with_trm;
    with_trm.use_trm = true;
    const NettingResult widened =
        solve_netting(build_netting_problem(c.scenario, c.network, c.res, with_trm));
    // No residual need; alpha * 7 jumps of 300 MW.
    CHECK(widened.objective == Catch::Approx(2.1).margin(1e-4));
    for (std::size_t j = 0; j < steps; ++j) {
        CHECK(widened.balancing_need[0][j] == Catch::Approx(0.0).margin(1e-5));
        CHECK(widened.ac_flows[0][j] ==
              Catch::Approx((j % 2 == 0) ? 150.0 : -150.0).margin(1e-5));
    }

    // The reported objective is exactly the functional evaluated on the
    // returned arrays.
    for (const NettingResult& r : {base, widened}) {
        double recomputed = 0.0;
        for (const HrSeries& series : r.balancing_need) {
            for (std::size_t j = 0; j < series.size(); ++j) {
                recomputed += std::abs(series[j]);
            }
        }
        for (const HrSeries& z : r.ac_flows) {
            for (std::size_t j = 0; j + 1 < z.size(); ++j) {
                recomputed += 1e-3 * std::abs(z[j + 1] - z[j]);
            }
        }
        CHECK(r.objective == Catch::Approx(recomputed).margin(1e-9));
    }

    // The signed system-wide need is zero here whatever the flows do.
    const HrSeries total = net_system_need(widened);
    for (std::size_t j = 0; j < steps; ++j) {
        CHECK(total[j] == Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("window decomposition reports its seams") {
    const std::size_t steps = 8;
    TwoNodeCase c = two_node_case(std::vector<double>(steps, 100.0),
                                  AcLine{"A", "B", 1000.0, 1000.0, 0.0},
                                  {100.0, 100.0});
    NettingConfig cfg;
    cfg.window_tps = 1;
    const NettingResult result =
        solve_netting(build_netting_problem(c.scenario, c.network, c.res, cfg));
    REQUIRE(result.diagnostics.window_first_step == std::vector<std::size_t>{0, 4});
    CHECK(result.objective == Catch::Approx(0.0).margin(1e-5));

    NettingConfig full;
    full.window_tps = 0;
    const NettingResult whole =
        solve_netting(build_netting_problem(c.scenario, c.network, c.res, full));
    REQUIRE(whole.diagnostics.window_first_step == std::vector<std::size_t>{0});
}

TEST_CASE("an unattainable AC schedule is rejected as infeasible") {
    const std::size_t steps = 8;
    TwoNodeCase c = two_node_case(std::vector<double>(steps, 0.0),
                                  AcLine{"A", "B", 100.0, 100.0, 0.0},
                                  {0.0, 200.0});  // TP 2 wants a 200 MW mean flow

    try {
        build_netting_problem(c.scenario, c.network, c.res, NettingConfig{});
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(e.window_index() == 0);  // full horizon: one window
        CHECK(e.constraint_class() == "energy");
        CHECK(std::string(e.what()).find("TP 2") != std::string::npos);
    }

    NettingConfig per_tp;
    per_tp.window_tps = 1;
    try {
        build_netting_problem(c.scenario, c.network, c.res, per_tp);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(e.window_index() == 1);  // the offending TP is its own window
    }
}

TEST_CASE("network validation") {
    Network network;
    network.nodes = {"A", "B"};

    SECTION("duplicate node") {
        network.nodes = {"A", "A"};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("AC self-loop") {
        network.ac_lines = {AcLine{"A", "A", 1.0, 1.0, 0.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("unknown AC endpoint") {
        network.ac_lines = {AcLine{"A", "C", 1.0, 1.0, 0.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("negative AC capacity") {
        network.ac_lines = {AcLine{"A", "B", -1.0, 1.0, 0.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("duplicate AC line") {
        network.ac_lines = {AcLine{"A", "B", 1.0, 1.0, 0.0}, AcLine{"A", "B", 2.0, 2.0, 0.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("HVDC needs a positive ramp rate") {
        network.hvdc_lines = {HvdcLine{"A", "X", 0.0, 100.0, 100.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("negative HVDC capacity") {
        network.hvdc_lines = {HvdcLine{"A", "X", 30.0, -100.0, 100.0}};
        CHECK_THROWS_AS(validate(network), ValidationError);
    }
    SECTION("valid network passes") {
        network.ac_lines = {AcLine{"A", "B", 1.0, 1.0, 0.0}};
        network.hvdc_lines = {HvdcLine{"A", "X", 30.0, 100.0, 100.0}};
        CHECK_NOTHROW(validate(network));
    }
}

TEST_CASE("netting configuration validation") {
    NettingConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg.alpha = 0.1;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg.alpha = 1e-3;
    cfg.solver_tolerance = 0.0;
    CHECK_THROWS_AS(validate(cfg), ValidationError);
    cfg.solver_tolerance = 1e-6;
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("scenario shape validation") {
    const Resolution res(60, 15);
    const std::size_t steps = 8;
    TwoNodeCase c = two_node_case(std::vector<double>(steps, 0.0),
                                  AcLine{"A", "B", 100.0, 100.0, 0.0}, {0.0, 0.0});

    SECTION("mismatched AC flow count in the fixed-transmission helper") {
        CHECK_THROWS_AS(balancing_need_fixed_transmission(c.scenario, c.network, {}, res),
                        ValidationError);
    }
    SECTION("mismatched AC flow length") {
        CHECK_THROWS_AS(
            balancing_need_fixed_transmission(c.scenario, c.network, {flat(4, 0.0)}, res),
            ValidationError);
    }
    SECTION("category series length mismatch") {
        c.scenario.node_series[0].vres = flat(steps + 4, 0.0);
        CHECK_THROWS_AS(validate(c.scenario, c.network, res), ValidationError);
    }
    SECTION("AC energy series count mismatch") {
        c.scenario.ac_tp_energy.clear();
        CHECK_THROWS_AS(validate(c.scenario, c.network, res), ValidationError);
    }
    SECTION("AC energy series length mismatch") {
        c.scenario.ac_tp_energy = {TpSeries({0.0, 0.0, 0.0})};
        CHECK_THROWS_AS(validate(c.scenario, c.network, res), ValidationError);
    }
    SECTION("node missing from the network") {
        c.network.nodes = {"A", "C"};
        c.network.ac_lines.clear();
        c.scenario.ac_tp_energy.clear();
        CHECK_THROWS_AS(validate(c.scenario, c.network, res), ValidationError);
    }
}

TEST_CASE("net_system_need rejects an empty result") {
    NettingResult empty;
    CHECK_THROWS_AS(net_system_need(empty), ValidationError);
}
