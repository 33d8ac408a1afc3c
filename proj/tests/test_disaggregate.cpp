#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "intratp/disaggregate.hpp"
#include "intratp/errors.hpp"
#include "intratp/timeseries.hpp"

using namespace intratp;

namespace {

double u53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

TEST_CASE("ramp spec validation") {
    CHECK_THROWS_AS(validate(RampSpec::absolute(0.0)), ValidationError);
    CHECK_THROWS_AS(validate(RampSpec::absolute(-1.0)), ValidationError);
    CHECK_THROWS_AS(validate(RampSpec::absolute(std::nan(""))), ValidationError);
    CHECK_THROWS_AS(validate(RampSpec::percent_of_max(5.0, 0.5)), ValidationError);
    CHECK_NOTHROW(validate(RampSpec::percent_of_max(5.0, 1.0)));
    CHECK_NOTHROW(validate(RampSpec::absolute(30.0)));
}

TEST_CASE("percent-mode half-width") {
    // 5 %/min of w_max = 200 MW is 10 MW/min; a 60 MW jump needs 6 minutes
    // of ramping, so the window extends 3 minutes to each side.
    const Resolution res(60, 1);
    const RampWindow w =
        ramp_window(100.0, 160.0, RampSpec::percent_of_max(5.0, 200.0), res, 7);
    CHECK(w.c_minutes == 3.0);
    CHECK_FALSE(w.clipped);
    CHECK(w.shift_index == 7);
}

TEST_CASE("absolute-mode half-width clips at half a TP") {
    // 60 MW at 0.5 MW/min wants 60 minutes half-width; the cap is 30.
    const Resolution res(60, 1);
    const RampWindow w = ramp_window(100.0, 160.0, RampSpec::absolute(0.5), res);
    CHECK(w.c_minutes == 30.0);
    CHECK(w.clipped);
}

TEST_CASE("a half-width exactly at the cap is not clipped") {
    // 60 MW at 1 MW/min gives raw half-width 30 == tp/2: feasible, not capped.
    const Resolution res(60, 1);
    const RampWindow w = ramp_window(100.0, 160.0, RampSpec::absolute(1.0), res);
    CHECK(w.c_minutes == 30.0);
    CHECK_FALSE(w.clipped);
}

TEST_CASE("zero level change gives a zero-width window") {
    const Resolution res(60, 1);
    const RampWindow w = ramp_window(250.0, 250.0, RampSpec::absolute(1.0), res);
    CHECK(w.c_minutes == 0.0);
    CHECK_FALSE(w.clipped);
}

TEST_CASE("controllable trajectory: frozen values around one shift") {
    // Levels 100 -> 160 MW at 30 MW/min over a 60-minute TP: half-width
    // c = 60/30/2 = 1, so the ramp spans [59, 61] minutes.
    const Resolution res(60, 1);
    const ControllableTrajectory traj({100.0, 160.0}, RampSpec::absolute(30.0), res);
    REQUIRE(traj.windows().size() == 1);
    CHECK(traj.windows()[0].shift_index == 1);
    CHECK(traj.windows()[0].c_minutes == 1.0);
    CHECK_FALSE(traj.windows()[0].clipped);

    CHECK(traj(0.0) == 100.0);
    CHECK(traj(59.0) == 100.0);   // window opens strictly after 59
    CHECK(traj(60.0) == 130.0);   // midpoint of the ramp
    CHECK(traj(61.0) == 160.0);   // window closed at 61
    CHECK(traj(119.0) == 160.0);

    const HrSeries hr = hr_controllable(TpSeries({100.0, 160.0}), RampSpec::absolute(30.0), res);
    REQUIRE(hr.size() == 120);
    CHECK(hr[58] == 100.0);  // step center 58.5
    CHECK(hr[59] == 115.0);  // step center 59.5: 1/4 into the ramp
    CHECK(hr[60] == 145.0);  // step center 60.5: 3/4 into the ramp
    CHECK(hr[61] == 160.0);  // step center 61.5
}

TEST_CASE("adjacent clipped windows meet continuously at the TP midpoint") {
    // Levels 0 -> 600 -> 0 MW at 1 MW/min: both windows clip to c = 30, so
    // they touch at minute 90 (the midpoint of the middle TP).
    const Resolution res(60, 1);
    const ControllableTrajectory traj({0.0, 600.0, 0.0}, RampSpec::absolute(1.0), res);
    REQUIRE(traj.windows().size() == 2);
    CHECK(traj.windows()[0].clipped);
    CHECK(traj.windows()[1].clipped);
    CHECK(traj.windows()[0].c_minutes == 30.0);
    CHECK(traj.windows()[1].c_minutes == 30.0);

    CHECK(traj(90.0) == 600.0);
    CHECK(traj(90.0 - 1e-7) == Catch::Approx(600.0).margin(1e-5));
    CHECK(traj(90.0 + 1e-7) == Catch::Approx(600.0).margin(1e-5));
    CHECK(traj(30.0) == 0.0);  // window of the first shift opens strictly after 30
    CHECK(traj(30.0 + 1e-7) == Catch::Approx(0.0).margin(1e-5));
    CHECK(traj(150.0) == 0.0);
}

TEST_CASE("varying trajectory holds end values and hits the knots") {
    // Two knots degenerate to a line from (30, 100) to (90, 160).
    const Resolution res(60, 1);
    const HrSeries hr = hr_varying(TpSeries({100.0, 160.0}), res);
    REQUIRE(hr.size() == 120);
    CHECK(hr[0] == 100.0);                       // step center 0.5, before the first knot
    CHECK(hr[59] == Catch::Approx(129.5));       // step center 59.5 on the line
    CHECK(hr[119] == 160.0);                     // step center 119.5, after the last knot

    const VaryingTrajectory traj({100.0, 160.0}, res);
    CHECK(traj(30.0) == 100.0);
    CHECK(traj(90.0) == 160.0);
    CHECK(traj(60.0) == Catch::Approx(130.0));
}

TEST_CASE("disaggregation entry points require at least two TPs") {
    const Resolution res(60, 1);
    const TpSeries single({100.0});
    CHECK_THROWS_AS(hr_varying(single, res), ValidationError);
    CHECK_THROWS_AS(hr_controllable(single, RampSpec::absolute(1.0), res), ValidationError);
    CHECK_THROWS_AS(enforce_tp_energy(single, DisaggMethod::varying(), res), ValidationError);
}

TEST_CASE("correction loop parameter validation") {
    const Resolution res(60, 1);
    const TpSeries tp({100.0, 200.0});
    CHECK_THROWS_AS(enforce_tp_energy(tp, DisaggMethod::varying(), res, 0.0, 10),
                    ValidationError);
    CHECK_THROWS_AS(enforce_tp_energy(tp, DisaggMethod::varying(), res, std::nan(""), 10),
                    ValidationError);
    CHECK_THROWS_AS(enforce_tp_energy(tp, DisaggMethod::varying(), res, 1e-8, 0),
                    ValidationError);
    CHECK_THROWS_AS(
        enforce_tp_energy(tp, DisaggMethod::controllable(RampSpec::absolute(0.0)), res),
        ValidationError);
}

TEST_CASE("a constant series converges in one iteration with zero error") {
    // 15-minute steps make step_hours = 0.25 exactly representable, so the
    // per-TP energy of the flat trajectory reproduces the input bit-exactly.
    const Resolution res(60, 15);
    const TpSeries tp({100.0, 100.0, 100.0});
    for (const DisaggMethod& method :
         {DisaggMethod::varying(), DisaggMethod::controllable(RampSpec::absolute(5.0))}) {
        const DisaggResult result = enforce_tp_energy(tp, method, res);
        CHECK(result.report.iterations == 1);
        CHECK(result.report.converged);
        CHECK(result.report.final_error == 0.0);
        for (std::size_t j = 0; j < result.series.size(); ++j) {
            CHECK(result.series[j] == 100.0);
        }
        for (const double h : result.report.per_tp_residual) {
            CHECK(h == 0.0);
        }
    }
}

TEST_CASE("correction conserves TP energy for random series") {
    const Resolution res(60, 5);
    std::mt19937_64 rng(4711);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> values(8);
        for (double& v : values) {
            v = 50.0 + u53(rng) * 450.0;
        }
        const TpSeries tp(values);

        double max_level = 1.0;
        for (const double v : values) {
            max_level = std::max(max_level, v / res.tp_hours());
        }

        const DisaggMethod methods[] = {
            DisaggMethod::varying(),
            DisaggMethod::controllable(RampSpec::absolute(20.0)),
            DisaggMethod::controllable(RampSpec::percent_of_max(5.0, max_level)),
        };
        for (const DisaggMethod& method : methods) {
            // e_min = 5e-9 bounds every per-TP residual: from
            // e = 1/2 sum h^2 <= 5e-9 follows |h_t| <= 1e-4 MWh.
            const DisaggResult result = enforce_tp_energy(tp, method, res, 5e-9, 100);
            CHECK(result.report.converged);
            CHECK(result.report.iterations >= 1);

            const TpSeries energy = tp_energy_of(result.series, res);
            REQUIRE(energy.size() == tp.size());
            double e_recomputed = 0.0;
            for (std::size_t t = 0; t < tp.size(); ++t) {
                const double h = tp[t] - energy[t];
                CHECK(std::abs(h) <= 1e-4);
                CHECK(result.report.per_tp_residual[t] == Catch::Approx(h).margin(1e-9));
                e_recomputed += 0.5 * h * h;
            }
            CHECK(result.report.final_error == Catch::Approx(e_recomputed).margin(1e-15));

            if (method.kind == DisaggMethod::Kind::controllable) {
                REQUIRE(result.report.ramp_windows.size() == tp.size() - 1);
                for (std::size_t s = 0; s < result.report.ramp_windows.size(); ++s) {
                    CHECK(result.report.ramp_windows[s].shift_index == s + 1);
                }
            } else {
                CHECK(result.report.ramp_windows.empty());
            }
        }
    }
}

TEST_CASE("hitting the iteration cap reports non-convergence") {
    const Resolution res(60, 1);
    const TpSeries tp({100.0, 400.0, 100.0, 400.0});
    const DisaggResult result =
        enforce_tp_energy(tp, DisaggMethod::varying(), res, 1e-18, 1);
    CHECK_FALSE(result.report.converged);
    CHECK(result.report.iterations == 1);
    CHECK(result.report.final_error > 1e-18);
    CHECK(result.report.per_tp_residual.size() == 4);
}

TEST_CASE("capacity scan flags the overshoot of a corrected ramp-down") {
    // 2000 -> 1000 MWh over 60-minute TPs: the ramp into the first TP's end
    // removes energy there, so the correction raises the early plateau above
    // the 2000 MW cap.
    const Resolution res(60, 1);
    const TpSeries tp({2000.0, 1000.0});
    const DisaggResult result = enforce_tp_energy(
        tp, DisaggMethod::controllable(RampSpec::absolute(10.0)), res);
    CHECK(result.report.converged);

    const std::vector<CapacityViolation> above =
        capacity_violation_scan(result.series, 0.0, 2000.0);
    REQUIRE_FALSE(above.empty());
    for (const CapacityViolation& v : above) {
        CHECK(v.excess_mw > 0.0);
        CHECK(v.step_index < 60);
    }

    const std::vector<CapacityViolation> below =
        capacity_violation_scan(result.series, 900.0, 3000.0);
    REQUIRE_FALSE(below.empty());
    for (const CapacityViolation& v : below) {
        CHECK(v.excess_mw < 0.0);
        CHECK(v.step_index >= 60);
    }

    CHECK(capacity_violation_scan(result.series, -1e9, 1e9).empty());
    CHECK_THROWS_AS(capacity_violation_scan(result.series, 10.0, 5.0), ValidationError);
}
