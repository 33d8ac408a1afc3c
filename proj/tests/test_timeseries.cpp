#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "intratp/errors.hpp"
#include "intratp/timeseries.hpp"

using intratp::HrSeries;
using intratp::Resolution;
using intratp::TpSeries;
using intratp::ValidationError;

TEST_CASE("Resolution validates its arguments") {
    CHECK_THROWS_AS(Resolution(0, 1), ValidationError);
    CHECK_THROWS_AS(Resolution(60, 0), ValidationError);
    CHECK_THROWS_AS(Resolution(60, -1), ValidationError);
    CHECK_THROWS_AS(Resolution(60, 7), ValidationError);   // not a divisor
    CHECK_THROWS_AS(Resolution(60, 60), ValidationError);  // fewer than 2 steps per TP
    const Resolution res(60, 15);
    CHECK(res.steps_per_tp() == 4);
    CHECK(res.tp_hours() == 1.0);
    CHECK(res.step_hours() == 0.25);
}

TEST_CASE("step centers sit mid-step") {
    const Resolution res(60, 1);
    CHECK(res.step_center_minutes(0) == 0.5);
    CHECK(res.step_center_minutes(59) == 59.5);
    CHECK(res.step_center_minutes(60) == 60.5);
}

TEST_CASE("TpSeries rejects empty and non-finite input") {
    CHECK_THROWS_AS(TpSeries(std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(TpSeries({1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(TpSeries({1.0, std::numeric_limits<double>::infinity()}),
                    ValidationError);
    const TpSeries tp({5.0, -3.0});
    CHECK(tp.size() == 2);
    CHECK(tp[1] == -3.0);
}

TEST_CASE("HrSeries with a resolution requires whole TPs") {
    const Resolution res(60, 15);
    CHECK_THROWS_AS(HrSeries(std::vector<double>(5, 1.0), res), ValidationError);
    CHECK_NOTHROW(HrSeries(std::vector<double>(8, 1.0), res));
}

TEST_CASE("basic power spreads TP energy uniformly") {
    const Resolution res(60, 15);
    const HrSeries basic = intratp::basic_power_expand(TpSeries({120.0, 60.0}), res);
    REQUIRE(basic.size() == 8);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(basic[j] == 120.0);  // 120 MWh over one hour
    }
    for (std::size_t j = 4; j < 8; ++j) {
        CHECK(basic[j] == 60.0);
    }
}

TEST_CASE("basic power at sub-hour TPs converts energy to power") {
    const Resolution res(15, 5);
    const HrSeries basic = intratp::basic_power_expand(TpSeries({25.0}), res);
    REQUIRE(basic.size() == 3);
    CHECK(basic[0] == Catch::Approx(100.0));  // 25 MWh in a quarter hour
}

TEST_CASE("power imbalance is the elementwise deviation") {
    const HrSeries actual({110.0, 95.0});
    const HrSeries basic({100.0, 100.0});
    const HrSeries imbalance = intratp::power_imbalance(actual, basic);
    CHECK(imbalance[0] == 10.0);
    CHECK(imbalance[1] == -5.0);
    CHECK_THROWS_AS(intratp::power_imbalance(actual, HrSeries({1.0, 2.0, 3.0})),
                    ValidationError);
}

TEST_CASE("TP energy of the basic expansion returns the original energies") {
    const Resolution res(60, 1);
    const TpSeries tp({120.0, 60.0, 945.5});
    const TpSeries energy =
        intratp::tp_energy_of(intratp::basic_power_expand(tp, res), res);
    REQUIRE(energy.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(energy[t] == Catch::Approx(tp[t]).epsilon(1e-12));
    }
}

TEST_CASE("symmetric deviation carries no TP energy imbalance") {
    // Exactly representable values: +25 MW for the first half of each TP,
    // -25 MW for the second half. The deviations cancel exactly in the
    // per-TP sum, so the energy imbalance is bit-exact zero while the power
    // imbalance is nonzero at every step.
    const Resolution res(60, 1);
    std::vector<double> actual;
    for (std::size_t t = 0; t < 2; ++t) {
        for (int j = 0; j < 30; ++j) {
            actual.push_back(125.0);
        }
        for (int j = 0; j < 30; ++j) {
            actual.push_back(75.0);
        }
    }
    const HrSeries basic = intratp::basic_power_expand(TpSeries({100.0, 100.0}), res);
    const HrSeries imbalance = intratp::power_imbalance(HrSeries(actual), basic);
    const TpSeries tp_imbalance = intratp::tp_energy_imbalance(imbalance, res);
    REQUIRE(tp_imbalance.size() == 2);
    CHECK(tp_imbalance[0] == 0.0);
    CHECK(tp_imbalance[1] == 0.0);
    for (std::size_t j = 0; j < imbalance.size(); ++j) {
        CHECK(imbalance[j] != 0.0);
    }
}
