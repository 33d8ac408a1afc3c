#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "intratp/errors.hpp"
#include "intratp/spline.hpp"
#include "oracle_spline.hpp"

using intratp::CubicSpline;
using intratp::ValidationError;

namespace {

double u53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

TEST_CASE("spline validates its knots") {
    CHECK_THROWS_AS(CubicSpline::natural({0.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(CubicSpline::natural({0.0, 1.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(CubicSpline::natural({0.0, 0.0}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(CubicSpline::natural({1.0, 0.0}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(CubicSpline::natural({0.0, std::nan("")}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("spline interpolates its knots exactly") {
    const std::vector<double> x{0.0, 1.0, 2.5, 4.0, 7.0};
    const std::vector<double> y{3.0, -1.0, 2.0, 2.0, 10.0};
    const CubicSpline spline = CubicSpline::natural(x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(spline(x[i]) == Catch::Approx(y[i]).margin(1e-12));
    }
}

TEST_CASE("two knots degenerate to the connecting line") {
    const CubicSpline spline = CubicSpline::natural({0.0, 2.0}, {1.0, 5.0});
    CHECK(spline(0.5) == Catch::Approx(2.0));
    CHECK(spline(1.0) == Catch::Approx(3.0));
}

TEST_CASE("a hand-solved three-knot case") {
    // Knots (0,0), (1,1), (2,0): the interior moment equation is
    // 4 M_1 = 6((0-1) - (1-0)) = -12, so M_1 = -3, and the first segment is
    // s(t) = 1.5 t - 0.5 t^3, giving s(0.5) = 0.6875.
    const CubicSpline spline = CubicSpline::natural({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    CHECK(spline(0.5) == Catch::Approx(0.6875).margin(1e-12));
    CHECK(spline(1.5) == Catch::Approx(0.6875).margin(1e-12));  // symmetric
}

TEST_CASE("values are held constant outside the knot range") {
    const CubicSpline spline = CubicSpline::natural({1.0, 2.0, 3.0}, {4.0, 6.0, 5.0});
    CHECK(spline(0.0) == 4.0);
    CHECK(spline(1.0) == 4.0);
    CHECK(spline(3.0) == 5.0);
    CHECK(spline(99.0) == 5.0);
}

TEST_CASE("natural boundary: curvature vanishes at the ends") {
    const CubicSpline spline =
        CubicSpline::natural({0.0, 1.0, 2.0, 3.0}, {0.0, 2.0, -1.0, 3.0});
    const double h = 1e-4;
    const double left = (spline(0.0 + 2 * h) - 2 * spline(0.0 + h) + spline(0.0)) / (h * h);
    const double right = (spline(3.0) - 2 * spline(3.0 - h) + spline(3.0 - 2 * h)) / (h * h);
    CHECK(std::abs(left) < 1e-2);
    CHECK(std::abs(right) < 1e-2);
}

TEST_CASE("spline agrees with the dense reference on random data") {
    std::mt19937_64 rng(20347);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(u53(rng) * 9.0);
        std::vector<double> x(n), y(n);
        double cursor = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cursor += 0.25 + u53(rng) * 3.0;
            x[i] = cursor;
            y[i] = -50.0 + u53(rng) * 100.0;
        }
        const CubicSpline spline = CubicSpline::natural(x, y);
        const oracle::DenseSpline reference(x, y);
        double scale = 1.0;
        for (const double value : y) {
            scale = std::max(scale, std::abs(value));
        }
        for (int k = 0; k <= 200; ++k) {
            const double q =
                x.front() - 1.0 + (x.back() - x.front() + 2.0) * (k / 200.0);
            CHECK(spline(q) == Catch::Approx(reference(q)).margin(1e-9 * scale));
        }
    }
}
