#pragma once

// Natural cubic spline interpolation.
//
// Given knots (x_0, y_0), ..., (x_{n-1}, y_{n-1}) with strictly increasing
// abscissae, the natural spline is the C2 piecewise cubic interpolant with
// zero second derivative at both end knots.  The second derivatives M_i at
// the knots solve the tridiagonal system
//
//   h_{i-1} M_{i-1} + 2 (h_{i-1} + h_i) M_i + h_i M_{i+1}
//       = 6 [ (y_{i+1} - y_i)/h_i - (y_i - y_{i-1})/h_{i-1} ],   i = 1..n-2
//
// with M_0 = M_{n-1} = 0 and h_i = x_{i+1} - x_i, solved here by the Thomas
// algorithm.  Outside [x_0, x_{n-1}] evaluation holds the end-knot value
// constant (no polynomial extrapolation).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intratp/errors.hpp"

namespace intratp {

class CubicSpline {
public:
    /// Fit a natural cubic spline through the given knots.  Requires at
    /// least two knots and strictly increasing x.  With exactly two knots
    /// the spline degenerates to the connecting line.
    static CubicSpline natural(std::vector<double> x, std::vector<double> y) {
        if (x.size() != y.size()) {
            throw ValidationError("CubicSpline: knot count mismatch (" +
                                  std::to_string(x.size()) + " vs " +
                                  std::to_string(y.size()) + ")");
        }
        if (x.size() < 2) {
            throw ValidationError("CubicSpline: at least 2 knots required");
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
                throw ValidationError("CubicSpline: non-finite knot at index " +
                                      std::to_string(i));
            }
            if (i > 0 && !(x[i] > x[i - 1])) {
                throw ValidationError("CubicSpline: knot abscissae must be strictly "
                                      "increasing at index " + std::to_string(i));
            }
        }

        const std::size_t n = x.size();
        std::vector<double> m(n, 0.0);  // second derivatives, natural: m[0] = m[n-1] = 0
        if (n > 2) {
            // Thomas algorithm on the interior system, indices 1..n-2.
            const std::size_t k = n - 2;
            std::vector<double> diag(k), upper(k), rhs(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double h_lo = x[i + 1] - x[i];
                const double h_hi = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h_lo + h_hi);
                upper[i] = h_hi;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h_hi - (y[i + 1] - y[i]) / h_lo);
            }
            // Forward elimination; the sub-diagonal entry in row i is h_lo(i).
            for (std::size_t i = 1; i < k; ++i) {
                const double h_lo = x[i + 1] - x[i];
                const double factor = h_lo / diag[i - 1];
                diag[i] -= factor * upper[i - 1];
                rhs[i] -= factor * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for (std::size_t i = k - 1; i > 0; --i) {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }

        return CubicSpline(std::move(x), std::move(y), std::move(m));
    }

    /// Evaluate the spline at abscissa q.  Outside the knot range the
    /// nearest end-knot value is returned.
    double operator()(double q) const {
        if (q <= x_.front()) {
            return y_.front();
        }
        if (q >= x_.back()) {
            return y_.back();
        }
        // Locate the segment [x_i, x_{i+1}] containing q.
        const auto it = std::upper_bound(x_.begin(), x_.end(), q);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double dx = q - x_[i];
        const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
        const double c = m_[i] / 2.0;
        const double d = (m_[i + 1] - m_[i]) / (6.0 * h);
        return y_[i] + dx * (b + dx * (c + dx * d));
    }

    const std::vector<double>& knot_x() const { return x_; }
    const std::vector<double>& knot_y() const { return y_; }

private:
    CubicSpline(std::vector<double> x, std::vector<double> y, std::vector<double> m)
        : x_(std::move(x)), y_(std::move(y)), m_(std::move(m)) {}

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivative at each knot
};

}  // namespace intratp
