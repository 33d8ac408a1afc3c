#pragma once

// High-resolution disaggregation of per-TP energies.
//
// Controllable components (method HR_C) hold the basic power within each TP
// and ramp linearly across TP shifts.  The half-width C of the ramp window
// around the shift t -> t+1 is, with D = |level_{t+1} - level_t| in MW,
//
//   percent mode:   C = min( D / ((r/100) * w_max) * 1/2 ,  tp_minutes/2 )
//   absolute mode:  C = min( D / r * 1/2 ,                  tp_minutes/2 )
//
// where r is %/min of w_max resp. MW/min.  A window capped at half a TP is
// flagged "clipped": the TP schedule demanded faster ramping than the
// component can deliver.
//
// Varying components (method HR_V) follow a natural cubic spline through
// knots at TP midpoints ((t - 0.5) * tp_minutes, 1-based t) with the basic
// power as knot value; before the first and after the last knot the end
// value is held constant.
//
// Neither construction conserves TP energy exactly, so an iterative
// correction drives the per-TP energy error to zero: with a^1 = w,
//
//   h^i_t   = w_t - energy(wHat^i)_t        (per-TP energy residual, MWh)
//   e^i     = 1/2 * sum_t (h^i_t)^2         (total error, MWh^2)
//   a^{i+1} = a^i + h^i
//   wHat^{i+1} = f(a^{i+1})                 (f = HR_C or HR_V)
//
// iterated until e <= e_min or the iteration cap is reached.  Ramp windows
// depend on adjacent levels and are therefore recomputed from a^i every
// iteration; the report carries the final iteration's windows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intratp/errors.hpp"
#include "intratp/spline.hpp"
#include "intratp/timeseries.hpp"

namespace intratp {

enum class RampMode { percent_of_max, absolute };

/// Ramp-rate assumption of one controllable component.
struct RampSpec {
    RampMode mode = RampMode::absolute;
    double rate = 0.0;   // percent of w_max per minute, or MW per minute
    double w_max = 0.0;  // MW; used by percent_of_max only

    static RampSpec percent_of_max(double rate_pct_per_min, double w_max_mw) {
        return RampSpec{RampMode::percent_of_max, rate_pct_per_min, w_max_mw};
    }
    static RampSpec absolute(double rate_mw_per_min) {
        return RampSpec{RampMode::absolute, rate_mw_per_min, 0.0};
    }
};

inline void validate(const RampSpec& spec) {
    if (!(spec.rate > 0.0) || !std::isfinite(spec.rate)) {
        throw ValidationError("RampSpec: rate must be positive and finite");
    }
    if (spec.mode == RampMode::percent_of_max) {
        if (!std::isfinite(spec.w_max) || spec.w_max < 1.0) {
            throw ValidationError("RampSpec: w_max must be >= 1 MW in percent_of_max mode");
        }
    }
}

/// Ramp window around one TP shift.  shift_index is 1-based: the window
/// sits on the boundary between TP shift_index and TP shift_index + 1, at
/// continuous time shift_index * tp_minutes.
struct RampWindow {
    std::size_t shift_index = 0;
    double c_minutes = 0.0;
    bool clipped = false;
};

/// Half-width of the ramp window for one TP shift, from the adjacent
/// basic-power levels (MW).  The raw half-width is capped at half a TP;
/// clipped is set only when the cap was binding (raw strictly larger).
inline RampWindow ramp_window(double level_from_mw, double level_to_mw, const RampSpec& spec,
                              const Resolution& res, std::size_t shift_index = 0) {
    validate(spec);
    const double half_tp = res.tp_minutes() / 2.0;
    const double delta = std::abs(level_to_mw - level_from_mw);
    const double per_minute = spec.mode == RampMode::percent_of_max
                                  ? (spec.rate / 100.0) * spec.w_max
                                  : spec.rate;
    const double raw = delta / per_minute * 0.5;
    RampWindow window;
    window.shift_index = shift_index;
    window.clipped = raw > half_tp;
    window.c_minutes = window.clipped ? half_tp : raw;
    return window;
}

/// Continuous-time HR_C trajectory over per-TP power levels: constant
/// within each TP, linear across each shift over [shift - c, shift + c].
/// Windows of adjacent shifts may touch at a TP midpoint but never overlap
/// (c <= tp/2 on both sides), and the trajectory is continuous wherever a
/// window has positive width.
class ControllableTrajectory {
public:
    ControllableTrajectory(std::vector<double> levels_mw, const RampSpec& spec,
                           const Resolution& res)
        : levels_(std::move(levels_mw)), tp_minutes_(res.tp_minutes()) {
        if (levels_.size() < 2) {
            throw ValidationError("ControllableTrajectory: at least 2 TPs required");
        }
        windows_.reserve(levels_.size() - 1);
        for (std::size_t s = 0; s + 1 < levels_.size(); ++s) {
            windows_.push_back(ramp_window(levels_[s], levels_[s + 1], spec, res, s + 1));
        }
    }

    /// Value at continuous time tau (minutes from horizon start).
    double operator()(double tau_minutes) const {
        const double tp = static_cast<double>(tp_minutes_);
        auto t = static_cast<std::size_t>(
            std::clamp(std::floor(tau_minutes / tp), 0.0,
                       static_cast<double>(levels_.size() - 1)));
        // Ramp across the right boundary of TP t (shift t -> t+1)?
        if (t + 1 < levels_.size()) {
            const RampWindow& w = windows_[t];
            const double shift = static_cast<double>(t + 1) * tp;
            if (w.c_minutes > 0.0 && tau_minutes > shift - w.c_minutes) {
                return ramp_value(t, shift, w.c_minutes, tau_minutes);
            }
        }
        // Ramp across the left boundary of TP t (shift t-1 -> t)?
        if (t > 0) {
            const RampWindow& w = windows_[t - 1];
            const double shift = static_cast<double>(t) * tp;
            if (w.c_minutes > 0.0 && tau_minutes < shift + w.c_minutes) {
                return ramp_value(t - 1, shift, w.c_minutes, tau_minutes);
            }
        }
        return levels_[t];
    }

    const std::vector<RampWindow>& windows() const { return windows_; }
    const std::vector<double>& levels() const { return levels_; }

private:
    double ramp_value(std::size_t s, double shift, double c, double tau) const {
        const double frac = (tau - (shift - c)) / (2.0 * c);
        return levels_[s] + (levels_[s + 1] - levels_[s]) * frac;
    }

    std::vector<double> levels_;
    std::vector<RampWindow> windows_;
    int tp_minutes_;
};

/// Continuous-time HR_V trajectory: natural cubic spline through the TP
/// midpoints, end values held constant outside the knot range.
class VaryingTrajectory {
public:
    VaryingTrajectory(const std::vector<double>& levels_mw, const Resolution& res)
        : spline_(make_spline(levels_mw, res)) {}

    double operator()(double tau_minutes) const { return spline_(tau_minutes); }

    const CubicSpline& spline() const { return spline_; }

private:
    static CubicSpline make_spline(const std::vector<double>& levels, const Resolution& res) {
        if (levels.size() < 2) {
            throw ValidationError("VaryingTrajectory: at least 2 TPs required");
        }
        std::vector<double> knot_x(levels.size());
        for (std::size_t t = 0; t < levels.size(); ++t) {
            knot_x[t] = (static_cast<double>(t) + 0.5) * res.tp_minutes();
        }
        return CubicSpline::natural(std::move(knot_x), levels);
    }

    CubicSpline spline_;
};

namespace detail {

/// Per-TP basic-power levels (MW) of a working series in MWh/TP.
inline std::vector<double> levels_of(const std::vector<double>& a_mwh, const Resolution& res) {
    std::vector<double> levels(a_mwh.size());
    for (std::size_t t = 0; t < a_mwh.size(); ++t) {
        levels[t] = a_mwh[t] / res.tp_hours();
    }
    return levels;
}

/// Sample a continuous trajectory at every high-resolution step center.
template <typename Trajectory>
std::vector<double> sample_steps(const Trajectory& traj, std::size_t tp_count,
                                 const Resolution& res) {
    const auto spt = static_cast<std::size_t>(res.steps_per_tp());
    std::vector<double> out(tp_count * spt);
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = traj(res.step_center_minutes(j));
    }
    return out;
}

}  // namespace detail

/// Method HR_C: sample the controllable trajectory built from the basic
/// power of each TP at every step center.
inline HrSeries hr_controllable(const TpSeries& tp, const RampSpec& spec, const Resolution& res) {
    if (tp.size() < 2) {
        throw ValidationError("hr_controllable: at least 2 TPs required");
    }
    const ControllableTrajectory traj(detail::levels_of(tp.values(), res), spec, res);
    return HrSeries(detail::sample_steps(traj, tp.size(), res));
}

/// Method HR_V: sample the spline trajectory through the TP-midpoint knots
/// at every step center.
inline HrSeries hr_varying(const TpSeries& tp, const Resolution& res) {
    if (tp.size() < 2) {
        throw ValidationError("hr_varying: at least 2 TPs required");
    }
    const VaryingTrajectory traj(detail::levels_of(tp.values(), res), res);
    return HrSeries(detail::sample_steps(traj, tp.size(), res));
}

/// Disaggregation method selector for the correction loop.
struct DisaggMethod {
    enum class Kind { controllable, varying };

    Kind kind = Kind::varying;
    RampSpec spec;  // used by controllable only

    static DisaggMethod controllable(const RampSpec& ramp_spec) {
        return DisaggMethod{Kind::controllable, ramp_spec};
    }
    static DisaggMethod varying() { return DisaggMethod{Kind::varying, RampSpec{}}; }
};

/// Outcome of the TP-energy correction loop for one component.
struct ConvergenceReport {
    std::size_t iterations = 0;            // number of f(*) evaluations
    double final_error = 0.0;              // e at exit, MWh^2
    std::vector<double> per_tp_residual;   // h_t at exit, MWh
    bool converged = false;                // final_error <= e_min
    std::vector<RampWindow> ramp_windows;  // final iteration's windows (HR_C only)
};

struct DisaggResult {
    HrSeries series;
    ConvergenceReport report;
};

/// Default accepted error: per-TP RMS residual of 1e-4 MWh.
inline double default_e_min(std::size_t tp_count) {
    return static_cast<double>(tp_count) * 1e-4 * 1e-4 / 2.0;
}

inline constexpr std::size_t kDefaultMaxIterations = 100;

/// Iterative correction ensuring the high-resolution series reproduces the
/// TP energies of w.  Non-convergence within max_iterations is reported,
/// not thrown; a non-finite working series mid-iteration (divergence) is an
/// error.
inline DisaggResult enforce_tp_energy(const TpSeries& tp, const DisaggMethod& method,
                                      const Resolution& res, double e_min,
                                      std::size_t max_iterations) {
    if (tp.size() < 2) {
        throw ValidationError("enforce_tp_energy: at least 2 TPs required");
    }
    if (!(e_min > 0.0) || !std::isfinite(e_min)) {
        throw ValidationError("enforce_tp_energy: e_min must be positive and finite");
    }
    if (max_iterations < 1) {
        throw ValidationError("enforce_tp_energy: max_iterations must be >= 1");
    }
    if (method.kind == DisaggMethod::Kind::controllable) {
        validate(method.spec);
    }

    const std::size_t tp_count = tp.size();
    std::vector<double> a = tp.values();  // working series a^i, MWh/TP

    std::vector<double> sampled;
    std::vector<RampWindow> windows;
    std::vector<double> h(tp_count);
    double e = 0.0;
    std::size_t iteration = 0;
    bool converged = false;

    while (true) {
        // wHat^i = f(a^i), recomputing ramp windows from the current levels.
        const std::vector<double> levels = detail::levels_of(a, res);
        if (method.kind == DisaggMethod::Kind::controllable) {
            const ControllableTrajectory traj(levels, method.spec, res);
            sampled = detail::sample_steps(traj, tp_count, res);
            windows = traj.windows();
        } else {
            const VaryingTrajectory traj(levels, res);
            sampled = detail::sample_steps(traj, tp_count, res);
        }
        ++iteration;

        // h^i and e^i from the sampled series.
        const auto spt = static_cast<std::size_t>(res.steps_per_tp());
        e = 0.0;
        for (std::size_t t = 0; t < tp_count; ++t) {
            double sum = 0.0;
            for (std::size_t j = t * spt; j < (t + 1) * spt; ++j) {
                sum += sampled[j];
            }
            h[t] = tp[t] - res.step_hours() * sum;
            if (!std::isfinite(h[t])) {
                throw ValidationError("enforce_tp_energy: non-finite residual at iteration " +
                                      std::to_string(iteration));
            }
            e += 0.5 * h[t] * h[t];
        }

        if (e <= e_min) {
            converged = true;
            break;
        }
        if (iteration >= max_iterations) {
            break;
        }

        // a^{i+1} = a^i + h^i
        for (std::size_t t = 0; t < tp_count; ++t) {
            a[t] += h[t];
            if (!std::isfinite(a[t])) {
                throw ValidationError(
                    "enforce_tp_energy: working series diverged at iteration " +
                    std::to_string(iteration));
            }
        }
    }

    ConvergenceReport report;
    report.iterations = iteration;
    report.final_error = e;
    report.per_tp_residual = h;
    report.converged = converged;
    report.ramp_windows = std::move(windows);
    return DisaggResult{HrSeries(std::move(sampled)), std::move(report)};
}

inline DisaggResult enforce_tp_energy(const TpSeries& tp, const DisaggMethod& method,
                                      const Resolution& res) {
    return enforce_tp_energy(tp, method, res, default_e_min(tp.size()), kDefaultMaxIterations);
}

/// One out-of-bounds high-resolution step; excess_mw is signed (positive
/// above the upper bound, negative below the lower bound).
struct CapacityViolation {
    std::size_t step_index = 0;  // 0-based
    double excess_mw = 0.0;
};

/// Scan a trajectory against capacity bounds.  The series is reported, not
/// clamped: the correction loop may legitimately push values past a limit
/// that the TP schedule already saturated, and that observation is the
/// point of the scan.
inline std::vector<CapacityViolation> capacity_violation_scan(const HrSeries& hr, double lower_mw,
                                                              double upper_mw) {
    if (!(lower_mw <= upper_mw)) {
        throw ValidationError("capacity_violation_scan: lower bound exceeds upper bound");
    }
    std::vector<CapacityViolation> violations;
    for (std::size_t j = 0; j < hr.size(); ++j) {
        if (hr[j] > upper_mw) {
            violations.push_back(CapacityViolation{j, hr[j] - upper_mw});
        } else if (hr[j] < lower_mw) {
            violations.push_back(CapacityViolation{j, hr[j] - lower_mw});
        }
    }
    return violations;
}

}  // namespace intratp
