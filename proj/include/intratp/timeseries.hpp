#pragma once

// Core time-series types and the definitional operations of the intra-TP
// model:
//
//   basic power        w^bas = w_t / tp_hours            (constant within TP)
//   power imbalance    w^imb = w^act - w^bas             (element-wise, MW)
//   TP energy          E_t   = step_hours * sum_j w_j    (MWh per TP)
//
// Two resolutions coexist: the trading-period grid t = 1..T carrying energy
// (MWh/TP) and the high-resolution grid t̂ = 1..T̂ carrying power (MW), with
// T̂ = T * steps_per_tp.  High-resolution values are interpreted as
// instantaneous power sampled at step centers (j - 0.5) * step_minutes.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intratp/errors.hpp"

namespace intratp {

namespace detail {

inline void require_finite(const std::vector<double>& values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValidationError(std::string(what) + ": non-finite value at index " +
                                  std::to_string(i));
        }
    }
}

}  // namespace detail

/// Grid arithmetic between the trading-period and high-resolution clocks.
/// step_minutes must divide tp_minutes exactly, and a TP must contain at
/// least two steps (a single-step TP makes intra-TP simulation vacuous).
class Resolution {
public:
    Resolution(int tp_minutes, int step_minutes)
        : tp_minutes_(tp_minutes), step_minutes_(step_minutes) {
        if (tp_minutes <= 0 || step_minutes <= 0) {
            throw ValidationError("Resolution: tp_minutes and step_minutes must be positive");
        }
        if (tp_minutes % step_minutes != 0) {
            throw ValidationError("Resolution: step_minutes (" + std::to_string(step_minutes) +
                                  ") must divide tp_minutes (" + std::to_string(tp_minutes) +
                                  ") exactly");
        }
        if (tp_minutes / step_minutes < 2) {
            throw ValidationError("Resolution: a TP must contain at least 2 steps");
        }
    }

    int tp_minutes() const { return tp_minutes_; }
    int step_minutes() const { return step_minutes_; }
    int steps_per_tp() const { return tp_minutes_ / step_minutes_; }

    double tp_hours() const { return tp_minutes_ / 60.0; }
    double step_hours() const { return step_minutes_ / 60.0; }

    /// Continuous time (minutes from horizon start) of high-resolution
    /// sample j (0-based): the center of step j.
    double step_center_minutes(std::size_t j) const {
        return (static_cast<double>(j) + 0.5) * step_minutes_;
    }

    bool operator==(const Resolution& other) const {
        return tp_minutes_ == other.tp_minutes_ && step_minutes_ == other.step_minutes_;
    }

private:
    int tp_minutes_;
    int step_minutes_;
};

/// Energy per trading period for one component (MWh/TP).  Values must be
/// finite.  Construction accepts T >= 1 so that per-TP aggregates of short
/// series can be represented; the disaggregation entry points and scenario
/// ingestion enforce T >= 2, where a single TP would be meaningless.
class TpSeries {
public:
    explicit TpSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw ValidationError("TpSeries: empty series");
        }
        detail::require_finite(values_, "TpSeries");
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t t) const { return values_[t]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

/// High-resolution power trajectory (MW), one value per step.  Values must
/// be finite.  The two-argument constructor additionally checks that the
/// length is an exact multiple of steps_per_tp; operations taking a
/// Resolution re-check this at the call site.
class HrSeries {
public:
    explicit HrSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw ValidationError("HrSeries: empty series");
        }
        detail::require_finite(values_, "HrSeries");
    }

    HrSeries(std::vector<double> values, const Resolution& res) : HrSeries(std::move(values)) {
        if (values_.size() % static_cast<std::size_t>(res.steps_per_tp()) != 0) {
            throw ValidationError("HrSeries: length " + std::to_string(values_.size()) +
                                  " is not a multiple of steps_per_tp " +
                                  std::to_string(res.steps_per_tp()));
        }
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

namespace detail {

inline std::size_t tp_count_of(const HrSeries& hr, const Resolution& res, const char* op) {
    const auto spt = static_cast<std::size_t>(res.steps_per_tp());
    if (hr.size() % spt != 0) {
        throw ValidationError(std::string(op) + ": series length " + std::to_string(hr.size()) +
                              " is not a multiple of steps_per_tp " + std::to_string(spt));
    }
    return hr.size() / spt;
}

}  // namespace detail

/// Basic power: spread each TP's energy uniformly over the TP, yielding a
/// step function constant within every TP (MWh/TP -> MW).
inline HrSeries basic_power_expand(const TpSeries& tp, const Resolution& res) {
    const auto spt = static_cast<std::size_t>(res.steps_per_tp());
    std::vector<double> out;
    out.reserve(tp.size() * spt);
    for (std::size_t t = 0; t < tp.size(); ++t) {
        const double level_mw = tp[t] / res.tp_hours();
        out.insert(out.end(), spt, level_mw);
    }
    return HrSeries(std::move(out));
}

/// Power imbalance of one component: actual minus basic, element-wise.
inline HrSeries power_imbalance(const HrSeries& actual, const HrSeries& basic) {
    if (actual.size() != basic.size()) {
        throw ValidationError("power_imbalance: length mismatch (" +
                              std::to_string(actual.size()) + " vs " +
                              std::to_string(basic.size()) + ")");
    }
    std::vector<double> out(actual.size());
    for (std::size_t j = 0; j < actual.size(); ++j) {
        out[j] = actual[j] - basic[j];
    }
    return HrSeries(std::move(out));
}

/// Per-TP energy of a high-resolution power trajectory (MW -> MWh/TP).
inline TpSeries tp_energy_of(const HrSeries& hr, const Resolution& res) {
    const std::size_t tp_count = detail::tp_count_of(hr, res, "tp_energy_of");
    const auto spt = static_cast<std::size_t>(res.steps_per_tp());
    std::vector<double> out(tp_count);
    for (std::size_t t = 0; t < tp_count; ++t) {
        double sum = 0.0;
        for (std::size_t j = t * spt; j < (t + 1) * spt; ++j) {
            sum += hr[j];
        }
        out[t] = res.step_hours() * sum;
    }
    return TpSeries(std::move(out));
}

/// TP energy imbalance: the energy of a power-imbalance trajectory per TP.
/// Numerically identical to tp_energy_of; kept as a named operation because
/// it is the quantity the correction loop drives to zero.
inline TpSeries tp_energy_imbalance(const HrSeries& imb, const Resolution& res) {
    detail::tp_count_of(imb, res, "tp_energy_imbalance");
    return tp_energy_of(imb, res);
}

}  // namespace intratp
