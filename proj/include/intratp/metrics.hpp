#pragma once

// Analysis of balancing-need trajectories: summary statistics, density
// histograms, ramping-vs-variability cause classification, and the share
// of TP shifts where a component's ramp window was clipped (its schedule
// demanded more ramping than the assumed rate allows).

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "intratp/disaggregate.hpp"
#include "intratp/errors.hpp"
#include "intratp/timeseries.hpp"

namespace intratp {

// ---- summary statistics ------------------------------------------------------

struct BalancingStats {
    double max_need_mw = 0.0;
    double min_need_mw = 0.0;
    double mean_abs_need_mw = 0.0;
    double zero_share = 0.0;  // fraction of steps with |need| <= zero_threshold
};

inline constexpr double kDefaultZeroThresholdMw = 1e-3;

inline BalancingStats summary_stats(const HrSeries& need, double zero_threshold) {
    if (!(zero_threshold >= 0.0)) {
        throw ValidationError("summary_stats: zero_threshold must be nonnegative");
    }
    BalancingStats stats;
    stats.max_need_mw = need[0];
    stats.min_need_mw = need[0];
    double abs_sum = 0.0;
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < need.size(); ++j) {
        stats.max_need_mw = std::max(stats.max_need_mw, need[j]);
        stats.min_need_mw = std::min(stats.min_need_mw, need[j]);
        abs_sum += std::abs(need[j]);
        if (std::abs(need[j]) <= zero_threshold) {
            ++zeros;
        }
    }
    stats.mean_abs_need_mw = abs_sum / static_cast<double>(need.size());
    stats.zero_share = static_cast<double>(zeros) / static_cast<double>(need.size());
    return stats;
}

// ---- density histogram ---------------------------------------------------------

struct HistogramBin {
    double center_mw = 0.0;
    double density = 0.0;  // per MW; sum(density * bin_width) == 1
};

inline constexpr double kDefaultBinWidthMw = 10.0;

/// Histogram over bins centered at integer multiples of bin_width
/// (value v falls into the bin with center round(v / bin_width) *
/// bin_width).  Only occupied bins are reported, in ascending order.
inline std::vector<HistogramBin> density_histogram(const HrSeries& need, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw ValidationError("density_histogram: bin_width must be positive");
    }
    std::map<long long, std::size_t> counts;
    for (std::size_t j = 0; j < need.size(); ++j) {
        counts[std::llround(need[j] / bin_width)]++;
    }
    std::vector<HistogramBin> bins;
    bins.reserve(counts.size());
    const double total = static_cast<double>(need.size());
    for (const auto& [index, count] : counts) {
        bins.push_back(HistogramBin{static_cast<double>(index) * bin_width,
                                    static_cast<double>(count) / (total * bin_width)});
    }
    return bins;
}

// ---- cause classification -------------------------------------------------------

enum class CauseLabel : unsigned char { zero, ramping, variability };

inline const char* to_string(CauseLabel label) {
    switch (label) {
        case CauseLabel::zero: return "zero";
        case CauseLabel::ramping: return "ramping";
        case CauseLabel::variability: return "variability";
    }
    return "unknown";
}

/// Half-open range [first, last) of high-resolution step indices (0-based).
struct StepRange {
    std::size_t first = 0;
    std::size_t last = 0;

    bool empty() const { return first >= last; }
};

/// Steps whose sample centers lie strictly inside the ramp window
/// [shift - c, shift + c].  A center exactly on the window edge carries the
/// flat basic-power value and is not ramping.
inline StepRange ramp_window_steps(const RampWindow& window, const Resolution& res,
                                   std::size_t total_steps) {
    if (window.shift_index == 0) {
        throw ValidationError("ramp_window_steps: shift_index must be 1-based");
    }
    const double shift = static_cast<double>(window.shift_index) * res.tp_minutes();
    const double sm = res.step_minutes();
    // Centers are (j + 0.5) * sm; strictly inside means
    // j > (shift - c)/sm - 0.5 and j < (shift + c)/sm - 0.5.
    const double lo = (shift - window.c_minutes) / sm - 0.5;
    const double hi = (shift + window.c_minutes) / sm - 0.5;
    StepRange range;
    const double first = std::floor(lo) + 1.0;
    range.first = first < 0.0 ? 0 : static_cast<std::size_t>(first);
    const double last = std::ceil(hi);
    range.last = last < 0.0 ? 0 : std::min(static_cast<std::size_t>(last), total_steps);
    if (range.first > range.last) {
        range.first = range.last;
    }
    return range;
}

/// Label each step of a node's need: zero within the threshold, ramping
/// inside the union of the node's controllable/HVDC ramp windows, and
/// variability otherwise.
inline std::vector<CauseLabel> classify_cause(const HrSeries& need,
                                              const std::vector<StepRange>& ramp_steps,
                                              double zero_threshold) {
    std::vector<bool> in_ramp(need.size(), false);
    for (const StepRange& range : ramp_steps) {
        for (std::size_t j = range.first; j < range.last && j < need.size(); ++j) {
            in_ramp[j] = true;
        }
    }
    std::vector<CauseLabel> labels(need.size());
    for (std::size_t j = 0; j < need.size(); ++j) {
        if (std::abs(need[j]) <= zero_threshold) {
            labels[j] = CauseLabel::zero;
        } else if (in_ramp[j]) {
            labels[j] = CauseLabel::ramping;
        } else {
            labels[j] = CauseLabel::variability;
        }
    }
    return labels;
}

// ---- ramp adequacy ---------------------------------------------------------------

struct RampAdequacyEntry {
    std::string component;
    std::size_t clipped_shifts = 0;
    std::size_t total_shifts = 0;
    double share = 0.0;
};

/// Share of TP shifts whose ramp window was clipped to half a TP, per
/// component.  All reports must cover the same horizon (equal shift
/// counts); pass only components that ramp (HR_C and HVDC).
inline std::vector<RampAdequacyEntry> ramp_adequacy_report(
    const std::vector<std::pair<std::string, ConvergenceReport>>& reports) {
    std::vector<RampAdequacyEntry> entries;
    entries.reserve(reports.size());
    std::size_t expected = 0;
    for (const auto& [component, report] : reports) {
        if (report.ramp_windows.empty()) {
            throw ValidationError("ramp_adequacy_report: component '" + component +
                                  "' carries no ramp windows");
        }
        if (expected == 0) {
            expected = report.ramp_windows.size();
        } else if (report.ramp_windows.size() != expected) {
            throw ValidationError("ramp_adequacy_report: component '" + component +
                                  "' covers a different horizon");
        }
        RampAdequacyEntry entry;
        entry.component = component;
        entry.total_shifts = report.ramp_windows.size();
        for (const RampWindow& window : report.ramp_windows) {
            if (window.clipped) {
                ++entry.clipped_shifts;
            }
        }
        entry.share = static_cast<double>(entry.clipped_shifts) /
                      static_cast<double>(entry.total_shifts);
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace intratp
