#pragma once

// Self-contained linear-programming solver for problems of the form
//
//   minimize    c' x
//   subject to  A x = b,      lo <= x <= hi,
//
// with finite lower bounds and possibly infinite upper bounds, as produced
// by the L1 reformulation of the netting objective (absolute values split
// into pairs of nonnegative variables).
//
// Method: two-phase bounded-variable revised simplex.
//   * Crash basis: per row, the first singleton column that can absorb the
//     row residual within its bounds becomes basic (the netting problem's
//     split variables make almost every row self-starting); remaining rows
//     receive one artificial column each, eliminated in phase 1.
//   * Basis handling: sparse LU of the basis (Eigen SparseLU) plus
//     product-form eta updates, refactorized every refactor_interval pivots.
//   * Pricing: Dantzig (most violated reduced cost) with a permanent switch
//     to Bland's rule after a long degenerate stall, which guarantees
//     termination.
//   * Ratio test: two passes; the second pass picks the numerically best
//     pivot among the near-minimal ratios.
//
// The implementation is deterministic: identical problems yield identical
// pivot sequences and solutions.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "intratp/errors.hpp"

namespace intratp::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Equality-form LP with boxed variables, stored column-wise.
struct LpProblem {
    std::size_t rows = 0;
    std::vector<double> rhs;  // b, size rows

    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::vector<std::pair<std::size_t, double>>> columns;  // (row, coefficient)

    explicit LpProblem(std::size_t num_rows = 0) : rows(num_rows), rhs(num_rows, 0.0) {}

    std::size_t num_columns() const { return cost.size(); }

    std::size_t add_column(double c, double lo, double hi,
                           std::vector<std::pair<std::size_t, double>> entries) {
        cost.push_back(c);
        lower.push_back(lo);
        upper.push_back(hi);
        columns.push_back(std::move(entries));
        return cost.size() - 1;
    }

    void validate() const {
        for (std::size_t j = 0; j < num_columns(); ++j) {
            if (!std::isfinite(cost[j])) {
                throw ValidationError("LpProblem: non-finite cost in column " + std::to_string(j));
            }
            if (!std::isfinite(lower[j])) {
                throw ValidationError("LpProblem: lower bound of column " + std::to_string(j) +
                                      " must be finite");
            }
            if (std::isnan(upper[j]) || upper[j] < lower[j]) {
                throw ValidationError("LpProblem: empty bound interval in column " +
                                      std::to_string(j));
            }
            for (const auto& [row, value] : columns[j]) {
                if (row >= rows) {
                    throw ValidationError("LpProblem: row index out of range in column " +
                                          std::to_string(j));
                }
                if (!std::isfinite(value)) {
                    throw ValidationError("LpProblem: non-finite coefficient in column " +
                                          std::to_string(j));
                }
            }
        }
        for (std::size_t i = 0; i < rows; ++i) {
            if (!std::isfinite(rhs[i])) {
                throw ValidationError("LpProblem: non-finite rhs in row " + std::to_string(i));
            }
        }
    }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct LpSolution {
    LpStatus status = LpStatus::iteration_limit;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;         // total pivots over both phases
    std::size_t phase1_iterations = 0;  // pivots spent reaching feasibility
};

struct SimplexOptions {
    double feas_tol = 1e-7;          // bound/rhs feasibility tolerance
    double opt_tol = 1e-7;           // reduced-cost optimality tolerance
    double pivot_tol = 1e-9;         // smallest usable pivot magnitude
    std::size_t max_iterations = 0;  // 0: derived from problem size
    std::size_t refactor_interval = 64;
    std::size_t stall_limit = 400;   // degenerate pivots before Bland's rule
};

namespace detail {

enum class VarStatus : unsigned char { at_lower, at_upper, basic };

class SimplexSolver {
public:
    SimplexSolver(const LpProblem& problem, const SimplexOptions& options)
        : opt_(options), m_(problem.rows), n_orig_(problem.num_columns()) {
        problem.validate();
        cost_ = problem.cost;
        lower_ = problem.lower;
        upper_ = problem.upper;
        columns_ = problem.columns;
        rhs_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) {
            rhs_(static_cast<Eigen::Index>(i)) = problem.rhs[i];
        }
        if (opt_.max_iterations == 0) {
            max_iterations_ = 10000 + 50 * (m_ + n_orig_);
        } else {
            max_iterations_ = opt_.max_iterations;
        }
    }

    LpSolution run() {
        LpSolution solution;
        start_basis();

        if (artificial_count_ > 0) {
            const bool phase1_done = iterate(phase1_cost_);
            solution.phase1_iterations = iterations_;
            if (!phase1_done) {
                solution.status = LpStatus::iteration_limit;
                solution.iterations = iterations_;
                return solution;
            }
            refactor();  // tighten basic values before judging feasibility
            double infeas = 0.0;
            for (std::size_t j = n_orig_; j < total_columns(); ++j) {
                infeas += std::abs(x_[j]);
            }
            const double scale = 1.0 + rhs_.cwiseAbs().maxCoeff();
            if (infeas > opt_.feas_tol * scale * 10.0) {
                solution.status = LpStatus::infeasible;
                solution.objective = infeas;
                solution.iterations = iterations_;
                return solution;
            }
            // Pin the artificials at zero for phase 2; fixed columns are
            // never priced, so they cannot re-enter.
            for (std::size_t j = n_orig_; j < total_columns(); ++j) {
                lower_[j] = 0.0;
                upper_[j] = 0.0;
                if (status_[j] != VarStatus::basic) {
                    x_[j] = 0.0;
                }
            }
        }

        stalled_ = 0;
        bland_ = false;
        if (!iterate(cost_)) {
            if (unbounded_) {
                solution.status = LpStatus::unbounded;
            } else {
                solution.status = LpStatus::iteration_limit;
            }
            solution.iterations = iterations_;
            return solution;
        }

        refactor();  // final clean solve of the basic values
        solution.status = LpStatus::optimal;
        solution.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_orig_));
        double objective = 0.0;
        for (std::size_t j = 0; j < n_orig_; ++j) {
            objective += cost_[j] * x_[j];
        }
        solution.objective = objective;
        solution.iterations = iterations_;
        return solution;
    }

private:
    std::size_t total_columns() const { return cost_.size(); }

    // ---- start basis ----------------------------------------------------

    void start_basis() {
        const std::size_t n = n_orig_;
        status_.assign(n, VarStatus::at_lower);
        x_.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            // Nonbasic start at the finite bound of smaller magnitude.
            if (std::isfinite(upper_[j]) && std::abs(upper_[j]) < std::abs(lower_[j])) {
                status_[j] = VarStatus::at_upper;
                x_[j] = upper_[j];
            } else {
                status_[j] = VarStatus::at_lower;
                x_[j] = lower_[j];
            }
        }

        Eigen::VectorXd residual = rhs_;
        for (std::size_t j = 0; j < n; ++j) {
            if (x_[j] != 0.0) {
                for (const auto& [row, value] : columns_[j]) {
                    residual(static_cast<Eigen::Index>(row)) -= value * x_[j];
                }
            }
        }

        // Singleton columns per row, in column order.
        std::vector<std::vector<std::size_t>> row_singletons(m_);
        for (std::size_t j = 0; j < n; ++j) {
            if (columns_[j].size() == 1) {
                row_singletons[columns_[j][0].first].push_back(j);
            }
        }

        basis_.assign(m_, SIZE_MAX);
        for (std::size_t i = 0; i < m_; ++i) {
            const double r = residual(static_cast<Eigen::Index>(i));
            for (const std::size_t j : row_singletons[i]) {
                if (status_[j] == VarStatus::basic) {
                    continue;
                }
                const double candidate = x_[j] + r / columns_[j][0].second;
                if (candidate >= lower_[j] && candidate <= upper_[j]) {
                    status_[j] = VarStatus::basic;
                    x_[j] = candidate;
                    basis_[i] = j;
                    break;
                }
            }
        }

        // One artificial per uncovered row, signed to start nonnegative.
        phase1_cost_.assign(n, 0.0);
        artificial_count_ = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] != SIZE_MAX) {
                continue;
            }
            const double r = residual(static_cast<Eigen::Index>(i));
            const double sign = r < 0.0 ? -1.0 : 1.0;
            cost_.push_back(0.0);
            phase1_cost_.push_back(1.0);
            lower_.push_back(0.0);
            upper_.push_back(kInfinity);
            columns_.push_back({{i, sign}});
            status_.push_back(VarStatus::basic);
            x_.push_back(std::abs(r));
            basis_[i] = total_columns() - 1;
            ++artificial_count_;
        }

        refactor();
    }

    // ---- factorization ---------------------------------------------------

    void refactor() {
        if (m_ == 0) {  // box-only problem: no basis matrix to factorize
            etas_.clear();
            return;
        }
        std::vector<Eigen::Triplet<double>> triplets;
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& [row, value] : columns_[basis_[i]]) {
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(i), value);
            }
        }
        Eigen::SparseMatrix<double> basis_matrix(static_cast<Eigen::Index>(m_),
                                                 static_cast<Eigen::Index>(m_));
        basis_matrix.setFromTriplets(triplets.begin(), triplets.end());
        lu_.compute(basis_matrix);
        if (lu_.info() != Eigen::Success) {
            throw ValidationError("lp: singular basis encountered during refactorization");
        }
        etas_.clear();

        // Recompute basic values from scratch to shed accumulated drift:
        // x_B = B^{-1} (b - N x_N).
        Eigen::VectorXd residual = rhs_;
        for (std::size_t j = 0; j < total_columns(); ++j) {
            if (status_[j] != VarStatus::basic && x_[j] != 0.0) {
                for (const auto& [row, value] : columns_[j]) {
                    residual(static_cast<Eigen::Index>(row)) -= value * x_[j];
                }
            }
        }
        const Eigen::VectorXd xb = lu_.solve(residual);
        for (std::size_t i = 0; i < m_; ++i) {
            x_[basis_[i]] = xb(static_cast<Eigen::Index>(i));
        }
    }

    /// v := B^{-1} v  (base factor, then eta file in push order).
    void ftran(Eigen::VectorXd& v) const {
        if (m_ == 0) {
            return;
        }
        Eigen::VectorXd base = lu_.solve(v);
        v.swap(base);
        for (const auto& [r, w] : etas_) {
            const auto ri = static_cast<Eigen::Index>(r);
            const double pivot_value = v(ri) / w(ri);
            v -= pivot_value * w;
            v(ri) = pivot_value;
        }
    }

    /// v := B^{-T} v  (eta file in reverse order, then transposed base factor).
    void btran(Eigen::VectorXd& v) const {
        if (m_ == 0) {
            return;
        }
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            const auto ri = static_cast<Eigen::Index>(it->first);
            const Eigen::VectorXd& w = it->second;
            const double s = w.dot(v) - w(ri) * v(ri);
            v(ri) = (v(ri) - s) / w(ri);
        }
        Eigen::VectorXd base = lu_.transpose().solve(v);
        v.swap(base);
    }

    // ---- simplex iterations ----------------------------------------------

    /// Run pivots under the given cost vector until optimal for that cost.
    /// Returns false when the iteration limit was reached or (phase 2 only)
    /// the problem is unbounded.
    bool iterate(const std::vector<double>& cost) {
        double previous_objective = kInfinity;
        while (true) {
            if (etas_.size() >= opt_.refactor_interval) {
                refactor();
            }

            // Pricing: y = B^{-T} c_B, then reduced costs on nonbasic columns.
            Eigen::VectorXd y(static_cast<Eigen::Index>(m_));
            for (std::size_t i = 0; i < m_; ++i) {
                y(static_cast<Eigen::Index>(i)) = cost[basis_[i]];
            }
            btran(y);

            std::size_t entering = SIZE_MAX;
            double best_violation = opt_.opt_tol;
            for (std::size_t j = 0; j < total_columns(); ++j) {
                if (status_[j] == VarStatus::basic || lower_[j] == upper_[j]) {
                    continue;
                }
                double reduced = cost[j];
                for (const auto& [row, value] : columns_[j]) {
                    reduced -= y(static_cast<Eigen::Index>(row)) * value;
                }
                const double violation =
                    status_[j] == VarStatus::at_lower ? -reduced : reduced;
                if (violation > best_violation) {
                    entering = j;
                    if (bland_) {
                        break;  // Bland: first (smallest-index) violation
                    }
                    best_violation = violation;
                }
            }
            if (entering == SIZE_MAX) {
                return true;  // optimal for this cost vector
            }
            if (iterations_ >= max_iterations_) {
                return false;
            }

            if (!pivot(entering)) {
                return false;  // unbounded
            }
            ++iterations_;

            // Objective-based stall detection drives the Bland switch.
            double objective = 0.0;
            for (std::size_t j = 0; j < total_columns(); ++j) {
                objective += cost[j] * x_[j];
            }
            if (objective < previous_objective - 1e-10 * (1.0 + std::abs(previous_objective))) {
                stalled_ = 0;
            } else if (!bland_ && ++stalled_ > opt_.stall_limit) {
                bland_ = true;
            }
            previous_objective = objective;
        }
    }

    /// One simplex step for the chosen entering column.  Returns false on
    /// unboundedness.
    bool pivot(std::size_t entering) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        for (const auto& [row, value] : columns_[entering]) {
            w(static_cast<Eigen::Index>(row)) = value;
        }
        ftran(w);

        const double dir = status_[entering] == VarStatus::at_lower ? 1.0 : -1.0;

        // Pass 1: minimal blocking ratio over the basic variables, plus the
        // entering variable's own bound range.
        const double bound_range = upper_[entering] - lower_[entering];  // may be +inf
        double theta_min = kInfinity;
        for (std::size_t i = 0; i < m_; ++i) {
            const double g = dir * w(static_cast<Eigen::Index>(i));
            const std::size_t bj = basis_[i];
            double theta;
            if (g > opt_.pivot_tol) {
                theta = (x_[bj] - lower_[bj]) / g;
            } else if (g < -opt_.pivot_tol && std::isfinite(upper_[bj])) {
                theta = (x_[bj] - upper_[bj]) / g;
            } else {
                continue;
            }
            theta_min = std::min(theta_min, std::max(theta, 0.0));
        }

        if (!std::isfinite(theta_min) && !std::isfinite(bound_range)) {
            unbounded_ = true;
            return false;
        }

        if (bound_range <= theta_min) {
            // Bound flip: the entering variable crosses to its other bound;
            // the basis is unchanged.
            const double step = dir * bound_range;
            for (std::size_t i = 0; i < m_; ++i) {
                const double g = w(static_cast<Eigen::Index>(i));
                if (g != 0.0) {
                    x_[basis_[i]] -= step * g;
                }
            }
            if (status_[entering] == VarStatus::at_lower) {
                status_[entering] = VarStatus::at_upper;
                x_[entering] = upper_[entering];
            } else {
                status_[entering] = VarStatus::at_lower;
                x_[entering] = lower_[entering];
            }
            return true;
        }

        // Pass 2: among the near-minimal ratios pick the numerically safest
        // pivot (largest magnitude); Bland mode breaks ties by smallest
        // variable index for guaranteed termination.
        const double slack = 1e-9 * (1.0 + theta_min);
        std::size_t leaving_pos = SIZE_MAX;
        double best_pivot = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double g = dir * w(static_cast<Eigen::Index>(i));
            const std::size_t bj = basis_[i];
            double theta;
            if (g > opt_.pivot_tol) {
                theta = (x_[bj] - lower_[bj]) / g;
            } else if (g < -opt_.pivot_tol && std::isfinite(upper_[bj])) {
                theta = (x_[bj] - upper_[bj]) / g;
            } else {
                continue;
            }
            if (std::max(theta, 0.0) > theta_min + slack) {
                continue;
            }
            if (bland_) {
                if (leaving_pos == SIZE_MAX || bj < basis_[leaving_pos]) {
                    leaving_pos = i;
                }
            } else if (std::abs(g) > best_pivot) {
                best_pivot = std::abs(g);
                leaving_pos = i;
            }
        }
        if (leaving_pos == SIZE_MAX) {
            // Every blocking ratio sat below pivot_tol; refactorize and let
            // the caller retry from cleaner numbers.
            refactor();
            return true;
        }

        const double theta = std::max(theta_min, 0.0);
        const std::size_t leaving = basis_[leaving_pos];
        const double g_leaving = dir * w(static_cast<Eigen::Index>(leaving_pos));

        for (std::size_t i = 0; i < m_; ++i) {
            const double g = w(static_cast<Eigen::Index>(i));
            if (g != 0.0) {
                x_[basis_[i]] -= theta * dir * g;
            }
        }
        // Snap the leaving variable onto the bound that blocked it.
        if (g_leaving > 0.0) {
            status_[leaving] = VarStatus::at_lower;
            x_[leaving] = lower_[leaving];
        } else {
            status_[leaving] = VarStatus::at_upper;
            x_[leaving] = upper_[leaving];
        }
        x_[entering] += dir * theta;
        status_[entering] = VarStatus::basic;
        basis_[leaving_pos] = entering;
        etas_.emplace_back(leaving_pos, w);
        return true;
    }

    SimplexOptions opt_;
    std::size_t m_;
    std::size_t n_orig_;
    std::size_t max_iterations_ = 0;

    std::vector<double> cost_;
    std::vector<double> phase1_cost_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<std::vector<std::pair<std::size_t, double>>> columns_;
    Eigen::VectorXd rhs_;

    std::vector<VarStatus> status_;
    std::vector<double> x_;
    std::vector<std::size_t> basis_;
    std::size_t artificial_count_ = 0;

    // mutable: SparseLU::transpose() is not const-qualified in Eigen even
    // though the BTRAN solve leaves the factorization untouched.
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    std::vector<std::pair<std::size_t, Eigen::VectorXd>> etas_;

    std::size_t iterations_ = 0;
    std::size_t stalled_ = 0;
    bool bland_ = false;
    bool unbounded_ = false;
};

}  // namespace detail

/// Solve the LP.  Deterministic for identical inputs.
inline LpSolution solve(const LpProblem& problem, const SimplexOptions& options = {}) {
    detail::SimplexSolver solver(problem, options);
    return solver.run();
}

}  // namespace intratp::lp
