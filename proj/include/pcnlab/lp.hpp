#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pcnlab/core.hpp"

namespace pcnlab {

enum class LpSense { Minimize, Maximize };
enum class LpRelation { LE, GE, EQ };
enum class LpStatus { Optimal, Infeasible };

struct LpConstraint {
    std::vector<double> coeffs;
    LpRelation rel = LpRelation::LE;
    double rhs = 0.0;
};

struct LpProblem {
    LpSense sense = LpSense::Minimize;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;  // +inf when unbounded above
    std::vector<LpConstraint> constraints;

    int add_variable(double lo = 0.0,
                     double up = std::numeric_limits<double>::infinity()) {
        lower.push_back(lo);
        upper.push_back(up);
        objective.push_back(0.0);
        return static_cast<int>(lower.size()) - 1;
    }

    void set_objective(LpSense s, std::vector<double> coeffs) {
        sense = s;
        objective = std::move(coeffs);
    }

    void add_constraint(std::vector<double> coeffs, LpRelation rel,
                        double rhs) {
        constraints.push_back({std::move(coeffs), rel, rhs});
    }

    std::size_t num_vars() const { return lower.size(); }
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

// Checks a candidate point against every constraint and bound with a
// relative tolerance; used by tests and kept independent of the solver.
inline bool lp_feasible(const LpProblem& p, const std::vector<double>& x,
                        double rel_tol = 1e-9) {
    auto tol = [&](double scale) {
        return rel_tol * std::max(1.0, std::fabs(scale));
    };
    for (std::size_t j = 0; j < p.num_vars(); ++j) {
        if (x[j] < p.lower[j] - tol(p.lower[j])) return false;
        if (std::isfinite(p.upper[j]) && x[j] > p.upper[j] + tol(p.upper[j]))
            return false;
    }
    for (const LpConstraint& c : p.constraints) {
        double lhs = 0.0;
        double scale = std::fabs(c.rhs);
        for (std::size_t j = 0; j < c.coeffs.size(); ++j) {
            lhs += c.coeffs[j] * x[j];
            scale = std::max(scale, std::fabs(c.coeffs[j] * x[j]));
        }
        const double t = tol(scale);
        if (c.rel == LpRelation::LE && lhs > c.rhs + t) return false;
        if (c.rel == LpRelation::GE && lhs < c.rhs - t) return false;
        if (c.rel == LpRelation::EQ && std::fabs(lhs - c.rhs) > t) return false;
    }
    return true;
}

namespace detail {

// Dense two-phase primal simplex over the full tableau. Bland's rule
// (smallest eligible index for both entering and leaving variables)
// gives anti-cycling and a deterministic pivot sequence; problem sizes
// here are tiny, so the slower rule costs nothing.
class SimplexTableau {
public:
    static constexpr double kEps = 1e-9;

    // rows: equality-form constraints a x = b with b >= 0 after
    // normalization; `art` marks artificial columns.
    SimplexTableau(std::vector<std::vector<double>> rows,
                   std::vector<double> rhs, std::vector<int> basis,
                   std::size_t num_cols, std::vector<bool> artificial)
        : rows_(std::move(rows)),
          rhs_(std::move(rhs)),
          basis_(std::move(basis)),
          num_cols_(num_cols),
          artificial_(std::move(artificial)) {}

    // Minimizes c'x from the current basis. Returns false when the
    // problem is unbounded below.
    bool minimize(const std::vector<double>& cost, bool forbid_artificials) {
        build_objective_row(cost);
        const std::size_t iter_limit =
            10000 + 200 * (rows_.size() + 1) * (num_cols_ + 1);
        for (std::size_t iter = 0; iter < iter_limit; ++iter) {
            const int entering = pick_entering(forbid_artificials);
            if (entering < 0) return true;  // optimal
            const int leaving = pick_leaving(entering);
            if (leaving < 0) throw Unbounded("lp: unbounded objective");
            pivot(static_cast<std::size_t>(leaving),
                  static_cast<std::size_t>(entering));
        }
        throw Error("lp: simplex iteration limit exceeded");
    }

    double objective_value(const std::vector<double>& cost) const {
        double v = 0.0;
        for (std::size_t i = 0; i < rows_.size(); ++i)
            v += cost[static_cast<std::size_t>(basis_[i])] * rhs_[i];
        return v;
    }

    // After phase 1, basic artificials sitting at zero are pivoted out
    // so they can never re-enter the basis with a positive value.
    void expel_artificials() {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto b = static_cast<std::size_t>(basis_[i]);
            if (!artificial_[b]) continue;
            int replacement = -1;
            for (std::size_t j = 0; j < num_cols_; ++j) {
                if (artificial_[j]) continue;
                if (std::fabs(rows_[i][j]) > kEps) {
                    replacement = static_cast<int>(j);
                    break;
                }
            }
            if (replacement >= 0)
                pivot(i, static_cast<std::size_t>(replacement));
            // Otherwise the row is redundant; the artificial stays basic
            // at zero and its column is never allowed to enter again.
        }
    }

    std::vector<double> extract(std::size_t structural_count) const {
        std::vector<double> x(structural_count, 0.0);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const auto b = static_cast<std::size_t>(basis_[i]);
            if (b < structural_count) x[b] = rhs_[i];
        }
        return x;
    }

private:
    void build_objective_row(const std::vector<double>& cost) {
        obj_ = cost;
        obj_.resize(num_cols_, 0.0);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const double cb = obj_cost(cost, basis_[i]);
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < num_cols_; ++j)
                obj_[j] -= cb * rows_[i][j];
        }
    }

    static double obj_cost(const std::vector<double>& cost, int idx) {
        const auto u = static_cast<std::size_t>(idx);
        return u < cost.size() ? cost[u] : 0.0;
    }

    int pick_entering(bool forbid_artificials) const {
        for (std::size_t j = 0; j < num_cols_; ++j) {
            if (forbid_artificials && artificial_[j]) continue;
            if (obj_[j] < -kEps) return static_cast<int>(j);
        }
        return -1;
    }

    int pick_leaving(int entering) const {
        const auto e = static_cast<std::size_t>(entering);
        int best = -1;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const double a = rows_[i][e];
            if (a <= kEps) continue;
            const double ratio = rhs_[i] / a;
            if (best < 0 || ratio < best_ratio - kEps ||
                (std::fabs(ratio - best_ratio) <= kEps &&
                 basis_[i] < basis_[static_cast<std::size_t>(best)])) {
                best = static_cast<int>(i);
                best_ratio = ratio;
            }
        }
        return best;
    }

    void pivot(std::size_t row, std::size_t col) {
        const double p = rows_[row][col];
        for (std::size_t j = 0; j < num_cols_; ++j) rows_[row][j] /= p;
        rhs_[row] /= p;
        rows_[row][col] = 1.0;  // kill round-off on the pivot itself
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (i == row) continue;
            const double f = rows_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < num_cols_; ++j)
                rows_[i][j] -= f * rows_[row][j];
            rows_[i][col] = 0.0;
            rhs_[i] -= f * rhs_[row];
            if (rhs_[i] < 0.0 && rhs_[i] > -kEps) rhs_[i] = 0.0;
        }
        const double f = obj_[col];
        if (f != 0.0) {
            for (std::size_t j = 0; j < num_cols_; ++j)
                obj_[j] -= f * rows_[row][j];
            obj_[col] = 0.0;
        }
        basis_[row] = static_cast<int>(col);
    }

    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<int> basis_;
    std::size_t num_cols_;
    std::vector<bool> artificial_;
    std::vector<double> obj_;
};

}  // namespace detail

// Deterministic exact-arithmetic-free simplex. Finite variable bounds
// become explicit rows (the problems here are small and dense); each row
// is equilibrated so satoshi-scale and ratio-scale coefficients coexist.
inline LpSolution solve_lp(const LpProblem& problem) {
    const std::size_t n = problem.num_vars();
    if (problem.objective.size() != n)
        throw InvalidConfig("lp: objective size mismatch");

    // Shift x = x' + lower so every variable has lower bound 0.
    std::vector<LpConstraint> rows = problem.constraints;
    for (LpConstraint& c : rows) {
        if (c.coeffs.size() != n)
            throw InvalidConfig("lp: constraint size mismatch");
        for (std::size_t j = 0; j < n; ++j)
            c.rhs -= c.coeffs[j] * problem.lower[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(problem.upper[j])) continue;
        if (problem.upper[j] < problem.lower[j]) {
            return {LpStatus::Infeasible, {}, 0.0};
        }
        LpConstraint bound;
        bound.coeffs.assign(n, 0.0);
        bound.coeffs[j] = 1.0;
        bound.rel = LpRelation::LE;
        bound.rhs = problem.upper[j] - problem.lower[j];
        rows.push_back(std::move(bound));
    }

    // Row equilibration, then normalize signs so rhs >= 0.
    for (LpConstraint& c : rows) {
        double scale = std::fabs(c.rhs);
        for (double a : c.coeffs) scale = std::max(scale, std::fabs(a));
        if (scale > 0.0) {
            for (double& a : c.coeffs) a /= scale;
            c.rhs /= scale;
        }
        if (c.rhs < 0.0) {
            for (double& a : c.coeffs) a = -a;
            c.rhs = -c.rhs;
            c.rel = c.rel == LpRelation::LE   ? LpRelation::GE
                    : c.rel == LpRelation::GE ? LpRelation::LE
                                              : LpRelation::EQ;
        }
    }

    const std::size_t m = rows.size();
    std::size_t num_cols = n;
    for (const LpConstraint& c : rows)
        num_cols += (c.rel == LpRelation::EQ) ? 0 : 1;  // slack or surplus
    const std::size_t first_art = num_cols;
    std::size_t num_art = 0;
    for (const LpConstraint& c : rows)
        if (c.rel != LpRelation::LE) ++num_art;
    num_cols += num_art;

    std::vector<std::vector<double>> tableau(
        m, std::vector<double>(num_cols, 0.0));
    std::vector<double> rhs(m, 0.0);
    std::vector<int> basis(m, -1);
    std::vector<bool> artificial(num_cols, false);

    std::size_t slack_col = n;
    std::size_t art_col = first_art;
    for (std::size_t i = 0; i < m; ++i) {
        const LpConstraint& c = rows[i];
        for (std::size_t j = 0; j < n; ++j) tableau[i][j] = c.coeffs[j];
        rhs[i] = c.rhs;
        if (c.rel == LpRelation::LE) {
            tableau[i][slack_col] = 1.0;
            basis[i] = static_cast<int>(slack_col);
            ++slack_col;
        } else if (c.rel == LpRelation::GE) {
            tableau[i][slack_col] = -1.0;
            ++slack_col;
            tableau[i][art_col] = 1.0;
            artificial[art_col] = true;
            basis[i] = static_cast<int>(art_col);
            ++art_col;
        } else {
            tableau[i][art_col] = 1.0;
            artificial[art_col] = true;
            basis[i] = static_cast<int>(art_col);
            ++art_col;
        }
    }

    detail::SimplexTableau simplex(std::move(tableau), std::move(rhs),
                                   std::move(basis), num_cols, artificial);

    // Phase 1: drive artificial variables to zero.
    if (num_art > 0) {
        std::vector<double> phase1_cost(num_cols, 0.0);
        for (std::size_t j = first_art; j < num_cols; ++j)
            phase1_cost[j] = 1.0;
        simplex.minimize(phase1_cost, /*forbid_artificials=*/false);
        if (simplex.objective_value(phase1_cost) > 1e-7)
            return {LpStatus::Infeasible, {}, 0.0};
        simplex.expel_artificials();
    }

    // Phase 2: real objective (normalized; true value recomputed below).
    std::vector<double> cost(num_cols, 0.0);
    double cscale = 0.0;
    for (double c : problem.objective) cscale = std::max(cscale, std::fabs(c));
    if (cscale == 0.0) cscale = 1.0;
    const double sign = problem.sense == LpSense::Minimize ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j)
        cost[j] = sign * problem.objective[j] / cscale;
    simplex.minimize(cost, /*forbid_artificials=*/true);

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x = simplex.extract(n);
    for (std::size_t j = 0; j < n; ++j) {
        sol.x[j] += problem.lower[j];
        // Snap round-off onto the box.
        if (sol.x[j] < problem.lower[j]) sol.x[j] = problem.lower[j];
        if (std::isfinite(problem.upper[j]) && sol.x[j] > problem.upper[j])
            sol.x[j] = problem.upper[j];
    }
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        sol.objective += problem.objective[j] * sol.x[j];
    return sol;
}

}  // namespace pcnlab
