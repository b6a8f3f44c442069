#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pcnlab/graph.hpp"
#include "pcnlab/lp.hpp"
#include "pcnlab/metrics.hpp"
#include "pcnlab/pathfind.hpp"
#include "pcnlab/rng.hpp"

namespace pcnlab {

enum class Strategy { MinPay, SpcrMax, Random, General };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::MinPay: return "minpay";
        case Strategy::SpcrMax: return "spcr-max";
        case Strategy::Random: return "random";
        case Strategy::General: return "general";
    }
    return "?";
}

inline std::optional<Strategy> strategy_from_name(const std::string& name) {
    if (name == "minpay") return Strategy::MinPay;
    if (name == "spcr-max") return Strategy::SpcrMax;
    if (name == "random") return Strategy::Random;
    if (name == "general") return Strategy::General;
    return std::nullopt;
}

struct PlannedPath {
    PathRecord record;  // bottleneck holds the probe used for planning
    std::string pair_id;
    int path_index = 0;  // within its pair group
};

struct PlannerInput {
    NodeId attacker;
    Satoshi budget = 0;
    std::vector<PlannedPath> paths;
    int l_max = 20;
    double threshold = 0.0;  // MinPay only
};

struct PathAllocation {
    PathRecord path;
    std::string pair_id;
    int path_index = 0;
    Satoshi bottleneck = 0;  // probed at planning time
    Satoshi planned_alpha = 0;
    Satoshi applied_alpha = 0;
    double achieved_spcr = 0.0;
    double deviation = 0.0;
    bool unusable = false;
};

struct AttackPlan {
    NodeId attacker;
    Satoshi budget = 0;
    // Planner output order: the order the strategy allocated in, which
    // is also the priority order used when clamping at apply time.
    std::vector<PathAllocation> allocations;
    Satoshi spent = 0;
    Satoshi residual_budget = 0;
    // MinPay diagnostics: the two LP objective values before payments
    // are floored to whole satoshi.
    double lp_shortfall = 0.0;
    double lp_payment = 0.0;

    std::vector<AllocationView> views(int l_max) const {
        std::vector<AllocationView> v;
        v.reserve(allocations.size());
        for (const PathAllocation& a : allocations) {
            AllocationView view;
            view.alpha = a.applied_alpha;
            view.per_channel_balances = {a.bottleneck > 0 ? a.bottleneck : 1};
            view.length = a.path.length;
            view.l_max = l_max;
            v.push_back(std::move(view));
        }
        return v;
    }
};

namespace detail {

// LP outputs are floored to whole satoshi; the epsilon absorbs pivot
// round-off without ever crossing a constraint boundary.
inline Satoshi floor_satoshi(double x) {
    return static_cast<Satoshi>(std::floor(x + 1e-6));
}

inline PathAllocation make_allocation(const PlannedPath& p) {
    PathAllocation a;
    a.path = p.record;
    a.pair_id = p.pair_id;
    a.path_index = p.path_index;
    a.bottleneck = p.record.bottleneck;
    return a;
}

// Recomputes the achieved SPCR and deviation from the applied payment
// against the planning-time bottleneck.
inline void finalize_allocation(PathAllocation& a, int l_max,
                                double threshold) {
    if (a.applied_alpha <= 0 || a.bottleneck <= 0) {
        a.achieved_spcr = 0.0;
    } else {
        const double p = static_cast<double>(a.applied_alpha) /
                         static_cast<double>(a.bottleneck);
        a.achieved_spcr = spcr_from_pcr(p, a.path.length, l_max);
    }
    a.deviation = spcr_deviation(a.achieved_spcr, threshold);
}

// Enforce Sum(alpha) <= budget exactly in integer arithmetic after any
// floating-point planning step.
inline void trim_to_budget(std::vector<PathAllocation>& allocations,
                           Satoshi budget) {
    Satoshi total = 0;
    for (const PathAllocation& a : allocations) total += a.planned_alpha;
    for (auto it = allocations.rbegin();
         total > budget && it != allocations.rend(); ++it) {
        const Satoshi cut = std::min(it->planned_alpha, total - budget);
        it->planned_alpha -= cut;
        total -= cut;
    }
}

}  // namespace detail

// Payment-minimization attack: reach an SPCR threshold on every path
// with the least total payment. Solved as a two-phase lexicographic LP:
// phase A minimizes the total shortfall below the threshold (the hard
// per-path constraint is infeasible whenever threshold > l/l_max or the
// budget binds), phase B minimizes total payment among the minimal-
// shortfall solutions. Allocations are floored to whole satoshi.
inline AttackPlan plan_minpay(const PlannerInput& input) {
    if (input.threshold < 0.0 || input.threshold > 1.0)
        throw InvalidConfig("minpay: threshold must be in [0,1]");
    if (input.budget < 0) throw InvalidConfig("minpay: negative budget");

    AttackPlan plan;
    plan.attacker = input.attacker;
    plan.budget = input.budget;
    for (const PlannedPath& p : input.paths)
        plan.allocations.push_back(detail::make_allocation(p));

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < input.paths.size(); ++i) {
        const PlannedPath& p = input.paths[i];
        if (p.record.bottleneck > 0 && p.record.length >= 1 &&
            p.record.length <= input.l_max)
            usable.push_back(i);
    }

    if (!usable.empty() && input.threshold > 0.0 && input.budget > 0) {
        const std::size_t j_count = usable.size();
        // Variables: f_j = alpha_j / bottleneck_j in [0,1], then the
        // shortfall slack s_j >= 0 per path.
        LpProblem phase_a;
        for (std::size_t j = 0; j < j_count; ++j) phase_a.add_variable(0.0, 1.0);
        for (std::size_t j = 0; j < j_count; ++j) phase_a.add_variable(0.0);
        const std::size_t n = 2 * j_count;
        for (std::size_t j = 0; j < j_count; ++j) {
            std::vector<double> row(n, 0.0);
            const PlannedPath& p = input.paths[usable[j]];
            row[j] = static_cast<double>(p.record.length) /
                     static_cast<double>(input.l_max);
            row[j_count + j] = 1.0;
            phase_a.add_constraint(std::move(row), LpRelation::GE,
                                   input.threshold);
        }
        std::vector<double> budget_row(n, 0.0);
        for (std::size_t j = 0; j < j_count; ++j)
            budget_row[j] =
                static_cast<double>(input.paths[usable[j]].record.bottleneck);
        phase_a.add_constraint(budget_row, LpRelation::LE,
                               static_cast<double>(input.budget));
        std::vector<double> obj_a(n, 0.0);
        for (std::size_t j = 0; j < j_count; ++j) obj_a[j_count + j] = 1.0;
        phase_a.set_objective(LpSense::Minimize, obj_a);

        const LpSolution sol_a = solve_lp(phase_a);
        if (sol_a.status != LpStatus::Optimal)
            throw Error("minpay: shortfall LP unexpectedly infeasible");
        const double min_shortfall = sol_a.objective;

        LpProblem phase_b = phase_a;
        std::vector<double> shortfall_row(n, 0.0);
        for (std::size_t j = 0; j < j_count; ++j) shortfall_row[j_count + j] = 1.0;
        phase_b.add_constraint(shortfall_row, LpRelation::LE,
                               min_shortfall * (1.0 + 1e-9));
        phase_b.set_objective(LpSense::Minimize, budget_row);
        const LpSolution sol_b = solve_lp(phase_b);
        if (sol_b.status != LpStatus::Optimal)
            throw Error("minpay: payment LP unexpectedly infeasible");
        plan.lp_shortfall = min_shortfall;
        plan.lp_payment = sol_b.objective;

        for (std::size_t j = 0; j < j_count; ++j) {
            PathAllocation& a = plan.allocations[usable[j]];
            const Satoshi alpha = std::clamp<Satoshi>(
                detail::floor_satoshi(sol_b.x[j] *
                                      static_cast<double>(a.bottleneck)),
                0, a.bottleneck);
            a.planned_alpha = alpha;
        }
        detail::trim_to_budget(plan.allocations, input.budget);
    }

    for (PathAllocation& a : plan.allocations) {
        a.applied_alpha = a.planned_alpha;
        detail::finalize_allocation(a, input.l_max, input.threshold);
        plan.spent += a.planned_alpha;
    }
    plan.residual_budget = input.budget - plan.spent;
    return plan;
}

// Congestion-maximization attack: maximize total SPCR under the budget.
// The LP is a fractional knapsack (one cap per path, one budget row), so
// the exact greedy solves it: fill paths by SPCR-per-satoshi density
// l_j / (l_max * bottleneck_j), longest path first on ties, then lower
// path index; the last path takes the remainder. Integer arithmetic
// throughout.
inline AttackPlan plan_spcr_max(const PlannerInput& input) {
    if (input.budget < 0) throw InvalidConfig("spcr-max: negative budget");
    AttackPlan plan;
    plan.attacker = input.attacker;
    plan.budget = input.budget;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < input.paths.size(); ++i) order.push_back(i);
    // Density d_i > d_j  <=>  l_i * minb_j > l_j * minb_i (l_max cancels;
    // paths with bottleneck 0 sink to the end and get nothing).
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const auto& a = input.paths[i].record;
        const auto& b = input.paths[j].record;
        if (a.bottleneck <= 0 || b.bottleneck <= 0)
            return a.bottleneck > b.bottleneck;
        const Satoshi lhs = static_cast<Satoshi>(a.length) * b.bottleneck;
        const Satoshi rhs = static_cast<Satoshi>(b.length) * a.bottleneck;
        if (lhs != rhs) return lhs > rhs;
        if (a.length != b.length) return a.length > b.length;
        return i < j;
    });

    Satoshi remaining = input.budget;
    for (std::size_t idx : order) {
        PathAllocation a = detail::make_allocation(input.paths[idx]);
        if (a.bottleneck > 0 && a.path.length >= 1 &&
            a.path.length <= input.l_max)
            a.planned_alpha = std::min(a.bottleneck, remaining);
        remaining -= a.planned_alpha;
        a.applied_alpha = a.planned_alpha;
        detail::finalize_allocation(a, input.l_max, 0.0);
        plan.spent += a.planned_alpha;
        plan.allocations.push_back(std::move(a));
    }
    plan.residual_budget = input.budget - plan.spent;
    return plan;
}

// Random baseline: an effective budget is drawn uniformly from (0, B],
// then paths are visited in random order and each receives a uniform
// payment up to its cap and the remaining budget.
inline AttackPlan plan_random(const PlannerInput& input, Rng& rng) {
    if (input.budget < 0) throw InvalidConfig("random: negative budget");
    AttackPlan plan;
    plan.attacker = input.attacker;
    plan.budget = input.budget;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < input.paths.size(); ++i) order.push_back(i);
    rng.shuffle(order);

    Satoshi remaining =
        input.budget > 0 ? rng.uniform_int(1, input.budget) : 0;
    for (std::size_t idx : order) {
        PathAllocation a = detail::make_allocation(input.paths[idx]);
        if (a.bottleneck > 0 && remaining > 0 && a.path.length >= 1 &&
            a.path.length <= input.l_max) {
            a.planned_alpha =
                rng.uniform_int(0, std::min(a.bottleneck, remaining));
            remaining -= a.planned_alpha;
        }
        a.applied_alpha = a.planned_alpha;
        detail::finalize_allocation(a, input.l_max, 0.0);
        plan.spent += a.planned_alpha;
        plan.allocations.push_back(std::move(a));
    }
    plan.residual_budget = input.budget - plan.spent;
    return plan;
}

// General (greedy) baseline: paths sorted by bottleneck descending are
// filled to their caps until the budget is consumed.
inline AttackPlan plan_general(const PlannerInput& input) {
    if (input.budget < 0) throw InvalidConfig("general: negative budget");
    AttackPlan plan;
    plan.attacker = input.attacker;
    plan.budget = input.budget;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < input.paths.size(); ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const Satoshi bi = input.paths[i].record.bottleneck;
        const Satoshi bj = input.paths[j].record.bottleneck;
        if (bi != bj) return bi > bj;
        return i < j;
    });

    Satoshi remaining = input.budget;
    for (std::size_t idx : order) {
        PathAllocation a = detail::make_allocation(input.paths[idx]);
        if (a.bottleneck > 0 && a.path.length >= 1 &&
            a.path.length <= input.l_max)
            a.planned_alpha = std::min(a.bottleneck, remaining);
        remaining -= a.planned_alpha;
        a.applied_alpha = a.planned_alpha;
        detail::finalize_allocation(a, input.l_max, 0.0);
        plan.spent += a.planned_alpha;
        plan.allocations.push_back(std::move(a));
    }
    plan.residual_budget = input.budget - plan.spent;
    return plan;
}

enum class BudgetScope { PerAttacker, PerPair };

struct RoundOptions {
    int l_max = 20;
    int max_paths = 100;  // per ordered pair
    double probe_noise = 0.0;
    bool reprobe = true;  // refresh paths and probes before each attacker
    BudgetScope budget_scope = BudgetScope::PerAttacker;
    // true: each attacker targets every other Sybil node; false: only its
    // designated receiver from the pair list.
    bool all_sybil_destinations = true;
    std::uint64_t rng_seed = 0;
};

namespace detail {

inline std::vector<PlannedPath> enumerate_and_probe(
    const PcnGraph& g, const NodeId& sender,
    const std::vector<NodeId>& receivers, const RoundOptions& opt, Rng& rng) {
    std::vector<PlannedPath> paths;
    for (const NodeId& r : receivers) {
        if (r == sender) continue;
        auto found = find_all_paths(g, sender, r, opt.l_max, opt.max_paths);
        int idx = 0;
        for (PathRecord& rec : found) {
            probe(g, rec, opt.probe_noise,
                  opt.probe_noise > 0.0 ? &rng : nullptr);
            PlannedPath p;
            p.record = std::move(rec);
            p.pair_id = sender.value + "->" + r.value;
            p.path_index = idx++;
            paths.push_back(std::move(p));
        }
    }
    return paths;
}

inline AttackPlan dispatch_plan(Strategy strategy, const PlannerInput& input,
                                Rng& rng) {
    switch (strategy) {
        case Strategy::MinPay: return plan_minpay(input);
        case Strategy::SpcrMax: return plan_spcr_max(input);
        case Strategy::Random: return plan_random(input, rng);
        case Strategy::General: return plan_general(input);
    }
    throw InvalidConfig("unknown strategy");
}

// Walks the plan in planner output order, clamps each payment to the
// live residual bottleneck (paths inside one plan may share channels,
// which the per-path LP constraints cannot see), then debits the
// directed balances along the path.
inline void apply_plan(PcnGraph& g, AttackPlan& plan, int l_max,
                       double threshold) {
    plan.spent = 0;
    for (PathAllocation& a : plan.allocations) {
        if (a.planned_alpha <= 0) {
            a.applied_alpha = 0;
            detail::finalize_allocation(a, l_max, threshold);
            continue;
        }
        Satoshi residual = std::numeric_limits<Satoshi>::max();
        bool broken = false;
        for (std::size_t h = 0; h + 1 < a.path.hops.size(); ++h) {
            if (!g.has_channel(a.path.hops[h], a.path.hops[h + 1])) {
                broken = true;
                break;
            }
            residual = std::min(
                residual, g.directed_balance(a.path.hops[h], a.path.hops[h + 1]));
        }
        if (broken || residual <= 0) {
            a.applied_alpha = 0;
            a.unusable = true;
            detail::finalize_allocation(a, l_max, threshold);
            continue;
        }
        a.applied_alpha = std::min(a.planned_alpha, residual);
        for (std::size_t h = 0; h + 1 < a.path.hops.size(); ++h)
            g.reserve_balance(a.path.hops[h], a.path.hops[h + 1],
                              a.applied_alpha);
        plan.spent += a.applied_alpha;
        detail::finalize_allocation(a, l_max, threshold);
    }
    plan.residual_budget = plan.budget - plan.spent;
}

}  // namespace detail

// One full planning round over all attacker pairs (Algorithm-2 loop):
// attackers run in fixed order; each one enumerates paths to every
// receiving Sybil, probes, plans with its strategy, and applies its
// payments to the shared graph before the next attacker plans. No two
// attackers see the same network conditions.
inline std::vector<AttackPlan> run_attack_round(
    PcnGraph& g, const std::vector<AttackerPair>& pairs, Strategy strategy,
    const std::vector<Satoshi>& budgets, std::optional<double> threshold,
    const RoundOptions& opt = {}) {
    if (pairs.empty()) return {};
    if (budgets.empty()) throw InvalidConfig("round: budgets must be nonempty");
    if (strategy == Strategy::MinPay && !threshold.has_value())
        throw InvalidConfig("round: minpay needs a threshold");
    const double thr = threshold.value_or(0.0);
    Rng rng(derive_seed(opt.rng_seed, stream::kRandomPlan));

    std::vector<NodeId> senders;
    std::vector<NodeId> sybils;  // every attacker endpoint, pair order
    for (const AttackerPair& p : pairs) {
        if (std::find(senders.begin(), senders.end(), p.sender) == senders.end())
            senders.push_back(p.sender);
        for (const NodeId& n : {p.sender, p.receiver})
            if (std::find(sybils.begin(), sybils.end(), n) == sybils.end())
                sybils.push_back(n);
    }

    auto budget_for = [&](std::size_t i) {
        return budgets.size() == 1 ? budgets[0]
                                   : budgets[std::min(i, budgets.size() - 1)];
    };

    std::vector<AttackPlan> plans;

    if (opt.budget_scope == BudgetScope::PerPair) {
        // Config-switch variant: each listed pair plans in isolation
        // with its own budget.
        std::vector<std::vector<PlannedPath>> stale;
        if (!opt.reprobe) {
            for (const AttackerPair& p : pairs)
                stale.push_back(detail::enumerate_and_probe(
                    g, p.sender, {p.receiver}, opt, rng));
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            PlannerInput input;
            input.attacker = pairs[i].sender;
            input.budget = budget_for(i);
            input.l_max = opt.l_max;
            input.threshold = thr;
            input.paths = opt.reprobe
                              ? detail::enumerate_and_probe(
                                    g, pairs[i].sender, {pairs[i].receiver},
                                    opt, rng)
                              : stale[i];
            AttackPlan plan = detail::dispatch_plan(strategy, input, rng);
            detail::apply_plan(g, plan, opt.l_max, thr);
            plans.push_back(std::move(plan));
        }
        return plans;
    }

    // Each attacker sends toward every other Sybil node; destinations
    // without inbound liquidity simply contribute no paths.
    std::vector<std::vector<PlannedPath>> stale;
    if (!opt.reprobe) {
        for (const NodeId& s : senders)
            stale.push_back(
                detail::enumerate_and_probe(g, s, sybils, opt, rng));
    }
    for (std::size_t i = 0; i < senders.size(); ++i) {
        PlannerInput input;
        input.attacker = senders[i];
        input.budget = budget_for(i);
        input.l_max = opt.l_max;
        input.threshold = thr;
        input.paths = opt.reprobe ? detail::enumerate_and_probe(
                                        g, senders[i], sybils, opt, rng)
                                  : stale[i];
        AttackPlan plan = detail::dispatch_plan(strategy, input, rng);
        detail::apply_plan(g, plan, opt.l_max, thr);
        plans.push_back(std::move(plan));
    }
    return plans;
}

// AttackPlan CSV export.
inline void plans_to_csv(const std::vector<AttackPlan>& plans,
                         std::ostream& os) {
    os << "attacker_id,pair_id,path_index,planned_alpha,applied_alpha,"
          "bottleneck,length,spcr,deviation\n";
    char buf[64];
    for (const AttackPlan& plan : plans) {
        for (const PathAllocation& a : plan.allocations) {
            os << plan.attacker.value << ',' << a.pair_id << ',' << a.path_index
               << ',' << a.planned_alpha << ',' << a.applied_alpha << ','
               << a.bottleneck << ',' << a.path.length << ',';
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g", a.achieved_spcr,
                          a.deviation);
            os << buf << '\n';
        }
    }
}

}  // namespace pcnlab
