#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "oracles.hpp"
#include "pcnlab/planner.hpp"

using namespace pcnlab;
using Catch::Approx;

namespace {

PlannedPath make_path(Satoshi bottleneck, int length, int index = 0,
                      const std::string& pair = "a->b") {
    PlannedPath p;
    p.record.source = NodeId{"a"};
    p.record.dest = NodeId{"b"};
    p.record.length = length;
    p.record.bottleneck = bottleneck;
    p.pair_id = pair;
    p.path_index = index;
    return p;
}

PlannerInput make_input(std::vector<PlannedPath> paths, Satoshi budget,
                        int l_max = 20, double threshold = 0.0) {
    PlannerInput in;
    in.attacker = NodeId{"a"};
    in.budget = budget;
    in.paths = std::move(paths);
    in.l_max = l_max;
    in.threshold = threshold;
    return in;
}

Satoshi total_planned(const AttackPlan& plan) {
    Satoshi t = 0;
    for (const auto& a : plan.allocations) t += a.planned_alpha;
    return t;
}

double total_deviation(const AttackPlan& plan) {
    double d = 0.0;
    for (const auto& a : plan.allocations) d += a.deviation;
    return d;
}

double total_spcr(const AttackPlan& plan) {
    double s = 0.0;
    for (const auto& a : plan.allocations) s += a.achieved_spcr;
    return s;
}

}  // namespace

TEST_CASE("minpay hits the single-path closed form") {
    // Brute-force confirmation on a 10^3-satoshi grid: the smallest
    // alpha with SPCR >= 0.2 on (minb 4e6, l 5, L 20) is 3.2e6.
    const Satoshi minb = 4'000'000;
    Satoshi expected = -1;
    for (Satoshi alpha = 0; alpha <= minb; alpha += 1000) {
        const double s = (5.0 / 20.0) * static_cast<double>(alpha) /
                         static_cast<double>(minb);
        if (s >= 0.2) {
            expected = alpha;
            break;
        }
    }
    REQUIRE(expected == 3'200'000);

    auto plan = plan_minpay(
        make_input({make_path(minb, 5)}, 10'000'000, 20, 0.2));
    REQUIRE(plan.allocations.size() == 1);
    CHECK(plan.allocations[0].planned_alpha == expected);
    CHECK(plan.allocations[0].deviation == Approx(0.0).margin(1e-9));
    CHECK(plan.spent == expected);
    CHECK(plan.residual_budget == 10'000'000 - expected);
}

TEST_CASE("minpay caps at the bottleneck when the threshold is unreachable") {
    // l/l_max = 3/20 bounds SPCR at 0.15; grid search agrees the best
    // shortfall against 0.3 is at the cap.
    const Satoshi minb = 1000;
    const auto oracle =
        oracles::minpay_grid_oracle({{minb, 3}}, 5000, 20, 0.3);
    CHECK(oracle.shortfall == Approx(0.15));
    CHECK(oracle.payment == minb);

    auto plan = plan_minpay(make_input({make_path(minb, 3)}, 5000, 20, 0.3));
    CHECK(plan.allocations[0].planned_alpha == minb);
    CHECK(plan.allocations[0].deviation == Approx(0.15));
}

TEST_CASE("minpay with threshold zero spends nothing") {
    auto plan = plan_minpay(
        make_input({make_path(500, 4), make_path(900, 6)}, 10'000, 20, 0.0));
    CHECK(plan.spent == 0);
    CHECK(total_planned(plan) == 0);
    CHECK(plan.residual_budget == 10'000);
}

TEST_CASE("minpay matches the lexicographic grid oracle") {
    // Thresholds are drawn so that every per-path breakpoint is an
    // integer; the continuous optimum then lies on the unit grid the
    // oracle searches.
    Rng rng(2024);
    const int l_max = 20;
    const std::vector<int> lengths{1, 2, 4, 5, 10, 20};
    for (int trial = 0; trial < 60; ++trial) {
        const int j_count = 1 + static_cast<int>(rng.index(4));
        std::vector<oracles::PathSpec> specs;
        std::vector<PlannedPath> paths;
        int lcm = 1;
        for (int j = 0; j < j_count; ++j) {
            const int l = lengths[rng.index(lengths.size())];
            const Satoshi minb = rng.uniform_int(1, 400);
            specs.push_back({minb, l});
            paths.push_back(make_path(minb, l, j));
            lcm = std::lcm(lcm, l);
        }
        const int q_max = l_max / lcm;
        const double threshold =
            static_cast<double>(rng.uniform_int(1, q_max) * lcm) /
            static_cast<double>(l_max);
        const Satoshi budget = rng.uniform_int(1, 800);

        const auto oracle =
            oracles::minpay_grid_oracle(specs, budget, l_max, threshold);
        const auto plan =
            plan_minpay(make_input(paths, budget, l_max, threshold));

        INFO("trial " << trial << " threshold " << threshold << " budget "
                      << budget);
        // The LP objectives (pre-rounding) match the integer oracle: the
        // instance construction puts every breakpoint on the unit grid.
        CHECK(plan.lp_shortfall == Approx(oracle.shortfall).margin(1e-6));
        CHECK(std::fabs(plan.lp_payment -
                        static_cast<double>(oracle.payment)) <= 1.0 + 1e-6);
        // Flooring to satoshi can only add at most one unit of shortfall
        // per path (at that path's density) and never breaks the budget.
        double density_sum = 0.0;
        for (const auto& spec : specs)
            density_sum += static_cast<double>(spec.length) /
                           (20.0 * static_cast<double>(spec.bottleneck));
        CHECK(total_deviation(plan) <=
              oracle.shortfall + density_sum + 1e-6);
        CHECK(total_planned(plan) <= budget);
        CHECK(total_planned(plan) <=
              static_cast<Satoshi>(std::ceil(plan.lp_payment + 1e-6)));
    }
}

TEST_CASE("spcr-max matches the spec'd two-path example") {
    auto plan = plan_spcr_max(make_input(
        {make_path(2'000'000, 8, 0), make_path(4'000'000, 4, 1)}, 3'000'000));
    REQUIRE(plan.allocations.size() == 2);
    // Densities: 8/(20*2e6) = 2e-7 > 4/(20*4e6) = 5e-8.
    CHECK(plan.allocations[0].planned_alpha == 2'000'000);
    CHECK(plan.allocations[1].planned_alpha == 1'000'000);
    CHECK(total_spcr(plan) == Approx(0.45));

    SECTION("the same instance through the LP gives the same objective") {
        LpProblem lp;
        lp.add_variable(0.0, 2e6);
        lp.add_variable(0.0, 4e6);
        lp.set_objective(LpSense::Maximize,
                         {8.0 / (20.0 * 2e6), 4.0 / (20.0 * 4e6)});
        lp.add_constraint({1.0, 1.0}, LpRelation::LE, 3e6);
        const LpSolution sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.objective == Approx(0.45).epsilon(1e-9));
        CHECK(sol.x[0] == Approx(2e6));
        CHECK(sol.x[1] == Approx(1e6));
    }
}

TEST_CASE("spcr-max edge cases") {
    SECTION("zero budget allocates nothing") {
        auto plan = plan_spcr_max(
            make_input({make_path(100, 5), make_path(70, 9)}, 0));
        CHECK(total_planned(plan) == 0);
    }
    SECTION("ample budget saturates every path") {
        auto plan = plan_spcr_max(
            make_input({make_path(100, 5), make_path(70, 9)}, 1'000));
        for (const auto& a : plan.allocations) {
            CHECK(a.planned_alpha == a.bottleneck);
            CHECK(a.achieved_spcr ==
                  Approx(a.path.length / 20.0));  // pcr = 1
        }
    }
    SECTION("density ties prefer the longer path") {
        // Same density 1/(20*100): lengths 10 and 5 with caps 50 & 25.
        auto plan = plan_spcr_max(
            make_input({make_path(25, 5, 0), make_path(50, 10, 1)}, 30));
        CHECK(plan.allocations[0].path.length == 10);
        CHECK(plan.allocations[0].planned_alpha == 30);
    }
}

TEST_CASE("spcr-max greedy equals the LP and the grid oracle") {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const int j_count = 1 + static_cast<int>(rng.index(4));
        std::vector<oracles::PathSpec> specs;
        std::vector<PlannedPath> paths;
        LpProblem lp;
        std::vector<double> densities;
        for (int j = 0; j < j_count; ++j) {
            const int l = 1 + static_cast<int>(rng.index(20));
            const Satoshi minb = rng.uniform_int(1, 500);
            specs.push_back({minb, l});
            paths.push_back(make_path(minb, l, j));
            lp.add_variable(0.0, static_cast<double>(minb));
            densities.push_back(static_cast<double>(l) /
                                (20.0 * static_cast<double>(minb)));
        }
        const Satoshi budget = rng.uniform_int(1, 1'000);
        lp.set_objective(LpSense::Maximize, densities);
        lp.add_constraint(std::vector<double>(densities.size(), 1.0),
                          LpRelation::LE, static_cast<double>(budget));

        const auto plan = plan_spcr_max(make_input(paths, budget, 20));
        const double greedy_obj = total_spcr(plan);
        const LpSolution sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        const double grid_obj =
            oracles::spcr_max_grid_oracle(specs, budget, 20);

        INFO("trial " << trial);
        CHECK(greedy_obj ==
              Approx(sol.objective).epsilon(1e-9).margin(1e-12));
        // Both integral: the grid oracle is exact here.
        CHECK(greedy_obj == Approx(grid_obj).margin(1e-9));
        CHECK(plan.spent <= budget);
    }
}

TEST_CASE("random baseline respects caps and reproduces by seed") {
    std::vector<PlannedPath> paths{make_path(500, 4, 0), make_path(300, 7, 1),
                                   make_path(900, 2, 2)};
    Rng rng_a(42), rng_b(42);
    const auto a = plan_random(make_input(paths, 1'000), rng_a);
    const auto b = plan_random(make_input(paths, 1'000), rng_b);
    REQUIRE(a.allocations.size() == b.allocations.size());
    for (std::size_t i = 0; i < a.allocations.size(); ++i)
        CHECK(a.allocations[i].planned_alpha == b.allocations[i].planned_alpha);

    SECTION("budget and caps hold over many seeds") {
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            Rng rng(seed);
            const auto plan = plan_random(make_input(paths, 1'000), rng);
            CHECK(plan.spent <= 1'000);
            for (const auto& alloc : plan.allocations)
                CHECK(alloc.planned_alpha <= alloc.bottleneck);
        }
    }
    SECTION("zero budget allocates nothing") {
        Rng rng(1);
        CHECK(plan_random(make_input(paths, 0), rng).spent == 0);
    }
}

TEST_CASE("general baseline fills the largest bottlenecks first") {
    std::vector<PlannedPath> paths{make_path(5'000'000, 4, 0),
                                   make_path(3'000'000, 4, 1),
                                   make_path(2'000'000, 4, 2)};
    const auto plan = plan_general(make_input(paths, 6'000'000));
    REQUIRE(plan.allocations.size() == 3);
    CHECK(plan.allocations[0].planned_alpha == 5'000'000);
    CHECK(plan.allocations[1].planned_alpha == 1'000'000);
    CHECK(plan.allocations[2].planned_alpha == 0);

    SECTION("hand simulation oracle over random instances") {
        Rng rng(31);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<PlannedPath> ps;
            const int j_count = 1 + static_cast<int>(rng.index(5));
            for (int j = 0; j < j_count; ++j)
                ps.push_back(make_path(rng.uniform_int(1, 300),
                                       1 + static_cast<int>(rng.index(20)),
                                       j));
            const Satoshi budget = rng.uniform_int(0, 800);
            const auto p = plan_general(make_input(ps, budget));

            // Independent re-execution of the stated rule.
            std::vector<Satoshi> caps;
            for (const auto& path : ps) caps.push_back(path.record.bottleneck);
            std::sort(caps.begin(), caps.end(), std::greater<>());
            Satoshi rem = budget;
            Satoshi expected = 0;
            for (Satoshi cap : caps) {
                const Satoshi take = std::min(cap, rem);
                expected += take;
                rem -= take;
            }
            CHECK(p.spent == expected);
        }
    }
    SECTION("all caps hit with ample budget") {
        const auto p = plan_general(make_input(paths, 100'000'000));
        CHECK(p.spent == 10'000'000);
    }
    SECTION("single path takes min(bottleneck, budget)") {
        const auto p =
            plan_general(make_input({make_path(700, 3)}, 400));
        CHECK(p.spent == 400);
    }
}

namespace {

// Five-node fixture where both attackers' only paths share the m->r
// channel.
struct SharedFixture {
    PcnGraph g;
    std::vector<AttackerPair> pairs;

    SharedFixture() {
        for (const char* n : {"m", "r", "s1", "s2"}) g.add_node(NodeId{n});
        g.open_channel(NodeId{"s1"}, NodeId{"m"}, 100, 0);
        g.open_channel(NodeId{"s2"}, NodeId{"m"}, 100, 0);
        g.open_channel(NodeId{"m"}, NodeId{"r"}, 50, 0);
        pairs = {{NodeId{"s1"}, NodeId{"r"}}, {NodeId{"s2"}, NodeId{"r"}}};
    }
};

}  // namespace

TEST_CASE("sequential round updates shared channels between attackers") {
    SharedFixture fx;
    RoundOptions opt;
    opt.l_max = 5;
    const auto plans = run_attack_round(fx.g, fx.pairs, Strategy::General,
                                        {40}, std::nullopt, opt);
    REQUIRE(plans.size() == 2);
    REQUIRE(plans[0].allocations.size() == 1);
    CHECK(plans[0].allocations[0].bottleneck == 50);
    CHECK(plans[0].allocations[0].applied_alpha == 40);
    // Second attacker plans against the updated graph.
    REQUIRE(plans[1].allocations.size() == 1);
    CHECK(plans[1].allocations[0].bottleneck == 10);
    CHECK(plans[1].allocations[0].applied_alpha == 10);
    CHECK(fx.g.directed_balance(NodeId{"m"}, NodeId{"r"}) == 0);
    CHECK(fx.g.all_channels_conserved());
}

TEST_CASE("disjoint paths keep planned allocations") {
    PcnGraph g;
    for (const char* n : {"s", "r", "x", "y"}) g.add_node(NodeId{n});
    g.open_channel(NodeId{"s"}, NodeId{"x"}, 80, 0);
    g.open_channel(NodeId{"x"}, NodeId{"r"}, 60, 0);
    g.open_channel(NodeId{"s"}, NodeId{"y"}, 90, 0);
    g.open_channel(NodeId{"y"}, NodeId{"r"}, 70, 0);
    const std::vector<AttackerPair> pairs{{NodeId{"s"}, NodeId{"r"}}};
    RoundOptions opt;
    opt.l_max = 4;
    const auto plans = run_attack_round(g, pairs, Strategy::General, {1'000},
                                        std::nullopt, opt);
    REQUIRE(plans.size() == 1);
    for (const auto& a : plans[0].allocations) {
        CHECK(a.applied_alpha == a.planned_alpha);
        CHECK(a.applied_alpha == a.bottleneck);  // ample budget
    }
}

TEST_CASE("intra-plan shared channels clamp at apply time") {
    PcnGraph g;
    for (const char* n : {"s", "a", "b", "r"}) g.add_node(NodeId{n});
    g.open_channel(NodeId{"s"}, NodeId{"a"}, 100, 0);
    g.open_channel(NodeId{"s"}, NodeId{"b"}, 100, 0);
    g.open_channel(NodeId{"b"}, NodeId{"a"}, 100, 0);
    g.open_channel(NodeId{"a"}, NodeId{"r"}, 60, 0);
    const std::vector<AttackerPair> pairs{{NodeId{"s"}, NodeId{"r"}}};
    RoundOptions opt;
    opt.l_max = 4;
    const auto plans = run_attack_round(g, pairs, Strategy::General, {500},
                                        std::nullopt, opt);
    REQUIRE(plans.size() == 1);
    // Paths s->a->r and s->b->a->r both bottleneck on a->r (60).
    REQUIRE(plans[0].allocations.size() == 2);
    CHECK(plans[0].allocations[0].planned_alpha == 60);
    CHECK(plans[0].allocations[0].applied_alpha == 60);
    CHECK(plans[0].allocations[1].planned_alpha == 60);
    CHECK(plans[0].allocations[1].applied_alpha == 0);
    CHECK(plans[0].allocations[1].unusable);
    CHECK(plans[0].spent == 60);
    CHECK(g.all_channels_conserved());
}

TEST_CASE("clamping never drives a balance negative") {
    Rng rng(555);
    for (int trial = 0; trial < 30; ++trial) {
        PcnGraph g;
        const int n = 6;
        std::vector<NodeId> ids;
        for (int i = 0; i < n; ++i) {
            ids.emplace_back("v" + std::to_string(i));
            g.add_node(ids.back());
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform01() < 0.6)
                    g.open_channel(ids[static_cast<std::size_t>(i)],
                                   ids[static_cast<std::size_t>(j)],
                                   rng.uniform_int(0, 200),
                                   rng.uniform_int(1, 200));
        const std::vector<AttackerPair> pairs{{ids[0], ids[1]},
                                              {ids[2], ids[3]}};
        RoundOptions opt;
        opt.l_max = 5;
        opt.max_paths = 10;
        opt.rng_seed = static_cast<std::uint64_t>(trial);
        const Strategy strat = trial % 2 == 0 ? Strategy::SpcrMax
                                              : Strategy::Random;
        const auto plans =
            run_attack_round(g, pairs, strat, {300}, std::nullopt, opt);
        for (const auto& plan : plans) {
            CHECK(plan.spent <= plan.budget);
            for (const auto& a : plan.allocations)
                CHECK(a.applied_alpha <= a.planned_alpha);
        }
        for (const auto& [key, ch] : g.channels()) {
            CHECK(ch.balance_xy >= 0);
            CHECK(ch.balance_yx >= 0);
            CHECK(ch.conserved());
        }
    }
}

TEST_CASE("per-pair budget scope plans each pair separately") {
    SharedFixture fx;
    RoundOptions opt;
    opt.l_max = 5;
    opt.budget_scope = BudgetScope::PerPair;
    const auto plans = run_attack_round(fx.g, fx.pairs, Strategy::General,
                                        {30, 15}, std::nullopt, opt);
    REQUIRE(plans.size() == 2);
    CHECK(plans[0].budget == 30);
    CHECK(plans[0].spent == 30);
    CHECK(plans[1].budget == 15);
    CHECK(plans[1].spent == 15);
}

TEST_CASE("minpay requires a threshold in a round") {
    SharedFixture fx;
    CHECK_THROWS_AS(run_attack_round(fx.g, fx.pairs, Strategy::MinPay, {10},
                                     std::nullopt, {}),
                    InvalidConfig);
}

TEST_CASE("plans export to csv") {
    SharedFixture fx;
    RoundOptions opt;
    opt.l_max = 5;
    const auto plans = run_attack_round(fx.g, fx.pairs, Strategy::General,
                                        {40}, std::nullopt, opt);
    std::ostringstream os;
    plans_to_csv(plans, os);
    const std::string csv = os.str();
    CHECK(csv.find("attacker_id,pair_id,path_index,planned_alpha,"
                   "applied_alpha,bottleneck,length,spcr,deviation\n") == 0);
    CHECK(csv.find("s1,s1->r,0,40,40,50,2,") != std::string::npos);
}
