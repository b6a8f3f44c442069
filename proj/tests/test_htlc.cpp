#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "pcnlab/htlc.hpp"

using namespace pcnlab;

namespace {

// Linear graph with the given forward balances.
PcnGraph line(const std::vector<Satoshi>& balances, Satoshi htlc_minimum = 1) {
    PcnGraph g;
    for (std::size_t i = 0; i <= balances.size(); ++i)
        g.add_node(NodeId{"n" + std::to_string(i)});
    for (std::size_t i = 0; i < balances.size(); ++i) {
        auto& ch = g.open_channel(NodeId{"n" + std::to_string(i)},
                                  NodeId{"n" + std::to_string(i + 1)},
                                  balances[i], 0);
        ch.htlc_minimum = htlc_minimum;
    }
    return g;
}

PathRecord full_path(const PcnGraph& g, std::size_t hops) {
    auto paths = find_all_paths(g, NodeId{"n0"},
                                NodeId{"n" + std::to_string(hops)}, 20, 10);
    REQUIRE(paths.size() == 1);
    return paths[0];
}

}  // namespace

TEST_CASE("a withheld three-hop payment with per-hop fees locks 5+4+3") {
    PcnGraph g = line({5, 4, 3});
    const PathRecord path = full_path(g, 3);
    FeePolicy fees;
    fees.flat_fee_per_hop = 1;

    auto htlcs = lock_path(g, path, 5, 40, fees);
    REQUIRE(htlcs.size() == 3);
    CHECK(htlcs[0].amount == 5);
    CHECK(htlcs[1].amount == 4);
    CHECK(htlcs[2].amount == 3);
    Satoshi total = 0;
    for (const Htlc& h : htlcs) total += h.amount;
    CHECK(total == 12);
    CHECK(g.all_channels_conserved());
    // Every hop is fully congested.
    for (std::size_t i = 0; i + 1 < path.hops.size(); ++i)
        CHECK(g.directed_balance(path.hops[i], path.hops[i + 1]) == 0);
}

TEST_CASE("zero-fee lock holds length * alpha") {
    PcnGraph g = line({100, 100, 100, 100});
    const PathRecord path = full_path(g, 4);
    auto htlcs = lock_path(g, path, 30, 40);
    Satoshi total = 0;
    for (const Htlc& h : htlcs) total += h.amount;
    CHECK(total == 4 * 30);
}

TEST_CASE("lock failures are atomic and name the hop") {
    PcnGraph g = line({100, 20, 100});
    const PathRecord path = full_path(g, 3);
    const GraphSnapshot before = snapshot(g);

    SECTION("insufficient balance") {
        try {
            lock_path(g, path, 50, 40);
            FAIL("expected InsufficientBalance");
        } catch (const InsufficientBalance& e) {
            CHECK(e.hop == 1);
        }
        CHECK(g == before);
    }
    SECTION("below dust") {
        PcnGraph strict = line({100, 100}, 546);
        const GraphSnapshot strict_before = snapshot(strict);
        const PathRecord p2 = full_path(strict, 2);
        try {
            lock_path(strict, p2, 500, 40);
            FAIL("expected BelowDust");
        } catch (const BelowDust& e) {
            CHECK(e.hop == 0);
        }
        CHECK(strict == strict_before);
    }
    SECTION("fee depletion below dust on a later hop") {
        PcnGraph feeble = line({600, 600}, 546);
        const PathRecord p2 = full_path(feeble, 2);
        FeePolicy fees;
        fees.flat_fee_per_hop = 100;
        try {
            lock_path(feeble, p2, 600, 40, fees);
            FAIL("expected BelowDust");
        } catch (const BelowDust& e) {
            CHECK(e.hop == 1);  // 600 then 500 < 546
        }
    }
    SECTION("slots exhausted") {
        PcnGraph tiny = line({1000, 1000});
        tiny.channel(NodeId{"n1"}, NodeId{"n2"}).max_accepted_htlcs = 1;
        const PathRecord p2 = full_path(tiny, 2);
        lock_path(tiny, p2, 10, 40);
        try {
            lock_path(tiny, p2, 10, 40);
            FAIL("expected SlotsExhausted");
        } catch (const SlotsExhausted& e) {
            CHECK(e.hop == 1);
        }
    }
}

TEST_CASE("expiry refunds restore balances exactly") {
    PcnGraph g = line({5, 4, 3});
    const GraphSnapshot before = snapshot(g);
    const PathRecord path = full_path(g, 3);
    FeePolicy fees;
    fees.flat_fee_per_hop = 1;
    HtlcOptions opt;
    opt.cltv_delta = 0;  // all hops share the path expiry

    auto htlcs = lock_path(g, path, 5, 40, fees, opt);

    SECTION("before expiry funds stay locked") {
        withhold_and_expire(g, htlcs, 39);
        for (const Htlc& h : htlcs) CHECK(h.state == HtlcState::Pending);
        CHECK_FALSE(g == before);
    }
    SECTION("at expiry everything is refunded") {
        const auto failed = withhold_and_expire(g, htlcs, 40);
        CHECK(failed.size() == 3);
        for (const Htlc& h : htlcs) CHECK(h.state == HtlcState::Failed);
        PcnGraph expected = before;
        expected.advance_block_to(40);
        // Identical except for htlc id sequence and clock bookkeeping.
        for (const auto& [key, ch] : expected.channels())
            CHECK(g.channel(ch.x, ch.y) == ch);
        CHECK(g.block_height() == 40);
    }
    SECTION("double expiry is idempotent") {
        withhold_and_expire(g, htlcs, 40);
        const auto second = withhold_and_expire(g, htlcs, 50);
        CHECK(second.empty());
        for (const auto& [key, ch] : before.channels())
            CHECK(g.channel(ch.x, ch.y) == ch);
    }
}

TEST_CASE("staggered expiries refund hop by hop") {
    PcnGraph g = line({10, 10, 10});
    const PathRecord path = full_path(g, 3);
    HtlcOptions opt;
    opt.cltv_delta = 14;
    auto htlcs = lock_path(g, path, 10, 100, {}, opt);
    // Hop expiries: 128, 114, 100 from sender to receiver.
    CHECK(htlcs[0].expiry == 128);
    CHECK(htlcs[2].expiry == 100);

    withhold_and_expire(g, htlcs, 100);
    CHECK(htlcs[2].state == HtlcState::Failed);
    CHECK(htlcs[0].state == HtlcState::Pending);
    CHECK(g.all_channels_conserved());
    withhold_and_expire(g, htlcs, 128);
    for (const Htlc& h : htlcs) CHECK(h.state == HtlcState::Failed);
}

TEST_CASE("fulfill moves funds forward when the preimage matches") {
    PcnGraph g = line({50});
    const PathRecord path = full_path(g, 1);
    auto htlcs = lock_path(g, path, 20, 40);
    REQUIRE(htlcs.size() == 1);
    CHECK_THROWS_AS(fulfill(g, htlcs[0], "wrong-preimage"), InvalidConfig);
    fulfill(g, htlcs[0], htlcs[0].preimage);
    CHECK(htlcs[0].state == HtlcState::Fulfilled);
    CHECK(g.directed_balance(NodeId{"n1"}, NodeId{"n0"}) == 20);
    CHECK(g.directed_balance(NodeId{"n0"}, NodeId{"n1"}) == 30);
    CHECK(g.all_channels_conserved());
}

TEST_CASE("full lifecycle conserves every channel") {
    PcnGraph g = line({1000, 800, 600, 900});
    const GraphSnapshot before = snapshot(g);
    const PathRecord path = full_path(g, 4);
    FeePolicy fees;
    fees.flat_fee_per_hop = 7;
    HtlcOptions opt;
    opt.cltv_delta = 40;

    std::vector<Htlc> all;
    for (int i = 0; i < 5; ++i) {
        auto batch =
            lock_path(g, path, 50 + 10 * i, g.block_height() + 40, fees, opt);
        all.insert(all.end(), batch.begin(), batch.end());
        CHECK(g.all_channels_conserved());
    }
    withhold_and_expire(g, all, 10'000);
    for (const auto& [key, ch] : before.channels())
        CHECK(g.channel(ch.x, ch.y) == ch);
}

TEST_CASE("slot saturation fills exactly the advertised capacity") {
    // 483 slots, dust of 546 satoshi; balances sized so slots bind first.
    PcnGraph g = line({500 * 546, 500 * 546}, 546);
    const PathRecord path = full_path(g, 2);
    const auto htlcs = slot_saturation(g, path, 500, 546);
    // One HTLC per channel per payment; count per channel.
    int first_hop = 0;
    for (const Htlc& h : htlcs)
        if (h.from == NodeId{"n0"}) ++first_hop;
    CHECK(first_hop == 483);
    CHECK(g.pending_htlcs(NodeId{"n0"}, NodeId{"n1"}) == 483);
    CHECK(g.pending_htlcs(NodeId{"n1"}, NodeId{"n2"}) == 483);
    CHECK(g.all_channels_conserved());

    SECTION("count of zero creates nothing") {
        CHECK(slot_saturation(g, path, 0, 546).empty());
    }
}

TEST_CASE("slot saturation respects a tighter channel") {
    PcnGraph g = line({1'000'000, 1'000'000}, 1);
    g.channel(NodeId{"n1"}, NodeId{"n2"}).max_accepted_htlcs = 10;
    const PathRecord path = full_path(g, 2);
    const auto htlcs = slot_saturation(g, path, 50, 600);
    CHECK(g.pending_htlcs(NodeId{"n1"}, NodeId{"n2"}) == 10);
    CHECK(g.pending_htlcs(NodeId{"n0"}, NodeId{"n1"}) == 10);
    CHECK(htlcs.size() == 20);
}

TEST_CASE("htlc event log captures the lifecycle") {
    PcnGraph g = line({100});
    const PathRecord path = full_path(g, 1);
    HtlcLog log;
    auto htlcs = lock_path(g, path, 60, 40, {}, {}, &log);
    withhold_and_expire(g, htlcs, 40, &log);
    REQUIRE(log.events.size() == 2);
    CHECK(log.events[0].event == "create");
    CHECK(log.events[1].event == "fail");

    std::ostringstream os;
    log.to_csv(os);
    CHECK(os.str().find("block_height,event,channel,amount,htlc_id\n") == 0);
    CHECK(os.str().find("create,n0->n1,60") != std::string::npos);
}
