#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnlab/core.hpp"

namespace pcnlab {

// One record per unordered node pair; the two directions expose
// independent balances. Channel funds live in exactly one of four
// buckets per direction pair: spendable balance, HTLC-locked, or
// planner-reserved, and their sum is the constant capacity.
struct ChannelState {
    NodeId x;
    NodeId y;
    Satoshi balance_xy = 0;
    Satoshi balance_yx = 0;
    Satoshi capacity = 0;
    int max_accepted_htlcs = 483;
    Satoshi htlc_minimum = 546;
    int pending_htlcs_xy = 0;
    int pending_htlcs_yx = 0;
    Satoshi locked_xy = 0;
    Satoshi locked_yx = 0;
    Satoshi reserved_xy = 0;
    Satoshi reserved_yx = 0;

    friend bool operator==(const ChannelState&, const ChannelState&) = default;

    bool conserved() const {
        return capacity == balance_xy + balance_yx + locked_xy + locked_yx +
                               reserved_xy + reserved_yx &&
               balance_xy >= 0 && balance_yx >= 0;
    }
};

class PcnGraph {
public:
    using ChannelKey = std::pair<NodeId, NodeId>;  // normalized: first < second

    static ChannelKey key_of(const NodeId& a, const NodeId& b) {
        return a < b ? ChannelKey{a, b} : ChannelKey{b, a};
    }

    void add_node(const NodeId& n) { nodes_.insert(n); }

    bool has_node(const NodeId& n) const { return nodes_.count(n) != 0; }

    const std::set<NodeId>& nodes() const { return nodes_; }

    const std::map<ChannelKey, ChannelState>& channels() const {
        return channels_;
    }

    bool has_channel(const NodeId& a, const NodeId& b) const {
        return channels_.count(key_of(a, b)) != 0;
    }

    ChannelState& open_channel(const NodeId& x, const NodeId& y,
                               Satoshi fund_xy, Satoshi fund_yx) {
        if (x == y) throw DuplicateEndpoint("self-channel: " + x.value);
        if (!has_node(x)) throw UnknownNode(x.value);
        if (!has_node(y)) throw UnknownNode(y.value);
        if (fund_xy < 0 || fund_yx < 0)
            throw InvalidConfig("channel funding must be non-negative");
        if (fund_xy + fund_yx <= 0)
            throw InvalidConfig("channel funding must be positive in total");
        auto [it, inserted] = channels_.try_emplace(key_of(x, y));
        if (!inserted)
            throw DuplicateChannel(x.value + "--" + y.value);
        ChannelState& ch = it->second;
        ch.x = x;
        ch.y = y;
        ch.balance_xy = fund_xy;
        ch.balance_yx = fund_yx;
        ch.capacity = fund_xy + fund_yx;
        return ch;
    }

    const ChannelState& channel(const NodeId& a, const NodeId& b) const {
        auto it = channels_.find(key_of(a, b));
        if (it == channels_.end())
            throw NoSuchChannel(a.value + "--" + b.value);
        return it->second;
    }

    ChannelState& channel(const NodeId& a, const NodeId& b) {
        auto it = channels_.find(key_of(a, b));
        if (it == channels_.end())
            throw NoSuchChannel(a.value + "--" + b.value);
        return it->second;
    }

    const ChannelState* find_channel(const NodeId& a, const NodeId& b) const {
        auto it = channels_.find(key_of(a, b));
        return it == channels_.end() ? nullptr : &it->second;
    }

    // Spendable balance in the given direction; HTLC-locked and reserved
    // funds are excluded because they already left the balance bucket.
    Satoshi directed_balance(const NodeId& from, const NodeId& to) const {
        const ChannelState& ch = channel(from, to);
        return from == ch.x ? ch.balance_xy : ch.balance_yx;
    }

    // Moves spendable balance into the planning-reservation bucket
    // (Algorithm-2 style balance update without an HTLC). Fails
    // atomically if the balance is too small.
    void reserve_balance(const NodeId& from, const NodeId& to,
                         Satoshi amount) {
        if (amount < 0) throw InvalidConfig("reserve: negative amount");
        ChannelState& ch = channel(from, to);
        Satoshi& bal = (from == ch.x) ? ch.balance_xy : ch.balance_yx;
        Satoshi& res = (from == ch.x) ? ch.reserved_xy : ch.reserved_yx;
        if (bal < amount)
            throw InsufficientBalance(
                "reserve exceeds balance on " + from.value + "->" + to.value, 0);
        bal -= amount;
        res += amount;
    }

    // HTLC engine primitives. Keeping the arithmetic here means every
    // mutation path maintains the conservation invariant in one place.
    void htlc_lock(const NodeId& from, const NodeId& to, Satoshi amount) {
        ChannelState& ch = channel(from, to);
        Satoshi& bal = (from == ch.x) ? ch.balance_xy : ch.balance_yx;
        Satoshi& locked = (from == ch.x) ? ch.locked_xy : ch.locked_yx;
        int& pending = (from == ch.x) ? ch.pending_htlcs_xy : ch.pending_htlcs_yx;
        if (bal < amount)
            throw InsufficientBalance(from.value + "->" + to.value, 0);
        bal -= amount;
        locked += amount;
        ++pending;
    }

    void htlc_refund(const NodeId& from, const NodeId& to, Satoshi amount) {
        ChannelState& ch = channel(from, to);
        Satoshi& bal = (from == ch.x) ? ch.balance_xy : ch.balance_yx;
        Satoshi& locked = (from == ch.x) ? ch.locked_xy : ch.locked_yx;
        int& pending = (from == ch.x) ? ch.pending_htlcs_xy : ch.pending_htlcs_yx;
        bal += amount;
        locked -= amount;
        --pending;
    }

    void htlc_settle(const NodeId& from, const NodeId& to, Satoshi amount) {
        ChannelState& ch = channel(from, to);
        Satoshi& locked = (from == ch.x) ? ch.locked_xy : ch.locked_yx;
        Satoshi& bal_to = (from == ch.x) ? ch.balance_yx : ch.balance_xy;
        int& pending = (from == ch.x) ? ch.pending_htlcs_xy : ch.pending_htlcs_yx;
        locked -= amount;
        bal_to += amount;
        --pending;
    }

    int pending_htlcs(const NodeId& from, const NodeId& to) const {
        const ChannelState& ch = channel(from, to);
        return from == ch.x ? ch.pending_htlcs_xy : ch.pending_htlcs_yx;
    }

    BlockHeight block_height() const { return block_height_; }

    // Monotone clock; moving backwards is silently ignored.
    void advance_block_to(BlockHeight h) {
        if (h > block_height_) block_height_ = h;
    }

    std::uint64_t next_htlc_id() { return ++htlc_sequence_; }

    const std::set<NodeId>& sybil_set() const { return sybil_set_; }
    void mark_sybil(const NodeId& n) { sybil_set_.insert(n); }
    bool is_sybil(const NodeId& n) const { return sybil_set_.count(n) != 0; }

    bool all_channels_conserved() const {
        for (const auto& [key, ch] : channels_)
            if (!ch.conserved()) return false;
        return true;
    }

    friend bool operator==(const PcnGraph&, const PcnGraph&) = default;

    // Topology interchange document. Field names are fixed; a converter
    // from a Lightning `describegraph` snapshot targets this schema.
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json doc;
        doc["nodes"] = nlohmann::ordered_json::array();
        for (const NodeId& n : nodes_)
            doc["nodes"].push_back({{"id", n.value}});
        doc["channels"] = nlohmann::ordered_json::array();
        for (const auto& [key, ch] : channels_) {
            doc["channels"].push_back({{"x", ch.x.value},
                                       {"y", ch.y.value},
                                       {"balance_xy", ch.balance_xy},
                                       {"balance_yx", ch.balance_yx},
                                       {"max_accepted_htlcs", ch.max_accepted_htlcs},
                                       {"htlc_minimum", ch.htlc_minimum}});
        }
        return doc;
    }

    static PcnGraph from_json(const nlohmann::json& doc) {
        PcnGraph g;
        if (!doc.contains("nodes") || !doc.contains("channels"))
            throw IoError("graph document needs 'nodes' and 'channels'");
        for (const auto& n : doc.at("nodes"))
            g.add_node(NodeId{n.at("id").get<std::string>()});
        for (const auto& c : doc.at("channels")) {
            NodeId x{c.at("x").get<std::string>()};
            NodeId y{c.at("y").get<std::string>()};
            ChannelState& ch = g.open_channel(
                x, y, c.at("balance_xy").get<Satoshi>(),
                c.at("balance_yx").get<Satoshi>());
            if (c.contains("max_accepted_htlcs"))
                ch.max_accepted_htlcs = c.at("max_accepted_htlcs").get<int>();
            if (c.contains("htlc_minimum"))
                ch.htlc_minimum = c.at("htlc_minimum").get<Satoshi>();
        }
        return g;
    }

private:
    std::set<NodeId> nodes_;
    std::map<ChannelKey, ChannelState> channels_;
    BlockHeight block_height_ = 0;
    std::set<NodeId> sybil_set_;
    std::uint64_t htlc_sequence_ = 0;
};

// Snapshots are plain value copies; PcnGraph owns all its state.
using GraphSnapshot = PcnGraph;

inline GraphSnapshot snapshot(const PcnGraph& g) { return g; }
inline PcnGraph restore(const GraphSnapshot& s) { return s; }

}  // namespace pcnlab
