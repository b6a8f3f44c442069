#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "pcnlab/graph.hpp"
#include "pcnlab/pathfind.hpp"
#include "pcnlab/rng.hpp"

namespace pcnlab {

enum class GraphModel { PreferentialAttachment, SmallWorld, ErdosRenyi };
enum class CapacityDistribution { Exponential, Uniform };
enum class BalanceSplit { UniformRandom, Even };

struct TopologyConfig {
    int honest_node_count = 200;
    GraphModel graph_model = GraphModel::PreferentialAttachment;
    Satoshi mean_capacity = 4'000'000;
    CapacityDistribution capacity_distribution = CapacityDistribution::Exponential;
    BalanceSplit balance_split = BalanceSplit::UniformRandom;
    std::uint64_t rng_seed = 1;
};

enum class Attachment { Random, HighestDegree, HighestCapacity };

struct SybilConfig {
    int pair_count = 6;  // 2 * pair_count Sybil nodes
    Attachment attachment = Attachment::Random;
    int channels_per_sybil = 3;
    Satoshi sybil_funding = 200'000'000;
};

namespace detail {

inline std::string padded_name(const char* prefix, int i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix,
                  std::clamp(width, 1, 10), i);
    return std::string(buf);
}

inline int name_width(int count) {
    int width = 1;
    for (int c = count - 1; c >= 10; c /= 10) ++width;
    return width;
}

inline Satoshi sample_capacity(const TopologyConfig& cfg, Rng& rng) {
    Satoshi c = 0;
    switch (cfg.capacity_distribution) {
        case CapacityDistribution::Exponential:
            c = static_cast<Satoshi>(std::llround(
                rng.exponential(static_cast<double>(cfg.mean_capacity))));
            break;
        case CapacityDistribution::Uniform: {
            const Satoshi lo = cfg.mean_capacity / 2;
            const Satoshi hi = cfg.mean_capacity + cfg.mean_capacity / 2;
            c = rng.uniform_int(lo, hi);
            break;
        }
    }
    return std::max<Satoshi>(c, 2);
}

inline std::pair<Satoshi, Satoshi> split_balance(Satoshi capacity,
                                                 BalanceSplit split,
                                                 Rng& rng) {
    if (split == BalanceSplit::Even) {
        const Satoshi half = capacity / 2;
        return {half, capacity - half};
    }
    const Satoshi b_xy = static_cast<Satoshi>(
        std::llround(static_cast<double>(capacity) * rng.uniform01()));
    return {b_xy, capacity - b_xy};
}

using EdgeList = std::vector<std::pair<int, int>>;

inline EdgeList preferential_attachment_edges(int n, Rng& rng) {
    // Barabasi-Albert with m = 2: endpoint multiset sampling makes the
    // pick degree-proportional.
    EdgeList edges;
    std::vector<int> endpoints;
    auto link = [&](int a, int b) {
        edges.emplace_back(a, b);
        endpoints.push_back(a);
        endpoints.push_back(b);
    };
    if (n >= 2) link(0, 1);
    for (int v = 2; v < n; ++v) {
        const int m = std::min(2, v);
        std::vector<int> chosen;
        while (static_cast<int>(chosen.size()) < m) {
            const int t = endpoints[rng.index(endpoints.size())];
            if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
                chosen.push_back(t);
        }
        for (int t : chosen) link(v, t);
    }
    return edges;
}

// Watts-Strogatz rewiring probability. Tuned so ~200-node graphs land
// near the attacker path-length targets used by the experiments.
#ifndef PCNLAB_SMALL_WORLD_REWIRE
#define PCNLAB_SMALL_WORLD_REWIRE 0.05
#endif
inline constexpr double kSmallWorldRewire = PCNLAB_SMALL_WORLD_REWIRE;

inline EdgeList small_world_edges(int n, Rng& rng) {
    // Watts-Strogatz ring, 2 neighbors per side.
    const double kRewire = kSmallWorldRewire;
    const int k = n > 4 ? 2 : 1;
    EdgeList edges;
    auto exists = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) !=
               edges.end();
    };
    for (int j = 1; j <= k; ++j) {
        for (int i = 0; i < n; ++i) {
            int a = i;
            int b = (i + j) % n;
            if (a == b) continue;
            if (rng.uniform01() < kRewire) {
                // Rewire the far endpoint to a uniform non-neighbor.
                for (int attempt = 0; attempt < 32; ++attempt) {
                    const int c = static_cast<int>(rng.index(
                        static_cast<std::size_t>(n)));
                    if (c != a && !exists(a, c)) {
                        b = c;
                        break;
                    }
                }
            }
            if (a > b) std::swap(a, b);
            if (a != b && !exists(a, b)) edges.emplace_back(a, b);
        }
    }
    return edges;
}

inline EdgeList erdos_renyi_edges(int n, Rng& rng) {
    const int target = 2 * n;
    EdgeList edges;
    auto exists = [&](int a, int b) {
        return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) !=
               edges.end();
    };
    int guard = 0;
    while (static_cast<int>(edges.size()) < target && guard < 100 * target) {
        ++guard;
        int a = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        int b = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!exists(a, b)) edges.emplace_back(a, b);
    }
    return edges;
}

inline bool connected(int n, const EdgeList& edges) {
    if (n <= 1) return true;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u : adj[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                ++count;
                stack.push_back(u);
            }
        }
    }
    return count == n;
}

}  // namespace detail

// Deterministic function of the config: same seed, same graph, same
// exported JSON bytes. Regenerates internally until connected.
inline PcnGraph generate_topology(const TopologyConfig& cfg) {
    if (cfg.honest_node_count < 2)
        throw InvalidConfig("topology: need at least 2 honest nodes");
    if (cfg.mean_capacity <= 0)
        throw InvalidConfig("topology: mean_capacity must be positive");

    const int n = cfg.honest_node_count;
    detail::EdgeList edges;
    std::uint64_t attempt_seed = cfg.rng_seed;
    bool ok = false;
    for (int attempt = 0; attempt < 256 && !ok; ++attempt) {
        attempt_seed = derive_seed(cfg.rng_seed, stream::kRegen,
                                   static_cast<std::uint64_t>(attempt));
        Rng rng(attempt_seed);
        switch (cfg.graph_model) {
            case GraphModel::PreferentialAttachment:
                edges = detail::preferential_attachment_edges(n, rng);
                break;
            case GraphModel::SmallWorld:
                edges = detail::small_world_edges(n, rng);
                break;
            case GraphModel::ErdosRenyi:
                edges = detail::erdos_renyi_edges(n, rng);
                break;
        }
        ok = detail::connected(n, edges);
    }
    if (!ok) throw InvalidConfig("topology: failed to generate a connected graph");

    PcnGraph g;
    const int width = detail::name_width(n);
    std::vector<NodeId> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ids.emplace_back(detail::padded_name("n", i, width));
        g.add_node(ids.back());
    }
    Rng cap_rng(derive_seed(attempt_seed, stream::kTopology));
    for (auto [a, b] : edges) {
        const Satoshi capacity = detail::sample_capacity(cfg, cap_rng);
        const auto [b_xy, b_yx] =
            detail::split_balance(capacity, cfg.balance_split, cap_rng);
        g.open_channel(ids[static_cast<std::size_t>(a)],
                       ids[static_cast<std::size_t>(b)], b_xy, b_yx);
    }
    return g;
}

// Adds 2 * pair_count Sybil nodes and opens channels to targets chosen
// by the attachment strategy. Each Sybil channel is funded half per
// direction: the Sybil side gives outbound liquidity for sending, the
// target side (pushed at open) gives inbound liquidity so payments can
// terminate at any Sybil. Without the pushed half no attack payment
// could ever reach a receiving Sybil. Honest<->honest balances are never
// touched. Returns the ordered (sender, receiver) pairs.
inline std::vector<AttackerPair> attach_sybils(PcnGraph& g,
                                               const SybilConfig& cfg,
                                               Rng& rng) {
    if (cfg.pair_count < 1)
        throw InvalidConfig("sybil: pair_count must be >= 1");
    if (cfg.channels_per_sybil < 1)
        throw InvalidConfig("sybil: channels_per_sybil must be >= 1");
    if (cfg.sybil_funding <= 0)
        throw InvalidConfig("sybil: funding must be positive");

    std::vector<NodeId> honest;
    for (const NodeId& node : g.nodes())
        if (!g.is_sybil(node)) honest.push_back(node);
    if (static_cast<int>(honest.size()) < cfg.channels_per_sybil)
        throw InsufficientTargets(
            "sybil: not enough honest nodes for channels_per_sybil");

    auto pick_targets = [&](Rng& r) {
        std::vector<NodeId> targets;
        switch (cfg.attachment) {
            case Attachment::Random: {
                std::vector<NodeId> pool = honest;
                for (int i = 0; i < cfg.channels_per_sybil; ++i) {
                    const std::size_t at = r.index(pool.size());
                    targets.push_back(pool[at]);
                    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
                }
                break;
            }
            case Attachment::HighestDegree:
            case Attachment::HighestCapacity: {
                std::vector<std::pair<double, NodeId>> scored;
                for (const NodeId& node : honest) {
                    double score = 0.0;
                    for (const auto& [key, ch] : g.channels()) {
                        if (ch.x != node && ch.y != node) continue;
                        score += cfg.attachment == Attachment::HighestDegree
                                     ? 1.0
                                     : static_cast<double>(ch.capacity);
                    }
                    scored.emplace_back(score, node);
                }
                std::sort(scored.begin(), scored.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
                for (int i = 0; i < cfg.channels_per_sybil; ++i)
                    targets.push_back(scored[static_cast<std::size_t>(i)].second);
                break;
            }
        }
        return targets;
    };

    const int width = detail::name_width(cfg.pair_count);
    const Satoshi out_half = cfg.sybil_funding - cfg.sybil_funding / 2;
    const Satoshi in_half = cfg.sybil_funding / 2;
    std::vector<AttackerPair> pairs;
    for (int i = 0; i < cfg.pair_count; ++i) {
        NodeId sender{detail::padded_name("syb_s", i, width)};
        NodeId receiver{detail::padded_name("syb_r", i, width)};
        g.add_node(sender);
        g.add_node(receiver);
        g.mark_sybil(sender);
        g.mark_sybil(receiver);
        for (const NodeId& t : pick_targets(rng))
            g.open_channel(sender, t, out_half, in_half);
        for (const NodeId& t : pick_targets(rng))
            g.open_channel(t, receiver, in_half, out_half);
        pairs.push_back({sender, receiver});
    }
    return pairs;
}

struct PathLengthDiagnostics {
    double mean = 0.0;
    int max = 0;
    std::vector<int> lengths;  // shortest path length per pair, pair order
    double target_mean = 0.0;
    int target_max = 0;
    bool accepted = false;
};

// Shortest positive-balance path length per ordered attacker pair. The
// harness regenerates topologies until the mean is within +/-1 of the
// target and the max does not exceed target_max.
inline PathLengthDiagnostics calibrate_path_lengths(
    const PcnGraph& g, const std::vector<AttackerPair>& pairs,
    double target_mean, int target_max) {
    if (pairs.empty())
        throw InvalidConfig("calibrate: pairs must be nonempty");
    const detail::CompactView view(g);
    PathLengthDiagnostics diag;
    diag.target_mean = target_mean;
    diag.target_max = target_max;
    int total = 0;
    for (const AttackerPair& pair : pairs) {
        const auto dist = view.dist_to(view.index.at(pair.receiver));
        const int d = dist[static_cast<std::size_t>(view.index.at(pair.sender))];
        if (d == std::numeric_limits<int>::max())
            throw NoPathBetweenPair(pair.id());
        diag.lengths.push_back(d);
        diag.max = std::max(diag.max, d);
        total += d;
    }
    diag.mean = static_cast<double>(total) / static_cast<double>(pairs.size());
    diag.accepted =
        std::fabs(diag.mean - target_mean) <= 1.0 && diag.max <= target_max;
    return diag;
}

}  // namespace pcnlab
