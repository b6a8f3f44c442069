#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcnlab/graph.hpp"
#include "pcnlab/rng.hpp"

namespace pcnlab {

// A simple directed path between an attacker pair, together with the
// most recent probe of its bottleneck.
struct PathRecord {
    NodeId source;
    NodeId dest;
    std::vector<NodeId> hops;  // includes source and dest
    int length = 0;            // number of channels == hops.size() - 1
    Satoshi bottleneck = 0;
    BlockHeight probe_time = 0;
};

inline int hop_count(const PathRecord& path) { return path.length; }

struct AttackerPair {
    NodeId sender;
    NodeId receiver;

    std::string id() const { return sender.value + "->" + receiver.value; }

    friend bool operator==(const AttackerPair&, const AttackerPair&) = default;
};

namespace detail {

// Index-based directed view over channels with positive spendable
// balance, rebuilt per enumeration. Node order (and therefore neighbor
// order) follows NodeId ordering so enumeration is deterministic.
struct CompactView {
    std::vector<NodeId> ids;
    std::unordered_map<NodeId, int, NodeIdHash> index;
    std::vector<std::vector<int>> out;  // sorted neighbor indices
    std::vector<std::vector<int>> in;

    explicit CompactView(const PcnGraph& g) {
        ids.assign(g.nodes().begin(), g.nodes().end());
        index.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i)
            index.emplace(ids[i], static_cast<int>(i));
        out.resize(ids.size());
        in.resize(ids.size());
        for (const auto& [key, ch] : g.channels()) {
            const int xi = index.at(ch.x);
            const int yi = index.at(ch.y);
            if (ch.balance_xy > 0) {
                out[static_cast<std::size_t>(xi)].push_back(yi);
                in[static_cast<std::size_t>(yi)].push_back(xi);
            }
            if (ch.balance_yx > 0) {
                out[static_cast<std::size_t>(yi)].push_back(xi);
                in[static_cast<std::size_t>(xi)].push_back(yi);
            }
        }
        for (auto& v : out) std::sort(v.begin(), v.end());
        for (auto& v : in) std::sort(v.begin(), v.end());
    }

    // BFS distance (in channels) from every node to `target`, following
    // edges forward, i.e. computed over reversed adjacency.
    std::vector<int> dist_to(int target) const {
        std::vector<int> dist(ids.size(), std::numeric_limits<int>::max());
        std::deque<int> queue;
        dist[static_cast<std::size_t>(target)] = 0;
        queue.push_back(target);
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (int u : in[static_cast<std::size_t>(v)]) {
                if (dist[static_cast<std::size_t>(u)] !=
                    std::numeric_limits<int>::max())
                    continue;
                dist[static_cast<std::size_t>(u)] =
                    dist[static_cast<std::size_t>(v)] + 1;
                queue.push_back(u);
            }
        }
        return dist;
    }
};

}  // namespace detail

// Enumerates simple directed paths (every constituent directed balance
// positive) of length <= l_max, shortest first and lexicographic by hop
// ids within a length, stopping after max_paths. Iterative deepening by
// exact length visits each path exactly once; the distance-to-target
// bound prunes branches that cannot close at the current length.
inline std::vector<PathRecord> find_all_paths(const PcnGraph& g,
                                              const NodeId& source,
                                              const NodeId& dest, int l_max,
                                              int max_paths) {
    if (source == dest)
        throw InvalidConfig("find_all_paths: source == dest");
    if (!g.has_node(source)) throw UnknownNode(source.value);
    if (!g.has_node(dest)) throw UnknownNode(dest.value);
    std::vector<PathRecord> result;
    if (l_max < 1 || max_paths < 1) return result;

    const detail::CompactView view(g);
    const int src = view.index.at(source);
    const int dst = view.index.at(dest);
    const std::vector<int> dist = view.dist_to(dst);
    if (dist[static_cast<std::size_t>(src)] > l_max) return result;

    std::vector<char> on_path(view.ids.size(), 0);
    std::vector<int> stack{src};
    on_path[static_cast<std::size_t>(src)] = 1;

    auto emit = [&]() {
        PathRecord rec;
        rec.source = source;
        rec.dest = dest;
        rec.hops.reserve(stack.size());
        for (int v : stack) rec.hops.push_back(view.ids[static_cast<std::size_t>(v)]);
        rec.length = static_cast<int>(stack.size()) - 1;
        Satoshi bottleneck = std::numeric_limits<Satoshi>::max();
        for (std::size_t i = 0; i + 1 < rec.hops.size(); ++i)
            bottleneck = std::min(bottleneck,
                                  g.directed_balance(rec.hops[i], rec.hops[i + 1]));
        rec.bottleneck = bottleneck;
        rec.probe_time = g.block_height();
        result.push_back(std::move(rec));
    };

    // Depth-first search for paths of exactly `target_len` channels.
    auto dfs = [&](auto&& self, int v, int depth, int target_len) -> bool {
        if (v == dst) {
            if (depth == target_len) {
                emit();
                return static_cast<int>(result.size()) >= max_paths;
            }
            return false;  // dst cannot be an interior hop of a simple path
        }
        if (depth >= target_len) return false;
        for (int u : view.out[static_cast<std::size_t>(v)]) {
            if (on_path[static_cast<std::size_t>(u)]) continue;
            const int du = dist[static_cast<std::size_t>(u)];
            if (du == std::numeric_limits<int>::max()) continue;
            if (depth + 1 + du > target_len) continue;
            on_path[static_cast<std::size_t>(u)] = 1;
            stack.push_back(u);
            const bool full = self(self, u, depth + 1, target_len);
            stack.pop_back();
            on_path[static_cast<std::size_t>(u)] = 0;
            if (full) return true;
        }
        return false;
    };

    for (int len = dist[static_cast<std::size_t>(src)]; len <= l_max; ++len) {
        if (dfs(dfs, src, 0, len)) break;
    }
    return result;
}

// Re-reads the live bottleneck of a path. With noise > 0 the result is
// the true minimum scaled by a uniform factor from [1-noise, 1]; probing
// may under-estimate but never over-estimate. Updates the record's
// bottleneck and probe_time.
inline Satoshi probe(const PcnGraph& g, PathRecord& path, double noise = 0.0,
                     Rng* rng = nullptr) {
    if (path.hops.size() < 2) throw BrokenPath("path has no channels");
    if (noise < 0.0 || noise >= 1.0)
        throw InvalidConfig("probe: noise must be in [0, 1)");
    Satoshi true_min = std::numeric_limits<Satoshi>::max();
    for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
        if (!g.has_channel(path.hops[i], path.hops[i + 1]))
            throw BrokenPath(path.hops[i].value + "->" + path.hops[i + 1].value);
        true_min = std::min(true_min,
                            g.directed_balance(path.hops[i], path.hops[i + 1]));
    }
    Satoshi estimate = true_min;
    if (noise > 0.0) {
        if (rng == nullptr)
            throw InvalidConfig("probe: noise > 0 requires an rng");
        const double factor = 1.0 - noise * rng->uniform01();
        estimate = static_cast<Satoshi>(
            std::floor(static_cast<double>(true_min) * factor));
    }
    path.bottleneck = estimate;
    path.probe_time = g.block_height();
    return estimate;
}

// All candidate paths for a list of ordered attacker pairs, grouped per
// pair in pair order.
struct PathSet {
    int l_max = 20;
    std::vector<PathRecord> paths;
    std::vector<std::string> pair_ids;  // parallel to paths
    std::vector<int> path_indices;      // index within the pair group
};

inline PathSet collect_path_set(const PcnGraph& g,
                                const std::vector<AttackerPair>& pairs,
                                int l_max, int max_paths) {
    PathSet set;
    set.l_max = l_max;
    for (const AttackerPair& pair : pairs) {
        auto found =
            find_all_paths(g, pair.sender, pair.receiver, l_max, max_paths);
        int idx = 0;
        for (PathRecord& rec : found) {
            set.pair_ids.push_back(pair.id());
            set.path_indices.push_back(idx++);
            set.paths.push_back(std::move(rec));
        }
    }
    return set;
}

inline void path_set_to_csv(const PathSet& set, std::ostream& os) {
    os << "pair_id,path_index,length,bottleneck,hops\n";
    for (std::size_t i = 0; i < set.paths.size(); ++i) {
        const PathRecord& p = set.paths[i];
        os << set.pair_ids[i] << ',' << set.path_indices[i] << ',' << p.length
           << ',' << p.bottleneck << ',';
        for (std::size_t h = 0; h < p.hops.size(); ++h) {
            if (h > 0) os << ';';
            os << p.hops[h].value;
        }
        os << '\n';
    }
}

}  // namespace pcnlab
