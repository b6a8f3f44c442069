#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <string>
#include <vector>

#include "pcnlab/graph.hpp"
#include "pcnlab/pathfind.hpp"
#include "pcnlab/rng.hpp"

namespace pcnlab {

namespace detail {

// Minimal SHA-256, enough to produce collision-resistant commitment
// digests for simulated HTLCs. Identities and signatures stay out of
// scope; the digest is only ever compared for equality.
class Sha256 {
public:
    static std::string hex(const void* data, std::size_t len) {
        Sha256 h;
        h.update(static_cast<const std::uint8_t*>(data), len);
        const auto digest = h.finish();
        static const char* kHex = "0123456789abcdef";
        std::string out(64, '0');
        for (std::size_t i = 0; i < 32; ++i) {
            out[2 * i] = kHex[digest[i] >> 4];
            out[2 * i + 1] = kHex[digest[i] & 0xf];
        }
        return out;
    }

private:
    void update(const std::uint8_t* data, std::size_t len) {
        total_ += len;
        while (len > 0) {
            const std::size_t take = std::min(len, 64 - fill_);
            std::memcpy(buf_.data() + fill_, data, take);
            fill_ += take;
            data += take;
            len -= take;
            if (fill_ == 64) {
                process(buf_.data());
                fill_ = 0;
            }
        }
    }

    std::array<std::uint8_t, 32> finish() {
        const std::uint64_t bits = total_ * 8;
        const std::uint8_t pad = 0x80;
        update(&pad, 1);
        const std::uint8_t zero = 0;
        while (fill_ != 56) update(&zero, 1);
        std::uint8_t len_be[8];
        for (int i = 0; i < 8; ++i)
            len_be[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(len_be, 8);
        std::array<std::uint8_t, 32> out{};
        for (int i = 0; i < 8; ++i) {
            out[static_cast<std::size_t>(4 * i)] =
                static_cast<std::uint8_t>(h_[i] >> 24);
            out[static_cast<std::size_t>(4 * i + 1)] =
                static_cast<std::uint8_t>(h_[i] >> 16);
            out[static_cast<std::size_t>(4 * i + 2)] =
                static_cast<std::uint8_t>(h_[i] >> 8);
            out[static_cast<std::size_t>(4 * i + 3)] =
                static_cast<std::uint8_t>(h_[i]);
        }
        return out;
    }

    void process(const std::uint8_t* p) {
        static constexpr std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b,
            0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01,
            0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7,
            0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc,
            0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152,
            0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
            0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
            0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819,
            0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08,
            0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f,
            0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        auto rotr = [](std::uint32_t x, int s) {
            return (x >> s) | (x << (32 - s));
        };
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = static_cast<std::uint32_t>(p[4 * i] << 24) |
                   static_cast<std::uint32_t>(p[4 * i + 1] << 16) |
                   static_cast<std::uint32_t>(p[4 * i + 2] << 8) |
                   static_cast<std::uint32_t>(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 =
                rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 =
                rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3];
        std::uint32_t e = h_[4], f = h_[5], g = h_[6], h = h_[7];
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = h + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            h = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h_[0] += a;
        h_[1] += b;
        h_[2] += c;
        h_[3] += d;
        h_[4] += e;
        h_[5] += f;
        h_[6] += g;
        h_[7] += h;
    }

    std::array<std::uint32_t, 8> h_{0x6a09e667, 0xbb67ae85, 0x3c6ef372,
                                    0xa54ff53a, 0x510e527f, 0x9b05688c,
                                    0x1f83d9ab, 0x5be0cd19};
    std::array<std::uint8_t, 64> buf_{};
    std::size_t fill_ = 0;
    std::uint64_t total_ = 0;
};

}  // namespace detail

enum class HtlcState { Pending, Failed, Fulfilled };

struct Htlc {
    std::uint64_t id = 0;
    NodeId from;
    NodeId to;
    Satoshi amount = 0;
    std::string commitment;  // hex digest of the preimage
    std::string preimage;    // receiver-held; withheld during attacks
    BlockHeight expiry = 0;
    HtlcState state = HtlcState::Pending;
};

struct FeePolicy {
    Satoshi flat_fee_per_hop = 0;
};

struct HtlcEvent {
    BlockHeight block_height = 0;
    std::string event;  // create | fail | fulfill
    std::string channel;
    Satoshi amount = 0;
    std::uint64_t htlc_id = 0;
};

struct HtlcLog {
    std::vector<HtlcEvent> events;

    void record(BlockHeight h, const char* event, const NodeId& from,
                const NodeId& to, Satoshi amount, std::uint64_t id) {
        events.push_back({h, event, from.value + "->" + to.value, amount, id});
    }

    void to_csv(std::ostream& os) const {
        os << "block_height,event,channel,amount,htlc_id\n";
        for (const HtlcEvent& e : events)
            os << e.block_height << ',' << e.event << ',' << e.channel << ','
               << e.amount << ',' << e.htlc_id << '\n';
    }
};

// Per-hop expiries decrease toward the receiver: hop i of L gets
// expiry + (L-1-i) * cltv_delta, so the final hop expires exactly at
// `expiry`. Only the path-level expiry matters for refund correctness.
struct HtlcOptions {
    BlockHeight cltv_delta = 40;
};

// Creates one pending HTLC per channel along the path; hop i locks
// amount - i * fee. All-or-nothing: every hop is validated before any
// balance moves, so a failed lock leaves the graph untouched.
inline std::vector<Htlc> lock_path(PcnGraph& g, const PathRecord& path,
                                   Satoshi amount, BlockHeight expiry,
                                   const FeePolicy& fees = {},
                                   const HtlcOptions& opt = {},
                                   HtlcLog* log = nullptr) {
    const int hops = static_cast<int>(path.hops.size()) - 1;
    if (hops < 1) throw BrokenPath("lock_path: path has no channels");
    if (amount <= 0) throw InvalidConfig("lock_path: amount must be positive");

    // Validation pass. A simple path never repeats a channel, so
    // per-hop residual checks are independent.
    for (int i = 0; i < hops; ++i) {
        const NodeId& from = path.hops[static_cast<std::size_t>(i)];
        const NodeId& to = path.hops[static_cast<std::size_t>(i + 1)];
        const Satoshi hop_amount = amount - static_cast<Satoshi>(i) *
                                                fees.flat_fee_per_hop;
        const ChannelState& ch = g.channel(from, to);
        if (hop_amount < ch.htlc_minimum)
            throw BelowDust("hop " + std::to_string(i) + ": " +
                                std::to_string(hop_amount) + " < htlc_minimum",
                            i);
        if (g.directed_balance(from, to) < hop_amount)
            throw InsufficientBalance(
                "hop " + std::to_string(i) + ": balance " +
                    std::to_string(g.directed_balance(from, to)) + " < " +
                    std::to_string(hop_amount),
                i);
        if (g.pending_htlcs(from, to) >= ch.max_accepted_htlcs)
            throw SlotsExhausted("hop " + std::to_string(i) + ": htlc slots full",
                                 i);
    }

    std::vector<Htlc> created;
    created.reserve(static_cast<std::size_t>(hops));
    // One preimage per payment; every hop shares the commitment.
    const std::uint64_t payment_tag = g.next_htlc_id();
    char preimage[32];
    std::uint64_t pre_state = payment_tag * 0x9e3779b97f4a7c15ULL + 1;
    for (int i = 0; i < 4; ++i) {
        const std::uint64_t word = splitmix64(pre_state);
        std::memcpy(preimage + 8 * i, &word, 8);
    }
    const std::string preimage_hex = detail::Sha256::hex(preimage, 32);
    const std::string commitment =
        detail::Sha256::hex(preimage_hex.data(), preimage_hex.size());

    for (int i = 0; i < hops; ++i) {
        const NodeId& from = path.hops[static_cast<std::size_t>(i)];
        const NodeId& to = path.hops[static_cast<std::size_t>(i + 1)];
        const Satoshi hop_amount = amount - static_cast<Satoshi>(i) *
                                                fees.flat_fee_per_hop;
        g.htlc_lock(from, to, hop_amount);
        Htlc h;
        h.id = g.next_htlc_id();
        h.from = from;
        h.to = to;
        h.amount = hop_amount;
        h.commitment = commitment;
        h.preimage = preimage_hex;
        h.expiry = expiry + static_cast<BlockHeight>(hops - 1 - i) *
                                opt.cltv_delta;
        created.push_back(h);
        if (log)
            log->record(g.block_height(), "create", from, to, hop_amount, h.id);
    }
    return created;
}

// Advances the block clock; every pending HTLC whose expiry has been
// reached fails and refunds the sender side. Idempotent. Returns the
// HTLCs that failed during this call.
inline std::vector<Htlc> withhold_and_expire(PcnGraph& g,
                                             std::vector<Htlc>& htlcs,
                                             BlockHeight advance_to,
                                             HtlcLog* log = nullptr) {
    g.advance_block_to(advance_to);
    std::vector<Htlc> failed;
    for (Htlc& h : htlcs) {
        if (h.state != HtlcState::Pending) continue;
        if (h.expiry > g.block_height()) continue;
        g.htlc_refund(h.from, h.to, h.amount);
        h.state = HtlcState::Failed;
        failed.push_back(h);
        if (log)
            log->record(g.block_height(), "fail", h.from, h.to, h.amount, h.id);
    }
    return failed;
}

// Settlement path; modeled for completeness, never exercised by the
// congestion attacks (attackers withhold the preimage).
inline void fulfill(PcnGraph& g, Htlc& h, const std::string& preimage,
                    HtlcLog* log = nullptr) {
    if (h.state != HtlcState::Pending)
        throw InvalidConfig("fulfill: htlc is not pending");
    if (detail::Sha256::hex(preimage.data(), preimage.size()) != h.commitment)
        throw InvalidConfig("fulfill: preimage does not match commitment");
    g.htlc_settle(h.from, h.to, h.amount);
    h.state = HtlcState::Fulfilled;
    if (log) log->record(g.block_height(), "fulfill", h.from, h.to, h.amount, h.id);
}

// Occupies HTLC slots along the path with dust-sized payments until the
// tightest direction runs out of slots (or balance). Partial creation is
// the point; returns everything that was created.
inline std::vector<Htlc> slot_saturation(PcnGraph& g, const PathRecord& path,
                                         int count, Satoshi dust_amount,
                                         const FeePolicy& fees = {},
                                         const HtlcOptions& opt = {},
                                         HtlcLog* log = nullptr) {
    std::vector<Htlc> created;
    for (int i = 0; i < count; ++i) {
        try {
            auto batch = lock_path(g, path, dust_amount,
                                   g.block_height() + opt.cltv_delta, fees,
                                   opt, log);
            created.insert(created.end(), batch.begin(), batch.end());
        } catch (const SlotsExhausted&) {
            break;
        } catch (const InsufficientBalance&) {
            break;
        }
    }
    return created;
}

}  // namespace pcnlab
