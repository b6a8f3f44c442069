#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pcnlab/core.hpp"

namespace pcnlab {

// Channel congestion ratio: locked payment over one channel's balance.
// Exactly 1 when the payment equals the balance; undefined (and a hard
// error) when it exceeds it, so planner bugs surface immediately instead
// of being clamped away.
inline double ccr(Satoshi alpha, Satoshi balance) {
    if (balance <= 0)
        throw InvalidConfig("ccr: balance must be positive");
    if (alpha < 0)
        throw InvalidConfig("ccr: negative payment");
    if (alpha > balance)
        throw AllocationExceedsBalance("ccr: payment " + std::to_string(alpha) +
                                       " > balance " + std::to_string(balance));
    return static_cast<double>(alpha) / static_cast<double>(balance);
}

inline Satoshi min_balance(std::span<const Satoshi> balances) {
    if (balances.empty())
        throw InvalidConfig("empty balance list");
    return *std::min_element(balances.begin(), balances.end());
}

// Path congestion ratio: payment over the path bottleneck. Equals the
// maximum per-channel CCR because all channels see the same payment.
inline double pcr(Satoshi alpha, std::span<const Satoshi> balances) {
    const Satoshi bottleneck = min_balance(balances);
    if (bottleneck <= 0)
        throw InvalidConfig("pcr: balances must be positive");
    if (alpha < 0)
        throw InvalidConfig("pcr: negative payment");
    if (alpha > bottleneck)
        throw AllocationExceedsBottleneck(
            "pcr: payment " + std::to_string(alpha) + " > bottleneck " +
            std::to_string(bottleneck));
    return static_cast<double>(alpha) / static_cast<double>(bottleneck);
}

// Scale path congestion ratio: PCR weighted by path length relative to
// the protocol cap. Longer congested paths tie up more channels.
inline double spcr(Satoshi alpha, std::span<const Satoshi> balances,
                   int length, int l_max) {
    if (l_max <= 0 || length < 1 || length > l_max)
        throw InvalidConfig("spcr: need 1 <= length <= l_max");
    return (static_cast<double>(length) / static_cast<double>(l_max)) *
           pcr(alpha, balances);
}

// Same scaling applied to an already-computed PCR value.
inline double spcr_from_pcr(double pcr_value, int length, int l_max) {
    return (static_cast<double>(length) / static_cast<double>(l_max)) *
           pcr_value;
}

// Shortfall against a required SPCR; over-achievement counts as zero.
inline double spcr_deviation(double achieved, double threshold) {
    return std::max(threshold - achieved, 0.0);
}

// Everything gamma needs about one allocated path.
struct AllocationView {
    Satoshi alpha = 0;
    std::vector<Satoshi> per_channel_balances;  // probed at planning time
    int length = 0;
    int l_max = 20;

    double spcr_value() const {
        if (alpha == 0) return 0.0;
        return spcr(alpha, per_channel_balances, length, l_max);
    }
};

// Average cost-to-congestion ratio: sum of alpha/SPCR over all allocated
// paths, divided by the number of iterations. Unallocated paths (SPCR 0)
// contribute no cost and no congestion and are skipped.
inline double cost_congestion_gamma(std::span<const AllocationView> allocations,
                                    int iterations) {
    if (iterations < 1)
        throw InvalidConfig("gamma: iterations must be >= 1");
    double total = 0.0;
    for (const AllocationView& a : allocations) {
        const double s = a.spcr_value();
        if (s == 0.0) continue;
        total += static_cast<double>(a.alpha) / s;
    }
    return total / static_cast<double>(iterations);
}

// Raw form for callers that already carry (alpha, spcr) pairs.
inline double cost_congestion_gamma(
    std::span<const std::pair<Satoshi, double>> alpha_spcr, int iterations) {
    if (iterations < 1)
        throw InvalidConfig("gamma: iterations must be >= 1");
    double total = 0.0;
    for (const auto& [alpha, s] : alpha_spcr) {
        if (s == 0.0) continue;
        total += static_cast<double>(alpha) / s;
    }
    return total / static_cast<double>(iterations);
}

// Four equal PCR intervals; the top bin is closed so pcr == 1 lands in
// 75-100%.
struct PcrHistogram {
    std::array<std::int64_t, 4> counts{};
    std::array<double, 4> percent{};

    std::int64_t total() const {
        return counts[0] + counts[1] + counts[2] + counts[3];
    }
};

inline int pcr_bin(double p) {
    if (p < 0.0 || p > 1.0)
        throw InvalidConfig("pcr histogram: value outside [0,1]");
    if (p < 0.25) return 0;
    if (p < 0.50) return 1;
    if (p < 0.75) return 2;
    return 3;
}

inline PcrHistogram pcr_histogram(std::span<const double> pcrs) {
    PcrHistogram h;
    for (double p : pcrs) ++h.counts[static_cast<std::size_t>(pcr_bin(p))];
    const auto n = h.total();
    for (std::size_t i = 0; i < 4; ++i)
        h.percent[i] = n == 0 ? 0.0
                              : 100.0 * static_cast<double>(h.counts[i]) /
                                    static_cast<double>(n);
    return h;
}

struct PathMetricsRow {
    std::string pair_id;
    int path_index = 0;
    Satoshi alpha = 0;
    double ccr_max = 0.0;
    double pcr = 0.0;
    double spcr = 0.0;
    double deviation = 0.0;
};

struct MetricsTotals {
    Satoshi locked_payment = 0;
    double mean_pcr = 0.0;
    double mean_spcr = 0.0;
    double gamma = 0.0;
};

struct MetricsReport {
    std::vector<PathMetricsRow> per_path;
    MetricsTotals totals;
    PcrHistogram histogram;
};

// Assembles a report from per-path allocation views. `threshold` drives
// the deviation column; pass 0 when no SPCR target applies.
inline MetricsReport build_metrics_report(
    std::span<const AllocationView> allocations,
    std::span<const std::string> pair_ids, std::span<const int> path_indices,
    double threshold, int iterations = 1) {
    MetricsReport report;
    std::vector<double> pcrs;
    pcrs.reserve(allocations.size());
    double pcr_sum = 0.0;
    double spcr_sum = 0.0;
    for (std::size_t i = 0; i < allocations.size(); ++i) {
        const AllocationView& a = allocations[i];
        PathMetricsRow row;
        row.pair_id = i < pair_ids.size() ? pair_ids[i] : "";
        row.path_index = i < path_indices.size() ? path_indices[i] : 0;
        row.alpha = a.alpha;
        row.pcr = a.alpha == 0 ? 0.0 : pcr(a.alpha, a.per_channel_balances);
        row.ccr_max = row.pcr;  // same payment over the minimum balance
        row.spcr = spcr_from_pcr(row.pcr, a.length, a.l_max);
        row.deviation = spcr_deviation(row.spcr, threshold);
        pcr_sum += row.pcr;
        spcr_sum += row.spcr;
        pcrs.push_back(row.pcr);
        report.totals.locked_payment += a.alpha;
        report.per_path.push_back(std::move(row));
    }
    const auto n = static_cast<double>(allocations.size());
    report.totals.mean_pcr = allocations.empty() ? 0.0 : pcr_sum / n;
    report.totals.mean_spcr = allocations.empty() ? 0.0 : spcr_sum / n;
    report.totals.gamma = cost_congestion_gamma(allocations, iterations);
    report.histogram = pcr_histogram(pcrs);
    return report;
}

// Stable float rendering for persisted CSV bytes.
inline std::string fmt_ratio(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void metrics_report_to_csv(const MetricsReport& report,
                                  const std::string& run_id,
                                  const std::string& attack_name,
                                  double threshold, Satoshi budget,
                                  std::ostream& os) {
    os << "run_id,attack_name,threshold,budget,pair_id,path_index,alpha,pcr,"
          "spcr,deviation\n";
    for (const PathMetricsRow& row : report.per_path) {
        os << run_id << ',' << attack_name << ',' << fmt_ratio(threshold) << ','
           << budget << ',' << row.pair_id << ',' << row.path_index << ','
           << row.alpha << ',' << fmt_ratio(row.pcr) << ','
           << fmt_ratio(row.spcr) << ',' << fmt_ratio(row.deviation) << '\n';
    }
}

inline void metrics_summary_to_csv(const MetricsReport& report,
                                   const std::string& run_id,
                                   const std::string& attack_name,
                                   double threshold, Satoshi budget,
                                   std::ostream& os) {
    os << "run_id,attack_name,threshold,budget,locked_payment,mean_pcr,"
          "mean_spcr,gamma,paths,hist_0_25,hist_25_50,hist_50_75,"
          "hist_75_100\n";
    os << run_id << ',' << attack_name << ',' << fmt_ratio(threshold) << ','
       << budget << ',' << report.totals.locked_payment << ','
       << fmt_ratio(report.totals.mean_pcr) << ','
       << fmt_ratio(report.totals.mean_spcr) << ','
       << fmt_ratio(report.totals.gamma) << ',' << report.per_path.size();
    for (double p : report.histogram.percent) os << ',' << fmt_ratio(p);
    os << '\n';
}

}  // namespace pcnlab
