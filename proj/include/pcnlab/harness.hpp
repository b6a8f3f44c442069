#pragma once

#include <array>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcnlab/config.hpp"
#include "pcnlab/htlc.hpp"
#include "pcnlab/metrics.hpp"
#include "pcnlab/netgen.hpp"
#include "pcnlab/planner.hpp"
#include "pcnlab/svg.hpp"

namespace pcnlab {

// One aggregated grid point: (budget, threshold, strategy) for the
// threshold experiment, (budget, strategy) for the budget sweep
// (threshold < 0 marks "not applicable").
struct CellAggregate {
    Satoshi budget = 0;
    double threshold = -1.0;
    Strategy strategy = Strategy::MinPay;

    double pcr_mean = 0.0, pcr_std = 0.0;
    double spcr_mean = 0.0, spcr_std = 0.0;
    double dev_mean = 0.0, dev_std = 0.0;
    double locked_mean = 0.0, locked_std = 0.0;
    double gamma = 0.0;  // (1/k) sum over iterations of alpha/spcr terms
    PcrHistogram hist;   // pooled over iterations
    std::int64_t paths = 0;
    double mean_path_length = 0.0;
};

struct RunResult {
    std::string experiment;  // "exp1" | "exp2"
    std::string config_hash;
    std::string config_text;
    int iterations = 0;
    std::vector<CellAggregate> cells;
};

namespace detail {

struct CellSample {
    double mean_pcr = 0.0;
    double mean_spcr = 0.0;
    double mean_dev = 0.0;
    Satoshi locked = 0;
    double gamma_terms = 0.0;
    std::array<std::int64_t, 4> hist{};
    std::int64_t paths = 0;
    double sum_path_length = 0.0;
};

// Evaluates one round's plans against a deviation threshold.
inline CellSample sample_from_plans(const std::vector<AttackPlan>& plans,
                                    double threshold, int l_max) {
    CellSample s;
    double pcr_sum = 0.0, spcr_sum = 0.0, dev_sum = 0.0;
    for (const AttackPlan& plan : plans) {
        for (const PathAllocation& a : plan.allocations) {
            double p = 0.0;
            if (a.applied_alpha > 0 && a.bottleneck > 0)
                p = static_cast<double>(a.applied_alpha) /
                    static_cast<double>(a.bottleneck);
            const double sp = spcr_from_pcr(p, a.path.length, l_max);
            pcr_sum += p;
            spcr_sum += sp;
            dev_sum += spcr_deviation(sp, threshold);
            if (sp > 0.0)
                s.gamma_terms += static_cast<double>(a.applied_alpha) / sp;
            ++s.hist[static_cast<std::size_t>(pcr_bin(p))];
            ++s.paths;
            s.sum_path_length += a.path.length;
            s.locked += a.applied_alpha;
        }
    }
    if (s.paths > 0) {
        s.mean_pcr = pcr_sum / static_cast<double>(s.paths);
        s.mean_spcr = spcr_sum / static_cast<double>(s.paths);
        s.mean_dev = dev_sum / static_cast<double>(s.paths);
    }
    return s;
}

struct Network {
    PcnGraph graph;
    std::vector<AttackerPair> pairs;
};

// Fresh seeded topology with Sybils attached, regenerated until the
// attacker-pair path lengths calibrate (or the attempt budget runs out).
inline Network build_network(const ExperimentConfig& cfg, int iteration) {
    for (int attempt = 0; attempt < cfg.max_regen; ++attempt) {
        TopologyConfig tcfg = cfg.topology;
        tcfg.rng_seed = derive_seed(cfg.seed, stream::kTopology,
                                    static_cast<std::uint64_t>(iteration),
                                    static_cast<std::uint64_t>(attempt));
        Network net;
        net.graph = generate_topology(tcfg);
        Rng sybil_rng(derive_seed(cfg.seed, stream::kSybil,
                                  static_cast<std::uint64_t>(iteration),
                                  static_cast<std::uint64_t>(attempt)));
        net.pairs = attach_sybils(net.graph, cfg.sybil, sybil_rng);
        if (!cfg.calibrate) return net;
        try {
            const auto diag = calibrate_path_lengths(
                net.graph, net.pairs, cfg.target_mean, cfg.target_max);
            if (diag.accepted) return net;
        } catch (const NoPathBetweenPair&) {
            // Disconnected pair: regenerate like any miscalibration.
        }
    }
    throw TopologyCalibrationFailed(
        "no topology met the path-length targets after " +
        std::to_string(cfg.max_regen) + " attempts");
}

// Executes one planning round on a scratch copy, then replays the
// applied allocations as real HTLCs (lock, withhold, expire) so every
// experiment exercises the full lifecycle. Payments below the dust
// floor cannot carry an HTLC and are skipped in the replay.
inline std::vector<AttackPlan> round_with_htlcs(const PcnGraph& base,
                                                const std::vector<AttackerPair>& pairs,
                                                const ExperimentConfig& cfg,
                                                Strategy strategy,
                                                Satoshi budget_total,
                                                std::optional<double> threshold,
                                                std::uint64_t round_tag) {
    RoundOptions opt;
    opt.l_max = cfg.l_max;
    opt.max_paths = cfg.max_paths;
    opt.probe_noise = cfg.probe_noise;
    opt.reprobe = cfg.reprobe;
    opt.budget_scope = cfg.budget_scope;
    opt.rng_seed = round_tag;

    const auto divisor = static_cast<Satoshi>(
        cfg.split_budget && !pairs.empty() ? pairs.size() : 1);
    const Satoshi per_attacker = budget_total / divisor;

    PcnGraph planning = base;
    auto plans = run_attack_round(planning, pairs, strategy, {per_attacker},
                                  threshold, opt);

    PcnGraph live = base;
    std::vector<Htlc> htlcs;
    HtlcOptions hopt;
    hopt.cltv_delta = cfg.cltv_delta;
    const BlockHeight expiry = live.block_height() + cfg.cltv_delta + 1;
    for (const AttackPlan& plan : plans) {
        for (const PathAllocation& a : plan.allocations) {
            if (a.applied_alpha <= 0) continue;
            Satoshi floor_dust = 0;
            for (std::size_t h = 0; h + 1 < a.path.hops.size(); ++h)
                floor_dust = std::max(
                    floor_dust,
                    live.channel(a.path.hops[h], a.path.hops[h + 1]).htlc_minimum);
            if (a.applied_alpha < floor_dust) continue;
            auto batch = lock_path(live, a.path, a.applied_alpha, expiry,
                                   FeePolicy{}, hopt);
            htlcs.insert(htlcs.end(), batch.begin(), batch.end());
        }
    }
    withhold_and_expire(live, htlcs,
                        expiry + cfg.cltv_delta * (cfg.l_max + 1));
    for (const auto& [key, ch] : live.channels()) {
        if (!ch.conserved() || ch.pending_htlcs_xy != 0 ||
            ch.pending_htlcs_yx != 0)
            throw Error("htlc lifecycle failed to restore channel state");
    }
    return plans;
}

inline int worker_count() {
    if (const char* env = std::getenv("PCNLAB_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 64);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Runs `count` iteration tasks over a pool; task(i) fills slot i. The
// reduce step runs in index order afterwards, so results are identical
// however many workers run.
template <typename Task>
void parallel_iterations(int count, Task&& task) {
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    std::string error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    task(i);
                } catch (const std::exception& e) {
                    std::scoped_lock lk(error_mutex);
                    failed.store(true);
                    if (error.empty()) error = e.what();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) throw Error("experiment iteration failed: " + error);
}

inline void finish_aggregate(CellAggregate& agg,
                             const std::vector<CellSample>& samples) {
    const auto k = static_cast<double>(samples.size());
    double pcr = 0, spcr = 0, dev = 0, locked = 0, terms = 0;
    double len_sum = 0;
    for (const CellSample& s : samples) {
        pcr += s.mean_pcr;
        spcr += s.mean_spcr;
        dev += s.mean_dev;
        locked += static_cast<double>(s.locked);
        terms += s.gamma_terms;
        for (std::size_t b = 0; b < 4; ++b) agg.hist.counts[b] += s.hist[b];
        agg.paths += s.paths;
        len_sum += s.sum_path_length;
    }
    agg.pcr_mean = pcr / k;
    agg.spcr_mean = spcr / k;
    agg.dev_mean = dev / k;
    agg.locked_mean = locked / k;
    agg.gamma = terms / k;
    double v_pcr = 0, v_spcr = 0, v_dev = 0, v_locked = 0;
    for (const CellSample& s : samples) {
        v_pcr += (s.mean_pcr - agg.pcr_mean) * (s.mean_pcr - agg.pcr_mean);
        v_spcr += (s.mean_spcr - agg.spcr_mean) * (s.mean_spcr - agg.spcr_mean);
        v_dev += (s.mean_dev - agg.dev_mean) * (s.mean_dev - agg.dev_mean);
        v_locked += (static_cast<double>(s.locked) - agg.locked_mean) *
                    (static_cast<double>(s.locked) - agg.locked_mean);
    }
    agg.pcr_std = std::sqrt(v_pcr / k);
    agg.spcr_std = std::sqrt(v_spcr / k);
    agg.dev_std = std::sqrt(v_dev / k);
    agg.locked_std = std::sqrt(v_locked / k);
    const auto total = agg.hist.total();
    for (std::size_t b = 0; b < 4; ++b)
        agg.hist.percent[b] =
            total == 0 ? 0.0
                       : 100.0 * static_cast<double>(agg.hist.counts[b]) /
                             static_cast<double>(total);
    agg.mean_path_length =
        agg.paths == 0 ? 0.0 : len_sum / static_cast<double>(agg.paths);
}

inline std::vector<Strategy> effective_strategies(const ExperimentConfig& cfg,
                                                  bool experiment_two) {
    if (!cfg.strategies.empty()) return cfg.strategies;
    if (experiment_two)
        return {Strategy::SpcrMax, Strategy::Random, Strategy::General};
    return {Strategy::MinPay, Strategy::Random, Strategy::General};
}

}  // namespace detail

// Experiment 1: MinPay against the baselines over the SPCR-threshold
// grid, for each configured budget, averaged over iterations. A
// baseline's allocation does not depend on the threshold, so each
// baseline runs once per (iteration, budget) and its deviations are
// re-evaluated per threshold.
inline RunResult run_experiment_1(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto strategies = detail::effective_strategies(cfg, false);
    if (strategies.empty()) throw ConfigError("no strategies configured");
    if (std::find(strategies.begin(), strategies.end(), Strategy::MinPay) ==
        strategies.end())
        throw ConfigError("experiment 1 requires the minpay strategy");
    if (cfg.threshold_grid.empty())
        throw ConfigError("experiment 1 needs a threshold grid");

    struct CellPos {
        Satoshi budget;
        double threshold;
        Strategy strategy;
    };
    std::vector<CellPos> layout;
    for (Satoshi budget : cfg.budgets)
        for (Strategy s : strategies)
            for (double t : cfg.threshold_grid) layout.push_back({budget, t, s});

    std::vector<std::vector<detail::CellSample>> samples(
        layout.size(), std::vector<detail::CellSample>(
                           static_cast<std::size_t>(cfg.iterations)));

    detail::parallel_iterations(cfg.iterations, [&](int iter) {
        const detail::Network net = detail::build_network(cfg, iter);
        std::size_t cell = 0;
        for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
            const Satoshi budget = cfg.budgets[bi];
            for (Strategy s : strategies) {
                const std::uint64_t tag = derive_seed(
                    cfg.seed, 1000 + static_cast<std::uint64_t>(iter),
                    static_cast<std::uint64_t>(bi) * 8 +
                        static_cast<std::uint64_t>(s));
                if (s == Strategy::MinPay) {
                    for (double t : cfg.threshold_grid) {
                        const auto plans = detail::round_with_htlcs(
                            net.graph, net.pairs, cfg, s, budget, t,
                            derive_seed(tag,
                                        static_cast<std::uint64_t>(t * 1e6)));
                        samples[cell++][static_cast<std::size_t>(iter)] =
                            detail::sample_from_plans(plans, t, cfg.l_max);
                    }
                } else {
                    const auto plans = detail::round_with_htlcs(
                        net.graph, net.pairs, cfg, s, budget, std::nullopt,
                        tag);
                    for (double t : cfg.threshold_grid) {
                        samples[cell++][static_cast<std::size_t>(iter)] =
                            detail::sample_from_plans(plans, t, cfg.l_max);
                    }
                }
            }
        }
    });

    RunResult result;
    result.experiment = "exp1";
    result.config_hash = config_hash(cfg);
    result.config_text = config_to_text(cfg);
    result.iterations = cfg.iterations;
    for (std::size_t c = 0; c < layout.size(); ++c) {
        CellAggregate agg;
        agg.budget = layout[c].budget;
        agg.threshold = layout[c].threshold;
        agg.strategy = layout[c].strategy;
        detail::finish_aggregate(agg, samples[c]);
        result.cells.push_back(agg);
    }
    return result;
}

// Experiment 2: SPCR-Max against the baselines over a budget sweep.
inline RunResult run_experiment_2(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto strategies = detail::effective_strategies(cfg, true);
    if (strategies.empty()) throw ConfigError("no strategies configured");
    if (std::find(strategies.begin(), strategies.end(), Strategy::SpcrMax) ==
        strategies.end())
        throw ConfigError("experiment 2 requires the spcr-max strategy");
    if (cfg.budget_sweep.empty())
        throw ConfigError("experiment 2 needs a budget sweep");

    struct CellPos {
        Satoshi budget;
        Strategy strategy;
    };
    std::vector<CellPos> layout;
    for (Satoshi budget : cfg.budget_sweep)
        for (Strategy s : strategies) layout.push_back({budget, s});

    std::vector<std::vector<detail::CellSample>> samples(
        layout.size(), std::vector<detail::CellSample>(
                           static_cast<std::size_t>(cfg.iterations)));

    detail::parallel_iterations(cfg.iterations, [&](int iter) {
        const detail::Network net = detail::build_network(cfg, iter);
        std::size_t cell = 0;
        for (std::size_t bi = 0; bi < cfg.budget_sweep.size(); ++bi) {
            for (Strategy s : strategies) {
                const std::uint64_t tag = derive_seed(
                    cfg.seed, 2000 + static_cast<std::uint64_t>(iter),
                    static_cast<std::uint64_t>(bi) * 8 +
                        static_cast<std::uint64_t>(s));
                const std::optional<double> threshold =
                    s == Strategy::MinPay ? std::optional<double>(0.0)
                                          : std::nullopt;
                const auto plans = detail::round_with_htlcs(
                    net.graph, net.pairs, cfg, s, cfg.budget_sweep[bi],
                    threshold, tag);
                samples[cell++][static_cast<std::size_t>(iter)] =
                    detail::sample_from_plans(plans, 0.0, cfg.l_max);
            }
        }
    });

    RunResult result;
    result.experiment = "exp2";
    result.config_hash = config_hash(cfg);
    result.config_text = config_to_text(cfg);
    result.iterations = cfg.iterations;
    for (std::size_t c = 0; c < layout.size(); ++c) {
        CellAggregate agg;
        agg.budget = layout[c].budget;
        agg.threshold = -1.0;
        agg.strategy = layout[c].strategy;
        detail::finish_aggregate(agg, samples[c]);
        result.cells.push_back(agg);
    }
    return result;
}

inline nlohmann::ordered_json run_result_to_json(const RunResult& r) {
    nlohmann::ordered_json doc;
    doc["experiment"] = r.experiment;
    doc["config_hash"] = r.config_hash;
    doc["config"] = r.config_text;
    doc["iterations"] = r.iterations;
    doc["cells"] = nlohmann::ordered_json::array();
    for (const CellAggregate& c : r.cells) {
        nlohmann::ordered_json cell;
        cell["budget"] = c.budget;
        cell["threshold"] = c.threshold;
        cell["strategy"] = strategy_name(c.strategy);
        cell["pcr_mean"] = c.pcr_mean;
        cell["pcr_std"] = c.pcr_std;
        cell["spcr_mean"] = c.spcr_mean;
        cell["spcr_std"] = c.spcr_std;
        cell["dev_mean"] = c.dev_mean;
        cell["dev_std"] = c.dev_std;
        cell["locked_mean"] = c.locked_mean;
        cell["locked_std"] = c.locked_std;
        cell["gamma"] = c.gamma;
        cell["hist_counts"] = c.hist.counts;
        cell["hist_percent"] = c.hist.percent;
        cell["paths"] = c.paths;
        cell["mean_path_length"] = c.mean_path_length;
        doc["cells"].push_back(std::move(cell));
    }
    return doc;
}

inline RunResult run_result_from_json(const nlohmann::json& doc) {
    RunResult r;
    r.experiment = doc.at("experiment").get<std::string>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.config_text = doc.at("config").get<std::string>();
    r.iterations = doc.at("iterations").get<int>();
    for (const auto& cell : doc.at("cells")) {
        CellAggregate c;
        c.budget = cell.at("budget").get<Satoshi>();
        c.threshold = cell.at("threshold").get<double>();
        const auto s = strategy_from_name(cell.at("strategy").get<std::string>());
        if (!s) throw IoError("unknown strategy in results file");
        c.strategy = *s;
        c.pcr_mean = cell.at("pcr_mean").get<double>();
        c.pcr_std = cell.at("pcr_std").get<double>();
        c.spcr_mean = cell.at("spcr_mean").get<double>();
        c.spcr_std = cell.at("spcr_std").get<double>();
        c.dev_mean = cell.at("dev_mean").get<double>();
        c.dev_std = cell.at("dev_std").get<double>();
        c.locked_mean = cell.at("locked_mean").get<double>();
        c.locked_std = cell.at("locked_std").get<double>();
        c.gamma = cell.at("gamma").get<double>();
        for (std::size_t b = 0; b < 4; ++b) {
            c.hist.counts[b] = cell.at("hist_counts")[b].get<std::int64_t>();
            c.hist.percent[b] = cell.at("hist_percent")[b].get<double>();
        }
        c.paths = cell.at("paths").get<std::int64_t>();
        c.mean_path_length = cell.at("mean_path_length").get<double>();
        r.cells.push_back(c);
    }
    return r;
}

enum class ReportFormat { Csv, SvgCharts, SummaryText };

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& content,
                       std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    written.push_back(path.string());
}

inline const char* kBinLabels[4] = {"0-25", "25-50", "50-75", "75-100"};

}  // namespace detail

// Renders a run into files under `dir`. Returns the files written.
inline std::vector<std::string> render_report(const RunResult& result,
                                              ReportFormat format,
                                              const std::string& dir) {
    if (result.cells.empty())
        throw ConfigError("render_report: result has no cells");
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> written;
    const bool exp1 = result.experiment == "exp1";

    // Distinct axis values in first-seen (configured) order.
    std::vector<Satoshi> budgets;
    std::vector<double> thresholds;
    std::vector<Strategy> strategies;
    for (const CellAggregate& c : result.cells) {
        if (std::find(budgets.begin(), budgets.end(), c.budget) == budgets.end())
            budgets.push_back(c.budget);
        if (exp1 && std::find(thresholds.begin(), thresholds.end(),
                              c.threshold) == thresholds.end())
            thresholds.push_back(c.threshold);
        if (std::find(strategies.begin(), strategies.end(), c.strategy) ==
            strategies.end())
            strategies.push_back(c.strategy);
    }
    auto cell_at = [&](Satoshi b, double t, Strategy s) -> const CellAggregate& {
        for (const CellAggregate& c : result.cells)
            if (c.budget == b && c.strategy == s &&
                (!exp1 || c.threshold == t))
                return c;
        throw Error("render_report: missing cell");
    };

    if (format == ReportFormat::Csv) {
        struct Series {
            const char* name;
            double CellAggregate::* mean;
            double CellAggregate::* std;
        };
        const std::vector<Series> series{
            {"pcr", &CellAggregate::pcr_mean, &CellAggregate::pcr_std},
            {"spcr", &CellAggregate::spcr_mean, &CellAggregate::spcr_std},
            {"spcr_deviation", &CellAggregate::dev_mean, &CellAggregate::dev_std},
            {"locked_payment", &CellAggregate::locked_mean,
             &CellAggregate::locked_std}};
        for (const Series& s : series) {
            std::ostringstream os;
            if (exp1) {
                os << "budget,threshold,strategy,mean,stddev\n";
                for (const CellAggregate& c : result.cells)
                    os << c.budget << ',' << fmt_ratio(c.threshold) << ','
                       << strategy_name(c.strategy) << ',' << fmt_ratio(c.*s.mean)
                       << ',' << fmt_ratio(c.*s.std) << '\n';
            } else {
                os << "budget,strategy,mean,stddev\n";
                for (const CellAggregate& c : result.cells)
                    os << c.budget << ',' << strategy_name(c.strategy) << ','
                       << fmt_ratio(c.*s.mean) << ',' << fmt_ratio(c.*s.std)
                       << '\n';
            }
            const std::string axis = exp1 ? "_vs_threshold" : "_vs_budget";
            detail::write_file(fs::path(dir) / (std::string(s.name) + axis +
                                                ".csv"),
                               os.str(), written);
        }
        {
            std::ostringstream os;
            if (exp1)
                os << "budget,threshold,strategy,gamma\n";
            else
                os << "budget,strategy,gamma\n";
            for (const CellAggregate& c : result.cells) {
                os << c.budget << ',';
                if (exp1) os << fmt_ratio(c.threshold) << ',';
                os << strategy_name(c.strategy) << ',' << fmt_ratio(c.gamma)
                   << '\n';
            }
            detail::write_file(fs::path(dir) / (exp1 ? "gamma_vs_threshold.csv"
                                                     : "gamma_vs_budget.csv"),
                               os.str(), written);
        }
        {
            std::ostringstream os;
            if (exp1)
                os << "budget,threshold,strategy,bin,percent\n";
            else
                os << "budget,strategy,bin,percent\n";
            for (const CellAggregate& c : result.cells) {
                for (std::size_t b = 0; b < 4; ++b) {
                    os << c.budget << ',';
                    if (exp1) os << fmt_ratio(c.threshold) << ',';
                    os << strategy_name(c.strategy) << ','
                       << detail::kBinLabels[b] << ','
                       << fmt_ratio(c.hist.percent[b]) << '\n';
                }
            }
            detail::write_file(fs::path(dir) / "pcr_histogram.csv", os.str(),
                               written);
        }
        return written;
    }

    if (format == ReportFormat::SvgCharts) {
        struct Series {
            const char* name;
            const char* y_label;
            double CellAggregate::* value;
        };
        const std::vector<Series> series{
            {"pcr", "mean PCR", &CellAggregate::pcr_mean},
            {"spcr", "mean SPCR", &CellAggregate::spcr_mean},
            {"spcr_deviation", "mean SPCR deviation", &CellAggregate::dev_mean},
            {"locked_payment", "locked payment [sat]",
             &CellAggregate::locked_mean},
            {"gamma", "gamma [sat]", &CellAggregate::gamma}};
        for (const Series& s : series) {
            std::vector<ChartSeries> lines;
            for (Satoshi b : budgets) {
                for (Strategy strat : strategies) {
                    ChartSeries line;
                    line.label = std::string(strategy_name(strat)) +
                                 " B=" + std::to_string(b);
                    if (exp1) {
                        for (double t : thresholds) {
                            line.xs.push_back(t);
                            line.ys.push_back(cell_at(b, t, strat).*s.value);
                        }
                    } else {
                        line.xs.push_back(static_cast<double>(b));
                        line.ys.push_back(cell_at(b, -1.0, strat).*s.value);
                    }
                    lines.push_back(std::move(line));
                }
            }
            if (!exp1) {
                // One line per strategy across the sweep.
                lines.clear();
                for (Strategy strat : strategies) {
                    ChartSeries line;
                    line.label = strategy_name(strat);
                    for (Satoshi b : budgets) {
                        line.xs.push_back(static_cast<double>(b));
                        line.ys.push_back(cell_at(b, -1.0, strat).*s.value);
                    }
                    lines.push_back(std::move(line));
                }
            }
            const std::string x_label = exp1 ? "SPCR threshold" : "budget [sat]";
            const std::string svg = line_chart_svg(
                std::string(s.name) + (exp1 ? " vs threshold" : " vs budget"),
                x_label, s.y_label, lines, /*log_x=*/!exp1);
            const std::string axis = exp1 ? "_vs_threshold" : "_vs_budget";
            detail::write_file(
                fs::path(dir) / (std::string(s.name) + axis + ".svg"), svg,
                written);
        }
        // Histograms: grouped bars, one file per budget (and threshold
        // for the threshold experiment).
        const std::vector<std::string> groups(detail::kBinLabels,
                                              detail::kBinLabels + 4);
        std::vector<std::string> strategy_names;
        for (Strategy s : strategies) strategy_names.push_back(strategy_name(s));
        if (exp1) {
            for (Satoshi b : budgets) {
                for (double t : thresholds) {
                    std::vector<std::vector<double>> values(
                        4, std::vector<double>(strategies.size(), 0.0));
                    for (std::size_t si = 0; si < strategies.size(); ++si) {
                        const CellAggregate& c = cell_at(b, t, strategies[si]);
                        for (std::size_t bin = 0; bin < 4; ++bin)
                            values[bin][si] = c.hist.percent[bin];
                    }
                    std::ostringstream name;
                    name << "pcr_histogram_b" << b << "_t" << fmt_ratio(t)
                         << ".svg";
                    detail::write_file(
                        fs::path(dir) / name.str(),
                        grouped_bar_svg("PCR distribution (B=" +
                                            std::to_string(b) +
                                            ", threshold=" + fmt_ratio(t) + ")",
                                        "PCR interval [%]", "paths [%]", groups,
                                        strategy_names, values),
                        written);
                }
            }
        } else {
            for (Satoshi b : budgets) {
                std::vector<std::vector<double>> values(
                    4, std::vector<double>(strategies.size(), 0.0));
                for (std::size_t si = 0; si < strategies.size(); ++si) {
                    const CellAggregate& c = cell_at(b, -1.0, strategies[si]);
                    for (std::size_t bin = 0; bin < 4; ++bin)
                        values[bin][si] = c.hist.percent[bin];
                }
                std::ostringstream name;
                name << "pcr_histogram_b" << b << ".svg";
                detail::write_file(
                    fs::path(dir) / name.str(),
                    grouped_bar_svg("PCR distribution (B=" + std::to_string(b) +
                                        ")",
                                    "PCR interval [%]", "paths [%]", groups,
                                    strategy_names, values),
                    written);
            }
        }
        return written;
    }

    // Summary text: per-strategy aggregates with gamma ranked ascending.
    std::ostringstream os;
    os << "experiment: " << result.experiment << '\n';
    os << "config_hash: " << result.config_hash << '\n';
    os << "iterations: " << result.iterations << "\n\n";
    for (Satoshi b : budgets) {
        os << "budget " << b << ":\n";
        std::vector<std::pair<double, std::string>> gamma_rank;
        for (Strategy strat : strategies) {
            double pcr = 0, dev = 0, locked = 0, gamma = 0;
            double pcr_sd = 0, dev_sd = 0, locked_sd = 0;
            int n = 0;
            for (const CellAggregate& c : result.cells) {
                if (c.budget != b || c.strategy != strat) continue;
                pcr += c.pcr_mean;
                dev += c.dev_mean;
                locked += c.locked_mean;
                gamma += c.gamma;
                pcr_sd += c.pcr_std;
                dev_sd += c.dev_std;
                locked_sd += c.locked_std;
                ++n;
            }
            if (n == 0) continue;
            const double inv = 1.0 / n;
            os << "  " << strategy_name(strat) << ": pcr " << fmt_ratio(pcr * inv)
               << " +- " << fmt_ratio(pcr_sd * inv) << ", spcr_dev "
               << fmt_ratio(dev * inv) << " +- " << fmt_ratio(dev_sd * inv)
               << ", locked " << fmt_ratio(locked * inv) << " +- "
               << fmt_ratio(locked_sd * inv) << ", gamma "
               << fmt_ratio(gamma * inv) << '\n';
            gamma_rank.emplace_back(gamma * inv, strategy_name(strat));
        }
        std::sort(gamma_rank.begin(), gamma_rank.end());
        os << "  gamma ranking (ascending):";
        for (const auto& [g, name] : gamma_rank) os << ' ' << name;
        os << "\n\n";
    }
    std::vector<std::string> out;
    detail::write_file(fs::path(dir) / "summary.txt", os.str(), out);
    return out;
}

}  // namespace pcnlab
