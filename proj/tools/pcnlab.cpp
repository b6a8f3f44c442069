// pcnlab: payment-channel-network congestion-attack laboratory.
//
// Subcommands:
//   gen     emit a seeded topology as JSON
//   attack  run a single attack round and print its metrics report
//   exp1    threshold-grid experiment (minpay vs. baselines)
//   exp2    budget-sweep experiment (spcr-max vs. baselines)
//   report  re-render a saved results.json
//
// Every configuration key can come from a config file (--config); flags
// given on the command line override the file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "pcnlab/config.hpp"
#include "pcnlab/harness.hpp"
#include "pcnlab/htlc.hpp"

namespace fs = std::filesystem;
using namespace pcnlab;

namespace {

struct CommonArgs {
    std::string config_path;
    // (section, key, value) assignments in command-line order.
    std::vector<std::tuple<std::string, std::string, std::string>> overrides;

    ExperimentConfig build() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& [section, key, value] : overrides)
            apply_config_entry(cfg, section, key, value);
        cfg.validate();
        return cfg;
    }
};

void add_config_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "config file (flat key=value sections)");
    struct FlagSpec {
        const char* flag;
        const char* section;
        const char* key;
        const char* desc;
    };
    static const FlagSpec kFlags[] = {
        {"--nodes", "topology", "nodes", "honest node count"},
        {"--model", "topology", "model",
         "preferential-attachment|small-world|erdos-renyi"},
        {"--mean-capacity", "topology", "mean_capacity",
         "mean channel capacity [sat]"},
        {"--capacity-distribution", "topology", "capacity_distribution",
         "exponential|uniform"},
        {"--balance-split", "topology", "balance_split",
         "uniform-random|even"},
        {"--pairs", "sybil", "pair_count", "attacker pair count"},
        {"--attachment", "sybil", "attachment",
         "random|highest-degree|highest-capacity"},
        {"--channels-per-sybil", "sybil", "channels_per_sybil",
         "channels opened per sybil"},
        {"--funding", "sybil", "funding", "sybil channel funding [sat]"},
        {"--l-max", "attack", "l_max", "protocol path length cap"},
        {"--max-paths", "attack", "max_paths", "path cap per ordered pair"},
        {"--probe-noise", "attack", "probe_noise",
         "probe under-estimation fraction in [0,1)"},
        {"--reprobe", "attack", "reprobe",
         "re-probe before each attacker (true|false)"},
        {"--budget-scope", "attack", "budget_scope", "per-attacker|per-pair"},
        {"--split-budget", "attack", "split_budget",
         "divide budgets across attackers (true|false)"},
        {"--cltv-delta", "attack", "cltv_delta", "per-hop expiry margin"},
        {"--budgets", "experiment", "budgets", "comma list of budgets [sat]"},
        {"--thresholds", "experiment", "thresholds",
         "comma list of SPCR thresholds"},
        {"--budget-sweep", "experiment", "budget_sweep",
         "comma list of sweep budgets [sat]"},
        {"--iterations", "experiment", "iterations", "iterations per cell"},
        {"--strategies", "experiment", "strategies",
         "comma list: minpay,spcr-max,random,general"},
        {"--seed", "experiment", "seed", "root RNG seed"},
        {"--output-dir", "experiment", "output_dir", "output directory"},
        {"--calibrate", "experiment", "calibrate",
         "enforce path-length targets (true|false)"},
        {"--target-mean", "experiment", "target_mean",
         "target mean attacker path length"},
        {"--target-max", "experiment", "target_max",
         "target max attacker path length"},
        {"--max-regen", "experiment", "max_regen",
         "topology regeneration attempts"},
    };
    for (const FlagSpec& f : kFlags) {
        cmd->add_option_function<std::string>(
            f.flag,
            [&args, section = std::string(f.section),
             key = std::string(f.key)](const std::string& value) {
                args.overrides.emplace_back(section, key, value);
            },
            f.desc);
    }
}

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

int cmd_gen(const CommonArgs& args, const std::string& out_path) {
    const ExperimentConfig cfg = args.build();
    const PcnGraph g = generate_topology(cfg.topology);
    write_or_print(out_path, g.to_json().dump(2) + "\n");
    return 0;
}

int cmd_attack(const CommonArgs& args, const std::string& graph_path,
               const std::string& strategy_name_arg, Satoshi budget,
               double threshold, const std::string& metrics_out,
               const std::string& plans_out, const std::string& paths_out,
               const std::string& htlc_log_out,
               const std::string& summary_out) {
    const ExperimentConfig cfg = args.build();
    const auto strategy = strategy_from_name(strategy_name_arg);
    if (!strategy) throw ConfigError("unknown strategy: " + strategy_name_arg);

    PcnGraph g;
    std::vector<AttackerPair> pairs;
    if (!graph_path.empty()) {
        std::ifstream in(graph_path);
        if (!in) throw IoError("cannot open " + graph_path);
        nlohmann::json doc;
        in >> doc;
        g = PcnGraph::from_json(doc);
        Rng sybil_rng(derive_seed(cfg.seed, stream::kSybil));
        pairs = attach_sybils(g, cfg.sybil, sybil_rng);
    } else {
        const auto net = detail::build_network(cfg, 0);
        g = net.graph;
        pairs = net.pairs;
    }

    if (!paths_out.empty()) {
        // Export the candidate path set as probed on the pre-attack graph.
        std::vector<AttackerPair> all_pairs;
        for (const AttackerPair& p : pairs)
            for (const AttackerPair& q : pairs)
                if (p.sender != q.receiver)
                    all_pairs.push_back({p.sender, q.receiver});
        const PathSet set = collect_path_set(g, all_pairs, cfg.l_max,
                                             cfg.max_paths);
        std::ostringstream os;
        path_set_to_csv(set, os);
        write_or_print(paths_out, os.str());
    }

    RoundOptions opt;
    opt.l_max = cfg.l_max;
    opt.max_paths = cfg.max_paths;
    opt.probe_noise = cfg.probe_noise;
    opt.reprobe = cfg.reprobe;
    opt.budget_scope = cfg.budget_scope;
    opt.rng_seed = derive_seed(cfg.seed, stream::kRandomPlan);

    const auto divisor = static_cast<Satoshi>(
        cfg.split_budget && !pairs.empty() ? pairs.size() : 1);
    PcnGraph planning = g;
    std::optional<double> thr;
    if (*strategy == Strategy::MinPay) thr = threshold;
    const auto plans = run_attack_round(planning, pairs, *strategy,
                                        {budget / divisor}, thr, opt);

    // Replay the applied allocations as real HTLCs on the live graph.
    HtlcLog log;
    std::vector<Htlc> htlcs;
    HtlcOptions hopt;
    hopt.cltv_delta = cfg.cltv_delta;
    const BlockHeight expiry = g.block_height() + cfg.cltv_delta + 1;
    for (const AttackPlan& plan : plans) {
        for (const PathAllocation& a : plan.allocations) {
            if (a.applied_alpha <= 0) continue;
            bool dusty = false;
            for (std::size_t h = 0; h + 1 < a.path.hops.size(); ++h)
                dusty |= a.applied_alpha <
                         g.channel(a.path.hops[h], a.path.hops[h + 1])
                             .htlc_minimum;
            if (dusty) continue;
            auto batch =
                lock_path(g, a.path, a.applied_alpha, expiry, {}, hopt, &log);
            htlcs.insert(htlcs.end(), batch.begin(), batch.end());
        }
    }

    std::vector<AllocationView> views;
    std::vector<std::string> pair_ids;
    std::vector<int> path_indices;
    for (const AttackPlan& plan : plans) {
        for (const PathAllocation& a : plan.allocations) {
            AllocationView v;
            v.alpha = a.applied_alpha;
            v.per_channel_balances = {a.bottleneck > 0 ? a.bottleneck : 1};
            v.length = a.path.length;
            v.l_max = cfg.l_max;
            views.push_back(std::move(v));
            pair_ids.push_back(a.pair_id);
            path_indices.push_back(a.path_index);
        }
    }
    const MetricsReport report =
        build_metrics_report(views, pair_ids, path_indices, threshold);

    const std::string run_id = config_hash(cfg);
    {
        std::ostringstream os;
        metrics_report_to_csv(report, run_id, strategy_name_arg, threshold,
                              budget, os);
        write_or_print(metrics_out, os.str());
    }
    if (!summary_out.empty()) {
        std::ostringstream os;
        metrics_summary_to_csv(report, run_id, strategy_name_arg, threshold,
                               budget, os);
        write_or_print(summary_out, os.str());
    }
    if (!plans_out.empty()) {
        std::ostringstream os;
        plans_to_csv(plans, os);
        write_or_print(plans_out, os.str());
    }
    if (!htlc_log_out.empty()) {
        std::ostringstream os;
        log.to_csv(os);
        write_or_print(htlc_log_out, os.str());
    }
    return 0;
}

int run_experiment(const CommonArgs& args, bool second) {
    const ExperimentConfig cfg = args.build();
    const RunResult result = second ? run_experiment_2(cfg)
                                    : run_experiment_1(cfg);
    fs::create_directories(cfg.output_dir);
    {
        std::ofstream out(fs::path(cfg.output_dir) / "results.json",
                          std::ios::binary);
        if (!out) throw IoError("cannot write results.json");
        out << run_result_to_json(result).dump(2) << '\n';
    }
    for (ReportFormat f : {ReportFormat::Csv, ReportFormat::SvgCharts,
                           ReportFormat::SummaryText})
        render_report(result, f, cfg.output_dir);
    std::ifstream summary(fs::path(cfg.output_dir) / "summary.txt");
    std::cout << summary.rdbuf();
    std::cout << "results written to " << cfg.output_dir << '\n';
    return 0;
}

int cmd_report(const std::string& results_path, const std::string& format,
               std::string out_dir) {
    std::ifstream in(results_path);
    if (!in) throw IoError("cannot open " + results_path);
    nlohmann::json doc;
    in >> doc;
    const RunResult result = run_result_from_json(doc);
    if (out_dir.empty())
        out_dir = fs::path(results_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
    std::vector<std::string> written;
    auto render = [&](ReportFormat f) {
        auto files = render_report(result, f, out_dir);
        written.insert(written.end(), files.begin(), files.end());
    };
    if (format == "csv")
        render(ReportFormat::Csv);
    else if (format == "svg-charts")
        render(ReportFormat::SvgCharts);
    else if (format == "summary-text")
        render(ReportFormat::SummaryText);
    else if (format == "all") {
        render(ReportFormat::Csv);
        render(ReportFormat::SvgCharts);
        render(ReportFormat::SummaryText);
    } else {
        throw ConfigError("unknown format: " + format);
    }
    for (const std::string& f : written) std::cout << f << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"payment-channel-network congestion attack laboratory"};
    app.require_subcommand(1);

    CommonArgs gen_args;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen", "emit a topology as JSON");
    add_config_flags(gen, gen_args);
    gen->add_option("--out", gen_out, "output file (default: stdout)");

    CommonArgs attack_args;
    std::string attack_graph, attack_strategy = "minpay";
    Satoshi attack_budget = 75'000'000;
    double attack_threshold = 0.3;
    std::string metrics_out, plans_out, paths_out, htlc_log_out, summary_out;
    CLI::App* attack =
        app.add_subcommand("attack", "run one attack round and report");
    add_config_flags(attack, attack_args);
    attack->add_option("--graph", attack_graph,
                       "topology JSON to attack (default: generate)");
    attack->add_option("--strategy", attack_strategy,
                       "minpay|spcr-max|random|general");
    attack->add_option("--budget", attack_budget, "total attack budget [sat]");
    attack->add_option("--threshold", attack_threshold,
                       "SPCR threshold (minpay)");
    attack->add_option("--metrics-out", metrics_out,
                       "metrics CSV output (default: stdout)");
    attack->add_option("--plans-out", plans_out, "attack plan CSV output");
    attack->add_option("--paths-out", paths_out, "candidate path CSV output");
    attack->add_option("--htlc-log-out", htlc_log_out, "HTLC event CSV output");
    attack->add_option("--summary-out", summary_out, "totals CSV output");

    CommonArgs exp1_args;
    CLI::App* exp1 = app.add_subcommand(
        "exp1", "threshold-grid experiment (minpay vs baselines)");
    add_config_flags(exp1, exp1_args);

    CommonArgs exp2_args;
    CLI::App* exp2 = app.add_subcommand(
        "exp2", "budget-sweep experiment (spcr-max vs baselines)");
    add_config_flags(exp2, exp2_args);

    std::string report_results = "results.json", report_format = "all",
                report_out;
    CLI::App* report =
        app.add_subcommand("report", "re-render a saved results.json");
    report->add_option("--results", report_results, "results.json path");
    report->add_option("--format", report_format,
                       "csv|svg-charts|summary-text|all");
    report->add_option("--out-dir", report_out,
                       "output directory (default: results dir)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_args, gen_out);
        if (attack->parsed())
            return cmd_attack(attack_args, attack_graph, attack_strategy,
                              attack_budget, attack_threshold, metrics_out,
                              plans_out, paths_out, htlc_log_out, summary_out);
        if (exp1->parsed()) return run_experiment(exp1_args, false);
        if (exp2->parsed()) return run_experiment(exp2_args, true);
        if (report->parsed())
            return cmd_report(report_results, report_format, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
