#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcnlab/netgen.hpp"
#include "pcnlab/planner.hpp"

namespace pcnlab {

// Everything one batch run needs. A flat key=value config file with
// [section] headers can populate all of it; CLI flags override the file.
struct ExperimentConfig {
    TopologyConfig topology;
    SybilConfig sybil;

    // [attack]
    int l_max = 20;
    int max_paths = 100;
    double probe_noise = 0.0;
    bool reprobe = true;
    BudgetScope budget_scope = BudgetScope::PerAttacker;
    bool split_budget = true;  // divide each experiment budget across senders
    BlockHeight cltv_delta = 40;

    // [experiment]
    std::vector<Satoshi> budgets{75'000'000, 100'000'000};
    std::vector<double> threshold_grid{0.1, 0.2, 0.3, 0.4, 0.5,
                                       0.6, 0.7, 0.8, 0.9};
    std::vector<Satoshi> budget_sweep;  // filled by default_budget_sweep()
    int iterations = 200;
    std::vector<Strategy> strategies;  // empty: per-experiment default
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool calibrate = true;
    double target_mean = 6.0;
    int target_max = 8;
    int max_regen = 100;

    ExperimentConfig() { budget_sweep = default_budget_sweep(); }

    // 8 log-spaced points from 1e7 to 2e8 satoshi.
    static std::vector<Satoshi> default_budget_sweep() {
        std::vector<Satoshi> sweep;
        const double lo = 1e7, hi = 2e8;
        for (int i = 0; i < 8; ++i) {
            const double f = static_cast<double>(i) / 7.0;
            sweep.push_back(static_cast<Satoshi>(
                std::llround(lo * std::pow(hi / lo, f))));
        }
        return sweep;
    }

    void validate() const {
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (l_max < 1) throw ConfigError("l_max must be >= 1");
        if (max_paths < 1) throw ConfigError("max_paths must be >= 1");
        for (double t : threshold_grid)
            if (t < 0.0 || t > 1.0)
                throw ConfigError("thresholds must be in [0,1]");
        for (Satoshi b : budgets)
            if (b <= 0) throw ConfigError("budgets must be positive");
        for (Satoshi b : budget_sweep)
            if (b <= 0) throw ConfigError("budget_sweep must be positive");
        if (probe_noise < 0.0 || probe_noise >= 1.0)
            throw ConfigError("probe_noise must be in [0,1)");
        if (max_regen < 1) throw ConfigError("max_regen must be >= 1");
    }
};

namespace cfgdetail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("not a boolean: " + v);
}

inline Satoshi parse_sat(const std::string& v) {
    try {
        return static_cast<Satoshi>(std::stoll(v));
    } catch (const std::exception&) {
        throw ConfigError("not an integer: " + v);
    }
}

inline double parse_double(const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("not a number: " + v);
    }
}

}  // namespace cfgdetail

inline const char* graph_model_name(GraphModel m) {
    switch (m) {
        case GraphModel::PreferentialAttachment: return "preferential-attachment";
        case GraphModel::SmallWorld: return "small-world";
        case GraphModel::ErdosRenyi: return "erdos-renyi";
    }
    return "?";
}

inline GraphModel graph_model_from(const std::string& v) {
    if (v == "preferential-attachment") return GraphModel::PreferentialAttachment;
    if (v == "small-world") return GraphModel::SmallWorld;
    if (v == "erdos-renyi") return GraphModel::ErdosRenyi;
    throw ConfigError("unknown graph model: " + v);
}

inline const char* attachment_name(Attachment a) {
    switch (a) {
        case Attachment::Random: return "random";
        case Attachment::HighestDegree: return "highest-degree";
        case Attachment::HighestCapacity: return "highest-capacity";
    }
    return "?";
}

inline Attachment attachment_from(const std::string& v) {
    if (v == "random") return Attachment::Random;
    if (v == "highest-degree") return Attachment::HighestDegree;
    if (v == "highest-capacity") return Attachment::HighestCapacity;
    throw ConfigError("unknown attachment: " + v);
}

// Applies one key=value assignment; `section` scopes the key. Throws
// ConfigError on unknown keys so typos never pass silently.
inline void apply_config_entry(ExperimentConfig& cfg,
                               const std::string& section,
                               const std::string& key,
                               const std::string& value) {
    using namespace cfgdetail;
    auto is = [&](const char* s, const char* k) {
        return section == s && key == k;
    };
    if (is("topology", "nodes"))
        cfg.topology.honest_node_count = static_cast<int>(parse_sat(value));
    else if (is("topology", "model"))
        cfg.topology.graph_model = graph_model_from(value);
    else if (is("topology", "mean_capacity"))
        cfg.topology.mean_capacity = parse_sat(value);
    else if (is("topology", "capacity_distribution"))
        cfg.topology.capacity_distribution =
            value == "exponential" ? CapacityDistribution::Exponential
            : value == "uniform"
                ? CapacityDistribution::Uniform
                : throw ConfigError("unknown capacity distribution: " + value);
    else if (is("topology", "balance_split"))
        cfg.topology.balance_split =
            value == "uniform-random" ? BalanceSplit::UniformRandom
            : value == "even" ? BalanceSplit::Even
                              : throw ConfigError("unknown balance split: " +
                                                  value);
    else if (is("sybil", "pair_count"))
        cfg.sybil.pair_count = static_cast<int>(parse_sat(value));
    else if (is("sybil", "attachment"))
        cfg.sybil.attachment = attachment_from(value);
    else if (is("sybil", "channels_per_sybil"))
        cfg.sybil.channels_per_sybil = static_cast<int>(parse_sat(value));
    else if (is("sybil", "funding"))
        cfg.sybil.sybil_funding = parse_sat(value);
    else if (is("attack", "l_max"))
        cfg.l_max = static_cast<int>(parse_sat(value));
    else if (is("attack", "max_paths"))
        cfg.max_paths = static_cast<int>(parse_sat(value));
    else if (is("attack", "probe_noise"))
        cfg.probe_noise = parse_double(value);
    else if (is("attack", "reprobe"))
        cfg.reprobe = parse_bool(value);
    else if (is("attack", "budget_scope"))
        cfg.budget_scope =
            value == "per-attacker" ? BudgetScope::PerAttacker
            : value == "per-pair"
                ? BudgetScope::PerPair
                : throw ConfigError("unknown budget scope: " + value);
    else if (is("attack", "split_budget"))
        cfg.split_budget = parse_bool(value);
    else if (is("attack", "cltv_delta"))
        cfg.cltv_delta = parse_sat(value);
    else if (is("experiment", "budgets")) {
        cfg.budgets.clear();
        for (const auto& v : split(value, ',')) cfg.budgets.push_back(parse_sat(v));
    } else if (is("experiment", "thresholds")) {
        cfg.threshold_grid.clear();
        for (const auto& v : split(value, ','))
            cfg.threshold_grid.push_back(parse_double(v));
    } else if (is("experiment", "budget_sweep")) {
        cfg.budget_sweep.clear();
        for (const auto& v : split(value, ','))
            cfg.budget_sweep.push_back(parse_sat(v));
    } else if (is("experiment", "iterations"))
        cfg.iterations = static_cast<int>(parse_sat(value));
    else if (is("experiment", "strategies")) {
        cfg.strategies.clear();
        for (const auto& v : split(value, ',')) {
            const auto s = strategy_from_name(v);
            if (!s) throw ConfigError("unknown strategy: " + v);
            cfg.strategies.push_back(*s);
        }
    } else if (is("experiment", "seed"))
        cfg.seed = static_cast<std::uint64_t>(parse_sat(value));
    else if (is("experiment", "output_dir"))
        cfg.output_dir = value;
    else if (is("experiment", "calibrate"))
        cfg.calibrate = parse_bool(value);
    else if (is("experiment", "target_mean"))
        cfg.target_mean = parse_double(value);
    else if (is("experiment", "target_max"))
        cfg.target_max = static_cast<int>(parse_sat(value));
    else if (is("experiment", "max_regen"))
        cfg.max_regen = static_cast<int>(parse_sat(value));
    else
        throw ConfigError("unknown config key: [" + section + "] " + key);
}

inline void load_config_text(ExperimentConfig& cfg, const std::string& text) {
    using namespace cfgdetail;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("bad section at line " +
                                  std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value at line " +
                              std::to_string(lineno));
        apply_config_entry(cfg, section, trim(line.substr(0, eq)),
                           trim(line.substr(eq + 1)));
    }
}

inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_config_text(cfg, ss.str());
}

// Canonical serialization: parsing it back reproduces the config, and it
// is the byte stream the config hash commits to.
inline std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "[topology]\n";
    os << "nodes = " << cfg.topology.honest_node_count << '\n';
    os << "model = " << graph_model_name(cfg.topology.graph_model) << '\n';
    os << "mean_capacity = " << cfg.topology.mean_capacity << '\n';
    os << "capacity_distribution = "
       << (cfg.topology.capacity_distribution ==
                   CapacityDistribution::Exponential
               ? "exponential"
               : "uniform")
       << '\n';
    os << "balance_split = "
       << (cfg.topology.balance_split == BalanceSplit::UniformRandom
               ? "uniform-random"
               : "even")
       << '\n';
    os << "\n[sybil]\n";
    os << "pair_count = " << cfg.sybil.pair_count << '\n';
    os << "attachment = " << attachment_name(cfg.sybil.attachment) << '\n';
    os << "channels_per_sybil = " << cfg.sybil.channels_per_sybil << '\n';
    os << "funding = " << cfg.sybil.sybil_funding << '\n';
    os << "\n[attack]\n";
    os << "l_max = " << cfg.l_max << '\n';
    os << "max_paths = " << cfg.max_paths << '\n';
    os << "probe_noise = " << fmt_ratio(cfg.probe_noise) << '\n';
    os << "reprobe = " << (cfg.reprobe ? "true" : "false") << '\n';
    os << "budget_scope = "
       << (cfg.budget_scope == BudgetScope::PerAttacker ? "per-attacker"
                                                        : "per-pair")
       << '\n';
    os << "split_budget = " << (cfg.split_budget ? "true" : "false") << '\n';
    os << "cltv_delta = " << cfg.cltv_delta << '\n';
    os << "\n[experiment]\n";
    auto join_sat = [&](const std::vector<Satoshi>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    os << "budgets = " << join_sat(cfg.budgets) << '\n';
    std::string thr;
    for (std::size_t i = 0; i < cfg.threshold_grid.size(); ++i)
        thr += (i ? "," : "") + fmt_ratio(cfg.threshold_grid[i]);
    os << "thresholds = " << thr << '\n';
    os << "budget_sweep = " << join_sat(cfg.budget_sweep) << '\n';
    os << "iterations = " << cfg.iterations << '\n';
    std::string strat;
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        strat += std::string(i ? "," : "") + strategy_name(cfg.strategies[i]);
    os << "strategies = " << strat << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "output_dir = " << cfg.output_dir << '\n';
    os << "calibrate = " << (cfg.calibrate ? "true" : "false") << '\n';
    os << "target_mean = " << fmt_ratio(cfg.target_mean) << '\n';
    os << "target_max = " << cfg.target_max << '\n';
    os << "max_regen = " << cfg.max_regen << '\n';
    return os.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_text(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace pcnlab
