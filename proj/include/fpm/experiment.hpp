#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpm/baselines.hpp"
#include "fpm/error.hpp"
#include "fpm/graph.hpp"
#include "fpm/metrics.hpp"
#include "fpm/qnet.hpp"
#include "fpm/trainer.hpp"

namespace fpm {

inline constexpr const char* version_string = "0.1.0";

enum class Algorithm { Rl4fpm, Random, HighDegree, PageRank, Parity, FairPageRank };

inline constexpr Algorithm all_algorithms[] = {Algorithm::Rl4fpm,   Algorithm::Random, Algorithm::HighDegree,
                                               Algorithm::PageRank, Algorithm::Parity, Algorithm::FairPageRank};

inline std::string to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Rl4fpm: return "rl4fpm";
    case Algorithm::Random: return "random";
    case Algorithm::HighDegree: return "high_degree";
    case Algorithm::PageRank: return "pagerank";
    case Algorithm::Parity: return "parity";
    case Algorithm::FairPageRank: return "fair_pagerank";
    }
    return "unknown";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& name) {
    for (auto a : all_algorithms)
        if (to_string(a) == name) return a;
    return std::nullopt;
}

struct ExperimentConfig {
    std::vector<double> budgets{500, 1000, 1500, 2000, 2500, 3000};
    std::size_t m = 1000;
    std::vector<Algorithm> algorithms{std::begin(all_algorithms), std::end(all_algorithms)};
    double tau = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (budgets.empty()) throw std::invalid_argument("no budgets given");
        for (std::size_t i = 0; i < budgets.size(); ++i)
            if (!(budgets[i] > 0.0) || (i > 0 && !(budgets[i] > budgets[i - 1])))
                throw std::invalid_argument("budgets must be positive and ascending");
        if (m < 1) throw std::invalid_argument("need at least one Monte Carlo rollout");
        if (algorithms.empty()) throw std::invalid_argument("no algorithms given");
        if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0,1]");
    }
};

struct ExperimentResult {
    std::string algorithm;
    double budget = 0.0;
    std::size_t instance = 0;
    double profit_mean = 0.0;
    double profit_std = 0.0;
    double fairness_mean = 0.0;
    bool tau_ok = false;
    std::size_t seed_size = 0;
    double seed_cost = 0.0;
    double seconds = 0.0;
};

inline SeedSet select_seeds(Algorithm a, const Instance& inst, double budget, const PolicyModel* model, Rng& rng) {
    switch (a) {
    case Algorithm::Rl4fpm:
        if (!model) throw std::invalid_argument("rl4fpm needs a trained model");
        return infer_seed_set(*model, inst, budget);
    case Algorithm::Random: return random_seeds(inst.graph, inst.attrs, budget, rng);
    case Algorithm::HighDegree: return high_degree_seeds(inst.graph, inst.attrs, budget);
    case Algorithm::PageRank: return pagerank_seeds(inst.graph, inst.attrs, budget);
    case Algorithm::Parity: return parity_seeds(inst.graph, inst.attrs, inst.communities, budget);
    case Algorithm::FairPageRank: return fair_pagerank_seeds(inst.graph, inst.attrs, inst.communities, budget);
    }
    throw std::logic_error("unhandled algorithm");
}

/// Every (algorithm, budget, test instance). Rollout streams depend only on
/// (seed, instance, budget index), so all algorithms share them. Timing covers
/// seed selection only.
inline std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg, const std::vector<Instance>& test,
                                                    const PolicyModel* model) {
    cfg.validate();
    std::vector<ExperimentResult> out;
    for (const auto& inst : test) {
        for (std::size_t bi = 0; bi < cfg.budgets.size(); ++bi) {
            const double budget = cfg.budgets[bi];
            const std::uint64_t eval_seed = derive_seed(cfg.seed, {stream::evaluation, inst.id, bi});
            for (auto a : cfg.algorithms) {
                Rng rng(derive_seed(cfg.seed, {stream::baseline, static_cast<std::uint64_t>(a), inst.id, bi}));
                auto t0 = std::chrono::steady_clock::now();
                SeedSet s = select_seeds(a, inst, budget, model, rng);
                auto t1 = std::chrono::steady_clock::now();
                if (s.cost() > budget) throw std::logic_error(to_string(a) + " exceeded the budget");
                auto eval = evaluate_seed_set(inst.graph, inst.attrs, inst.communities, s, cfg.m, eval_seed, cfg.tau);

                ExperimentResult r;
                r.algorithm = to_string(a);
                r.budget = budget;
                r.instance = inst.id;
                r.profit_mean = eval.profit_mean;
                r.profit_std = eval.profit_std;
                r.fairness_mean = eval.fairness_mean;
                r.tau_ok = eval.tau_satisfied;
                r.seed_size = s.size();
                r.seed_cost = s.cost();
                r.seconds = std::chrono::duration<double>(t1 - t0).count();
                out.push_back(std::move(r));
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ExperimentResult& a, const ExperimentResult& b) {
        return std::tie(a.algorithm, a.budget, a.instance) < std::tie(b.algorithm, b.budget, b.instance);
    });
    return out;
}

inline const char* results_header =
    "algorithm,budget,instance,profit_mean,profit_std,fairness_mean,tau_ok,seed_size,seed_cost,seconds";

inline void write_results_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
    using detail::format_double;
    os << results_header << '\n';
    for (const auto& r : results)
        os << r.algorithm << ',' << format_double(r.budget) << ',' << r.instance << ',' << format_double(r.profit_mean)
           << ',' << format_double(r.profit_std) << ',' << format_double(r.fairness_mean) << ',' << (r.tau_ok ? 1 : 0)
           << ',' << r.seed_size << ',' << format_double(r.seed_cost) << ',' << format_double(r.seconds) << '\n';
}

/// Means over instances per (algorithm, budget).
inline void write_summary_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
    using detail::format_double;
    struct Acc {
        std::size_t n = 0;
        double profit = 0, profit_std = 0, fairness = 0, tau_ok = 0, size = 0, cost = 0, seconds = 0;
    };
    std::map<std::pair<std::string, double>, Acc> groups;
    for (const auto& r : results) {
        auto& a = groups[{r.algorithm, r.budget}];
        ++a.n;
        a.profit += r.profit_mean;
        a.profit_std += r.profit_std;
        a.fairness += r.fairness_mean;
        a.tau_ok += r.tau_ok ? 1.0 : 0.0;
        a.size += static_cast<double>(r.seed_size);
        a.cost += r.seed_cost;
        a.seconds += r.seconds;
    }
    os << "algorithm,budget,instances,profit_mean,profit_std_mean,fairness_mean,tau_ok_fraction,seed_size_mean,"
          "seed_cost_mean,seconds_mean\n";
    for (const auto& [key, a] : groups) {
        double n = static_cast<double>(a.n);
        os << key.first << ',' << format_double(key.second) << ',' << a.n << ',' << format_double(a.profit / n) << ','
           << format_double(a.profit_std / n) << ',' << format_double(a.fairness / n) << ','
           << format_double(a.tau_ok / n) << ',' << format_double(a.size / n) << ',' << format_double(a.cost / n) << ','
           << format_double(a.seconds / n) << '\n';
    }
}

/// Writes results.csv, summary.csv, timing.csv and run_meta.json into dir.
/// With `zero_seconds` the CSV tables carry 0 in place of wall time so that
/// reruns are byte-identical; timing.csv always holds the measured values.
inline void emit_report(const std::vector<ExperimentResult>& measured, const std::filesystem::path& dir,
                        const nlohmann::json& meta, bool zero_seconds = false) {
    auto results = measured;
    if (zero_seconds)
        for (auto& r : results) r.seconds = 0.0;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os) throw DataError("cannot write '" + (dir / name).string() + "'");
        return os;
    };
    {
        auto os = open("results.csv");
        write_results_csv(os, results);
    }
    {
        auto os = open("summary.csv");
        write_summary_csv(os, results);
    }
    {
        auto os = open("timing.csv");
        os << "algorithm,budget,instance,seconds\n";
        for (const auto& r : measured)
            os << r.algorithm << ',' << detail::format_double(r.budget) << ',' << r.instance << ','
               << detail::format_double(r.seconds) << '\n';
    }
    {
        auto os = open("run_meta.json");
        nlohmann::json m = meta;
        m["version"] = version_string;
        m["excluded_baselines"] = {"crosswalk"};
        os << m.dump(2) << '\n';
    }
}

} // namespace fpm
