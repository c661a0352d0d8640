#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fpm/diffusion.hpp"
#include "fpm/graph.hpp"
#include "fpm/parallel.hpp"

namespace fpm {

struct FairnessConfig {
    double phi = 1.0;  // reward shaping weight
    double tau = 0.0;  // reported threshold only, never enforced

    void validate() const {
        if (!(phi >= 0.0) || !std::isfinite(phi)) throw std::invalid_argument("fairness weight must be >= 0");
        if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("fairness threshold must lie in [0,1]");
    }
};

struct MetricReport {
    double profit = 0.0;
    double benefit = 0.0;
    double cost = 0.0;
    std::vector<double> community_ratios;
    double fairness = 0.0;
    bool tau_satisfied = false;
};

inline double selection_cost(const SeedSet& s, const NodeAttrs& attrs) {
    double c = 0.0;
    for (NodeId v : s.nodes()) c += attrs.cost[v];
    return c;
}

inline double earned_benefit(const InfluencedSet& influenced, const NodeAttrs& attrs) {
    double b = 0.0;
    for (NodeId v = 0; v < influenced.universe(); ++v)
        if (influenced.contains(v)) b += attrs.benefit[v];
    return b;
}

/// Share of community i's total benefit realized by the influenced set.
inline double community_benefit_ratio(std::size_t i, const InfluencedSet& influenced, const NodeAttrs& attrs,
                                      const CommunityPartition& parts) {
    if (i >= parts.count()) throw std::out_of_range("community index out of range");
    double realized = 0.0;
    for (NodeId v : parts.members(i))
        if (influenced.contains(v)) realized += attrs.benefit[v];
    return std::clamp(realized / parts.total_benefit(i), 0.0, 1.0);
}

inline std::vector<double> community_benefit_ratios(const InfluencedSet& influenced, const NodeAttrs& attrs,
                                                    const CommunityPartition& parts) {
    std::vector<double> r(parts.count());
    for (std::size_t i = 0; i < parts.count(); ++i) r[i] = community_benefit_ratio(i, influenced, attrs, parts);
    return r;
}

/// Worst community benefit ratio.
inline double maximin_fairness(const InfluencedSet& influenced, const NodeAttrs& attrs, const CommunityPartition& parts) {
    if (parts.count() == 0) return 0.0;
    double f = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < parts.count(); ++i) f = std::min(f, community_benefit_ratio(i, influenced, attrs, parts));
    return f;
}

inline MetricReport make_report(const InfluencedSet& influenced, const SeedSet& s, const NodeAttrs& attrs,
                                const CommunityPartition& parts, double tau = 0.0) {
    MetricReport r;
    r.benefit = earned_benefit(influenced, attrs);
    r.cost = selection_cost(s, attrs);
    r.profit = r.benefit - r.cost;
    r.community_ratios = community_benefit_ratios(influenced, attrs, parts);
    r.fairness = r.community_ratios.empty() ? 0.0 : *std::min_element(r.community_ratios.begin(), r.community_ratios.end());
    r.tau_satisfied = r.fairness >= tau;
    return r;
}

/// Single-rollout profit plus phi times the fairness of that same rollout.
inline double shaped_reward(const Graph& g, const NodeAttrs& attrs, const CommunityPartition& parts, const SeedSet& s,
                            double phi, Rng& rng) {
    if (!(phi >= 0.0)) throw std::invalid_argument("fairness weight must be >= 0");
    auto influenced = simulate_ic(g, s, rng);
    double profit = earned_benefit(influenced, attrs) - selection_cost(s, attrs);
    return profit + phi * maximin_fairness(influenced, attrs, parts);
}

inline double marginal_reward(double reward, double previous) { return reward - previous; }

/// Exact E[profit] + phi * E[fairness] by live-edge enumeration (<= 20 edges).
inline double exact_shaped_objective(const Graph& g, const NodeAttrs& attrs, const CommunityPartition& parts,
                                     const SeedSet& s, double phi) {
    double benefit = 0.0, fairness = 0.0;
    for_each_live_edge_outcome(g, s, [&](const InfluencedSet& infl, double w) {
        benefit += w * earned_benefit(infl, attrs);
        fairness += w * maximin_fairness(infl, attrs, parts);
    });
    return benefit - s.cost() + phi * fairness;
}

struct EvaluationSummary {
    std::size_t rollouts = 0;
    double profit_mean = 0.0;
    double profit_std = 0.0;
    double benefit_mean = 0.0;
    double spread_mean = 0.0;
    double fairness_mean = 0.0;
    bool tau_satisfied = false;
};

/// Monte Carlo metrics over m rollouts with derived per-rollout streams. The
/// same seed gives the same rollout streams for any seed set, so different
/// selectors evaluated with one seed are compared on common random numbers.
inline EvaluationSummary evaluate_seed_set(const Graph& g, const NodeAttrs& attrs, const CommunityPartition& parts,
                                           const SeedSet& s, std::size_t m, std::uint64_t seed, double tau = 0.0) {
    if (m < 1) throw std::invalid_argument("need at least one rollout");
    std::vector<double> profit(m), benefit(m), spread(m), fairness(m);
    parallel_for(m, [&](std::size_t r) {
        auto rng = rollout_rng(seed, r);
        auto infl = simulate_ic(g, s, rng);
        benefit[r] = earned_benefit(infl, attrs);
        profit[r] = benefit[r] - s.cost();
        spread[r] = static_cast<double>(infl.count());
        fairness[r] = maximin_fairness(infl, attrs, parts);
    });
    EvaluationSummary e;
    e.rollouts = m;
    for (std::size_t r = 0; r < m; ++r) {
        e.profit_mean += profit[r];
        e.benefit_mean += benefit[r];
        e.spread_mean += spread[r];
        e.fairness_mean += fairness[r];
    }
    const auto md = static_cast<double>(m);
    e.profit_mean /= md;
    e.benefit_mean /= md;
    e.spread_mean /= md;
    e.fairness_mean /= md;
    if (m > 1) {
        double ss = 0.0;
        for (double p : profit) ss += (p - e.profit_mean) * (p - e.profit_mean);
        e.profit_std = std::sqrt(ss / (md - 1.0));
    }
    e.tau_satisfied = e.fairness_mean >= tau;
    return e;
}

} // namespace fpm
