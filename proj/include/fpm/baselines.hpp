#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpm/diffusion.hpp"
#include "fpm/graph.hpp"
#include "fpm/rng.hpp"

namespace fpm {

/// Per-node scores with the nodes ordered by descending score, ties by id.
struct ScoreTable {
    std::vector<double> scores;
    std::vector<NodeId> order;

    static ScoreTable from_scores(std::vector<double> scores) {
        ScoreTable t;
        t.order.resize(scores.size());
        std::iota(t.order.begin(), t.order.end(), NodeId{0});
        std::stable_sort(t.order.begin(), t.order.end(), [&](NodeId a, NodeId b) { return scores[a] > scores[b]; });
        t.scores = std::move(scores);
        return t;
    }
};

/// Out-degree (the plain degree for undirected graphs).
inline ScoreTable degree_scores(const Graph& g) {
    std::vector<double> s(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) s[v] = static_cast<double>(g.out_degree(v));
    return ScoreTable::from_scores(std::move(s));
}

/// Power iteration with uniform teleport; dangling mass is spread uniformly.
/// Stops once the L1 change drops below tol.
inline ScoreTable pagerank(const Graph& g, double damping = 0.85, double tol = 1e-8, std::size_t max_iter = 200) {
    const std::size_t n = g.num_nodes();
    if (n == 0) return {};
    if (!(damping >= 0.0 && damping < 1.0)) throw std::invalid_argument("damping must lie in [0,1)");
    const double nd = static_cast<double>(n);
    std::vector<double> x(n, 1.0 / nd), y(n);
    for (std::size_t it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (NodeId u = 0; u < n; ++u)
            if (g.out_degree(u) == 0) dangling += x[u];
        double diff = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            double acc = 0.0;
            for (const auto& a : g.in(v)) acc += x[a.node] / static_cast<double>(g.out_degree(a.node));
            y[v] = (1.0 - damping) / nd + damping * (acc + dangling / nd);
            diff += std::abs(y[v] - x[v]);
        }
        x.swap(y);
        if (diff < tol) break;
    }
    double total = std::accumulate(x.begin(), x.end(), 0.0);
    for (auto& v : x) v /= total;
    return ScoreTable::from_scores(std::move(x));
}

/// One pass over the ranking, keeping every node that still fits the budget.
inline SeedSet greedy_by_rank(std::span<const NodeId> order, const NodeAttrs& attrs, double budget) {
    SeedSet s;
    for (NodeId v : order)
        if (fits_budget(s, v, attrs, budget)) s = s.with(v, attrs);
    return s;
}

inline SeedSet random_seeds(const Graph& g, const NodeAttrs& attrs, double budget, Rng& rng) {
    std::vector<NodeId> order(g.num_nodes());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    return greedy_by_rank(order, attrs, budget);
}

inline SeedSet high_degree_seeds(const Graph& g, const NodeAttrs& attrs, double budget) {
    return greedy_by_rank(degree_scores(g).order, attrs, budget);
}

inline SeedSet pagerank_seeds(const Graph& g, const NodeAttrs& attrs, double budget) {
    return greedy_by_rank(pagerank(g).order, attrs, budget);
}

/// Interleaves per-community rankings so that after every pick the seed set's
/// community shares are as close as possible (L1) to the population shares.
/// Equal distances go to the higher score, then the lower id. Nodes that no
/// longer fit are skipped for good, since the budget only shrinks.
inline SeedSet parity_by_score(const ScoreTable& table, const NodeAttrs& attrs, const CommunityPartition& parts,
                               double budget) {
    const std::size_t l = parts.count();
    const double n = static_cast<double>(attrs.size());
    std::vector<std::vector<NodeId>> ranking(l);
    for (NodeId v : table.order) ranking[parts.community_of(v)].push_back(v);
    std::vector<double> share(l);
    for (std::size_t i = 0; i < l; ++i) share[i] = static_cast<double>(parts.members(i).size()) / n;

    std::vector<std::size_t> cursor(l, 0), picked(l, 0);
    SeedSet s;
    constexpr double tie = 1e-12;
    for (;;) {
        std::size_t best = l;
        double best_dist = 0.0;
        const double total = static_cast<double>(s.size() + 1);
        for (std::size_t i = 0; i < l; ++i) {
            auto& c = cursor[i];
            while (c < ranking[i].size() && !fits_budget(s, ranking[i][c], attrs, budget)) ++c;
            if (c == ranking[i].size()) continue;
            double dist = 0.0;
            for (std::size_t j = 0; j < l; ++j)
                dist += std::abs(static_cast<double>(picked[j] + (j == i)) / total - share[j]);
            if (best == l || dist < best_dist - tie) {
                best = i;
                best_dist = dist;
            } else if (dist <= best_dist + tie) {
                NodeId a = ranking[i][c], b = ranking[best][cursor[best]];
                if (table.scores[a] > table.scores[b] || (table.scores[a] == table.scores[b] && a < b)) {
                    best = i;
                    best_dist = std::min(best_dist, dist);
                }
            }
        }
        if (best == l) break;
        s = s.with(ranking[best][cursor[best]], attrs);
        ++cursor[best];
        ++picked[best];
    }
    return s;
}

inline SeedSet parity_seeds(const Graph& g, const NodeAttrs& attrs, const CommunityPartition& parts, double budget) {
    return parity_by_score(degree_scores(g), attrs, parts, budget);
}

inline SeedSet fair_pagerank_seeds(const Graph& g, const NodeAttrs& attrs, const CommunityPartition& parts, double budget) {
    return parity_by_score(pagerank(g), attrs, parts, budget);
}

} // namespace fpm
