#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpm/graph.hpp"
#include "fpm/parallel.hpp"
#include "fpm/rng.hpp"

namespace fpm {

/// Sorted, duplicate-free seed nodes with their cached total cost. The cost is
/// always summed in ascending node order.
class SeedSet {
public:
    SeedSet() = default;

    static SeedSet from_nodes(std::vector<NodeId> nodes, const NodeAttrs& attrs) {
        std::sort(nodes.begin(), nodes.end());
        if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
            throw std::invalid_argument("seed set contains duplicates");
        if (!nodes.empty() && nodes.back() >= attrs.size()) throw std::invalid_argument("seed id out of range");
        SeedSet s;
        for (NodeId v : nodes) s.cost_ += attrs.cost[v];
        s.nodes_ = std::move(nodes);
        return s;
    }

    SeedSet with(NodeId v, const NodeAttrs& attrs) const {
        if (v >= attrs.size()) throw std::invalid_argument("seed id out of range");
        if (contains(v)) throw std::invalid_argument("node already in seed set");
        SeedSet s = *this;
        s.nodes_.insert(std::lower_bound(s.nodes_.begin(), s.nodes_.end(), v), v);
        s.cost_ = 0.0;
        for (NodeId u : s.nodes_) s.cost_ += attrs.cost[u];
        return s;
    }

    std::span<const NodeId> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    double cost() const noexcept { return cost_; }
    bool contains(NodeId v) const { return std::binary_search(nodes_.begin(), nodes_.end(), v); }

    friend bool operator==(const SeedSet& a, const SeedSet& b) { return a.nodes_ == b.nodes_; }

private:
    std::vector<NodeId> nodes_;
    double cost_ = 0.0;
};

/// True when cost(s ∪ {v}), summed in canonical order, stays within budget.
inline bool fits_budget(const SeedSet& s, NodeId v, const NodeAttrs& attrs, double budget) {
    if (attrs.cost[v] > budget - s.cost()) return false;
    double total = 0.0;
    bool placed = false;
    for (NodeId u : s.nodes()) {
        if (!placed && v < u) {
            total += attrs.cost[v];
            placed = true;
        }
        total += attrs.cost[u];
    }
    if (!placed) total += attrs.cost[v];
    return total <= budget;
}

class InfluencedSet {
public:
    InfluencedSet() = default;
    explicit InfluencedSet(std::size_t n) : member_(n, 0) {}

    static InfluencedSet from_nodes(std::size_t n, std::span<const NodeId> nodes) {
        InfluencedSet s(n);
        for (NodeId v : nodes) s.insert(v);
        return s;
    }

    bool insert(NodeId v) {
        if (member_[v]) return false;
        member_[v] = 1;
        ++count_;
        return true;
    }
    bool contains(NodeId v) const { return member_[v] != 0; }
    std::size_t count() const noexcept { return count_; }
    std::size_t universe() const noexcept { return member_.size(); }

private:
    std::vector<char> member_;
    std::size_t count_ = 0;
};

/// One Independent Cascade rollout. Each round processes newly activated nodes
/// in ascending id and their out-arcs in adjacency order; every arc into a
/// still-inactive node is tried exactly once.
inline InfluencedSet simulate_ic(const Graph& g, const SeedSet& s, Rng& rng) {
    InfluencedSet active(g.num_nodes());
    std::vector<NodeId> frontier;
    for (NodeId v : s.nodes())
        if (active.insert(v)) frontier.push_back(v);
    std::vector<NodeId> next;
    while (!frontier.empty()) {
        next.clear();
        for (NodeId u : frontier)
            for (const auto& a : g.out(u))
                if (!active.contains(a.node) && uniform01(rng) < a.p) {
                    active.insert(a.node);
                    next.push_back(a.node);
                }
        std::sort(next.begin(), next.end());
        frontier.swap(next);
    }
    return active;
}

inline Rng rollout_rng(std::uint64_t seed, std::size_t rollout) {
    return Rng(derive_seed(seed, {stream::rollouts, rollout}));
}

struct SpreadEstimate {
    double mean_spread = 0.0;
    double mean_benefit = 0.0;
    std::vector<double> benefits;
};

/// m independent rollouts; rollout r draws from its own derived stream, so the
/// result does not depend on the thread count.
inline SpreadEstimate estimate_spread_and_benefit(const Graph& g, const NodeAttrs& attrs, const SeedSet& s,
                                                  std::size_t m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("need at least one rollout");
    std::vector<double> spread(m);
    SpreadEstimate est;
    est.benefits.resize(m);
    parallel_for(m, [&](std::size_t r) {
        auto rng = rollout_rng(seed, r);
        auto infl = simulate_ic(g, s, rng);
        double b = 0.0;
        for (NodeId v = 0; v < g.num_nodes(); ++v)
            if (infl.contains(v)) b += attrs.benefit[v];
        spread[r] = static_cast<double>(infl.count());
        est.benefits[r] = b;
    });
    for (std::size_t r = 0; r < m; ++r) {
        est.mean_spread += spread[r];
        est.mean_benefit += est.benefits[r];
    }
    est.mean_spread /= static_cast<double>(m);
    est.mean_benefit /= static_cast<double>(m);
    return est;
}

inline constexpr std::size_t max_enumerated_edges = 20;

/// Live-edge enumeration: calls fn(influenced, weight) for every subset of
/// live edges with nonzero probability. Undirected edges carry one coin each,
/// which is equivalent to IC because only the first attempt across an edge
/// can matter.
template <typename Fn>
void for_each_live_edge_outcome(const Graph& g, const SeedSet& s, Fn&& fn) {
    auto edges = g.edges();
    if (edges.size() > max_enumerated_edges)
        throw std::length_error("live-edge enumeration needs at most 20 edges");
    const std::size_t n = g.num_nodes();
    const std::uint64_t subsets = std::uint64_t{1} << edges.size();
    std::vector<NodeId> stack;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
        double w = 1.0;
        for (std::size_t e = 0; e < edges.size(); ++e) w *= (mask >> e & 1) ? edges[e].p : 1.0 - edges[e].p;
        if (w == 0.0) continue;
        InfluencedSet reached(n);
        stack.clear();
        for (NodeId v : s.nodes())
            if (reached.insert(v)) stack.push_back(v);
        while (!stack.empty()) {
            NodeId u = stack.back();
            stack.pop_back();
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if (!(mask >> e & 1)) continue;
                NodeId to;
                if (edges[e].u == u)
                    to = edges[e].v;
                else if (!g.directed() && edges[e].v == u)
                    to = edges[e].u;
                else
                    continue;
                if (reached.insert(to)) stack.push_back(to);
            }
        }
        fn(static_cast<const InfluencedSet&>(reached), w);
    }
}

inline double exact_expected_benefit(const Graph& g, const NodeAttrs& attrs, const SeedSet& s) {
    double total = 0.0;
    for_each_live_edge_outcome(g, s, [&](const InfluencedSet& infl, double w) {
        double b = 0.0;
        for (NodeId v = 0; v < g.num_nodes(); ++v)
            if (infl.contains(v)) b += attrs.benefit[v];
        total += w * b;
    });
    return total;
}

/// Exact E[benefit] - cost(S) for graphs with at most 20 edges.
inline double exact_expected_profit(const Graph& g, const NodeAttrs& attrs, const SeedSet& s) {
    if (g.num_edges() > max_enumerated_edges) throw std::length_error("live-edge enumeration needs at most 20 edges");
    if (s.empty()) return 0.0;
    return exact_expected_benefit(g, attrs, s) - s.cost();
}

} // namespace fpm
