#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fpm/error.hpp"
#include "fpm/rng.hpp"

namespace fpm {

using NodeId = std::uint32_t;

struct Arc {
    NodeId node;
    double p;
};

struct WeightedEdge {
    NodeId u;
    NodeId v;
    double p;
};

/// Immutable (un)directed graph with per-edge influence probabilities, stored
/// as CSR. Undirected edges are stored in both directions with the same
/// probability. Neighbor lists are sorted by node id.
class Graph {
public:
    Graph() = default;

    /// Self-loops are dropped; duplicates collapse onto the first occurrence.
    static Graph from_edges(std::size_t n, bool directed, std::span<const WeightedEdge> edges,
                            std::vector<std::int64_t> original_ids = {}) {
        if (!original_ids.empty() && original_ids.size() != n)
            throw std::invalid_argument("original id map size does not match node count");
        std::vector<WeightedEdge> arcs;
        arcs.reserve(directed ? edges.size() : 2 * edges.size());
        for (const auto& e : edges) {
            if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
            if (!(e.p > 0.0 && e.p <= 1.0)) throw std::invalid_argument("edge probability must lie in (0,1]");
            if (e.u == e.v) continue;
            arcs.push_back(e);
            if (!directed) arcs.push_back({e.v, e.u, e.p});
        }
        std::stable_sort(arcs.begin(), arcs.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
            return a.u != b.u ? a.u < b.u : a.v < b.v;
        });
        arcs.erase(std::unique(arcs.begin(), arcs.end(),
                               [](const WeightedEdge& a, const WeightedEdge& b) { return a.u == b.u && a.v == b.v; }),
                   arcs.end());

        Graph g;
        g.n_ = n;
        g.directed_ = directed;
        g.out_offsets_.assign(n + 1, 0);
        g.out_arcs_.reserve(arcs.size());
        for (const auto& a : arcs) {
            ++g.out_offsets_[a.u + 1];
            g.out_arcs_.push_back({a.v, a.p});
        }
        std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());

        if (directed) {
            g.in_offsets_.assign(n + 1, 0);
            for (const auto& a : arcs) ++g.in_offsets_[a.v + 1];
            std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());
            g.in_arcs_.resize(arcs.size());
            std::vector<std::size_t> cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
            // arcs are sorted by source, so each in-list comes out sorted by source too
            for (const auto& a : arcs) g.in_arcs_[cursor[a.v]++] = {a.u, a.p};
        }

        if (original_ids.empty()) {
            original_ids.resize(n);
            std::iota(original_ids.begin(), original_ids.end(), std::int64_t{0});
        }
        g.original_ids_ = std::move(original_ids);
        return g;
    }

    std::size_t num_nodes() const noexcept { return n_; }
    std::size_t num_arcs() const noexcept { return out_arcs_.size(); }
    /// Undirected edges are counted once.
    std::size_t num_edges() const noexcept { return directed_ ? out_arcs_.size() : out_arcs_.size() / 2; }
    bool directed() const noexcept { return directed_; }

    std::span<const Arc> out(NodeId v) const noexcept {
        return {out_arcs_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
    }
    /// In-neighbors; for undirected graphs this is the full neighborhood.
    std::span<const Arc> in(NodeId v) const noexcept {
        if (!directed_) return out(v);
        return {in_arcs_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
    }
    std::size_t out_degree(NodeId v) const noexcept { return out_offsets_[v + 1] - out_offsets_[v]; }
    std::size_t in_degree(NodeId v) const noexcept { return in(v).size(); }

    std::optional<double> probability(NodeId u, NodeId v) const {
        auto arcs = out(u);
        auto it = std::lower_bound(arcs.begin(), arcs.end(), v, [](const Arc& a, NodeId x) { return a.node < x; });
        if (it == arcs.end() || it->node != v) return std::nullopt;
        return it->p;
    }

    std::int64_t original_id(NodeId v) const { return original_ids_[v]; }
    const std::vector<std::int64_t>& original_ids() const noexcept { return original_ids_; }

    /// Every edge once: all arcs for directed graphs, u < v for undirected ones.
    std::vector<WeightedEdge> edges() const {
        std::vector<WeightedEdge> result;
        result.reserve(num_edges());
        for (NodeId u = 0; u < n_; ++u)
            for (const auto& a : out(u))
                if (directed_ || u < a.node) result.push_back({u, a.node, a.p});
        return result;
    }

private:
    std::size_t n_ = 0;
    bool directed_ = false;
    std::vector<std::size_t> out_offsets_{0};
    std::vector<Arc> out_arcs_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Arc> in_arcs_;
    std::vector<std::int64_t> original_ids_;
};

struct Range {
    double lo;
    double hi;
};

struct NodeAttrs {
    std::vector<double> cost;
    std::vector<double> benefit;

    std::size_t size() const noexcept { return cost.size(); }
    double min_cost() const { return cost.empty() ? 0.0 : *std::min_element(cost.begin(), cost.end()); }
    double total_benefit() const { return std::accumulate(benefit.begin(), benefit.end(), 0.0); }

    void validate(std::size_t n) const {
        if (cost.size() != n || benefit.size() != n) throw std::invalid_argument("node attributes do not cover the graph");
        for (std::size_t v = 0; v < n; ++v)
            if (!(cost[v] > 0.0) || !(benefit[v] > 0.0) || !std::isfinite(cost[v]) || !std::isfinite(benefit[v]))
                throw std::invalid_argument("node cost and benefit must be positive and finite");
    }
};

/// Disjoint cover of V by communities 0..count-1, each nonempty.
class CommunityPartition {
public:
    CommunityPartition() = default;

    static CommunityPartition from_labels(std::vector<std::uint32_t> labels, const NodeAttrs& attrs) {
        if (labels.size() != attrs.size()) throw std::invalid_argument("community labels do not cover the graph");
        CommunityPartition cp;
        std::uint32_t count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        cp.members_.resize(count);
        cp.total_benefit_.assign(count, 0.0);
        for (NodeId v = 0; v < labels.size(); ++v) {
            cp.members_[labels[v]].push_back(v);
            cp.total_benefit_[labels[v]] += attrs.benefit[v];
        }
        for (std::uint32_t i = 0; i < count; ++i)
            if (cp.members_[i].empty()) throw std::invalid_argument("community labels must be dense and nonempty");
        cp.labels_ = std::move(labels);
        return cp;
    }

    static CommunityPartition single(const NodeAttrs& attrs) {
        return from_labels(std::vector<std::uint32_t>(attrs.size(), 0), attrs);
    }

    std::size_t count() const noexcept { return members_.size(); }
    const std::vector<NodeId>& members(std::size_t i) const { return members_[i]; }
    double total_benefit(std::size_t i) const { return total_benefit_[i]; }
    std::uint32_t community_of(NodeId v) const { return labels_[v]; }
    const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }

private:
    std::vector<std::uint32_t> labels_;
    std::vector<std::vector<NodeId>> members_;
    std::vector<double> total_benefit_;
};

/// Renumbers arbitrary labels to 0..k-1 in ascending label order.
inline std::vector<std::uint32_t> compact_labels(std::span<const std::int64_t> labels) {
    std::vector<std::int64_t> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<std::uint32_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = static_cast<std::uint32_t>(std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion

struct EdgeListOptions {
    bool directed = false;
    /// Read a third column as the edge probability; otherwise every edge gets 1.0.
    bool with_probabilities = false;
};

/// SNAP-style edge list: "u v" per line, '#' starts a comment line. Extra
/// columns are ignored unless probabilities are requested. Node ids are
/// remapped to 0..n-1 in ascending order of the original ids.
inline Graph parse_edge_list(std::istream& is, EdgeListOptions opts, const std::string& source = "<stream>") {
    struct RawEdge {
        std::int64_t u, v;
        double p;
    };
    std::vector<RawEdge> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#' || line[first] == '%') continue;
        std::istringstream ls(line);
        RawEdge e{0, 0, 1.0};
        if (!(ls >> e.u >> e.v) || (opts.with_probabilities && !(ls >> e.p)))
            throw DataError(source + ":" + std::to_string(line_no) + ": malformed edge line '" + line + "'");
        if (e.u < 0 || e.v < 0)
            throw DataError(source + ":" + std::to_string(line_no) + ": negative node id");
        if (!(e.p > 0.0 && e.p <= 1.0))
            throw DataError(source + ":" + std::to_string(line_no) + ": probability outside (0,1]");
        raw.push_back(e);
    }
    if (is.bad()) throw DataError(source + ": read failure");

    std::vector<std::int64_t> ids;
    ids.reserve(2 * raw.size());
    for (const auto& e : raw) {
        if (e.u == e.v) continue;
        ids.push_back(e.u);
        ids.push_back(e.v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw DataError(source + ": empty graph");

    auto dense = [&](std::int64_t x) {
        return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), x) - ids.begin());
    };
    std::vector<WeightedEdge> edges;
    edges.reserve(raw.size());
    for (const auto& e : raw)
        if (e.u != e.v) edges.push_back({dense(e.u), dense(e.v), e.p});
    const std::size_t n = ids.size();
    return Graph::from_edges(n, opts.directed, edges, std::move(ids));
}

inline Graph load_edge_list(const std::string& path, EdgeListOptions opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge list '" + path + "'");
    return parse_edge_list(in, opts, path);
}

inline Graph load_edge_list(const std::string& path, bool directed) {
    return load_edge_list(path, EdgeListOptions{directed, false});
}

// ---------------------------------------------------------------------------
// Attribute assignment

class ProbabilityModel {
public:
    enum class Kind { Uniform, Trivalency };

    static ProbabilityModel uniform(double p) {
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("uniform edge probability must lie in (0,1]");
        return ProbabilityModel(Kind::Uniform, p);
    }
    static ProbabilityModel trivalency() { return ProbabilityModel(Kind::Trivalency, 0.0); }

    Kind kind() const noexcept { return kind_; }
    double p() const noexcept { return p_; }

    std::string name() const { return kind_ == Kind::Uniform ? "uniform" : "trivalency"; }

private:
    ProbabilityModel(Kind k, double p) : kind_(k), p_(p) {}
    Kind kind_;
    double p_;
};

inline constexpr double trivalency_levels[3] = {0.1, 0.01, 0.001};

/// Undirected edges get one draw shared by both directions.
inline Graph assign_edge_probabilities(const Graph& g, const ProbabilityModel& model, std::uint64_t seed) {
    Rng rng(derive_seed(seed, stream::probabilities));
    auto edges = g.edges();
    for (auto& e : edges)
        e.p = model.kind() == ProbabilityModel::Kind::Uniform ? model.p() : trivalency_levels[uniform_index(rng, 3)];
    return Graph::from_edges(g.num_nodes(), g.directed(), edges, g.original_ids());
}

inline NodeAttrs assign_node_attributes(const Graph& g, Range cost_range, Range benefit_range, std::uint64_t seed) {
    for (Range r : {cost_range, benefit_range})
        if (!(r.lo > 0.0 && r.lo <= r.hi) || !std::isfinite(r.hi)) throw std::invalid_argument("attribute range must satisfy 0 < lo <= hi");
    Rng rng(derive_seed(seed, stream::attributes));
    auto draw = [&](Range r) { return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
    NodeAttrs a;
    a.cost.resize(g.num_nodes());
    a.benefit.resize(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        a.cost[v] = draw(cost_range);
        a.benefit[v] = draw(benefit_range);
    }
    return a;
}

/// Two communities: a uniformly random ceil(fraction * n) subset is the
/// minority (community 0). The minority size is clamped to [1, n-1].
inline CommunityPartition assign_communities(const Graph& g, const NodeAttrs& attrs, double minority_fraction,
                                             std::uint64_t seed) {
    if (!(minority_fraction > 0.0 && minority_fraction < 1.0)) throw std::invalid_argument("minority fraction must lie in (0,1)");
    std::size_t n = g.num_nodes();
    if (n < 2) throw std::invalid_argument("two communities need at least two nodes");
    auto minority = static_cast<std::size_t>(std::ceil(minority_fraction * static_cast<double>(n) - 1e-9));
    minority = std::clamp<std::size_t>(minority, 1, n - 1);

    Rng rng(derive_seed(seed, stream::communities));
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::uint32_t> labels(n, 1);
    for (std::size_t i = 0; i < minority; ++i) labels[perm[i]] = 0;
    return CommunityPartition::from_labels(std::move(labels), attrs);
}

// ---------------------------------------------------------------------------
// Subgraph sampling

inline constexpr double restart_probability = 0.15;

/// Nodes visited by a random walk with restart over the weak neighborhood
/// (out- and in-arcs). When the start's component is exhausted or the walk
/// stops discovering nodes, it jumps to a fresh unvisited node. Returned in
/// visit order.
inline std::vector<NodeId> sample_walk_nodes(const Graph& g, std::size_t target_nodes, std::uint64_t seed) {
    const std::size_t n = g.num_nodes();
    if (target_nodes < 1 || target_nodes > n) throw std::invalid_argument("target node count must lie in [1, |V|]");

    auto weak_degree = [&](NodeId v) { return g.out_degree(v) + (g.directed() ? g.in_degree(v) : 0); };
    auto weak_neighbor = [&](NodeId v, std::size_t i) {
        auto od = g.out_degree(v);
        return i < od ? g.out(v)[i].node : g.in(v)[i - od].node;
    };

    // weak components, for exhaustion detection
    constexpr auto unset = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> comp(n, unset);
    std::vector<std::size_t> comp_size;
    std::vector<NodeId> stack;
    for (NodeId s = 0; s < n; ++s) {
        if (comp[s] != unset) continue;
        auto c = static_cast<std::uint32_t>(comp_size.size());
        comp_size.push_back(0);
        comp[s] = c;
        stack.push_back(s);
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            ++comp_size[c];
            for (std::size_t i = 0, d = weak_degree(v); i < d; ++i) {
                NodeId u = weak_neighbor(v, i);
                if (comp[u] == unset) {
                    comp[u] = c;
                    stack.push_back(u);
                }
            }
        }
    }

    Rng rng(derive_seed(seed, stream::sampling));
    std::vector<char> visited(n, 0);
    std::vector<std::size_t> comp_visited(comp_size.size(), 0);
    std::vector<NodeId> order;
    order.reserve(target_nodes);
    auto visit = [&](NodeId v) {
        visited[v] = 1;
        ++comp_visited[comp[v]];
        order.push_back(v);
    };

    NodeId start = static_cast<NodeId>(uniform_index(rng, n));
    NodeId cur = start;
    visit(start);
    std::size_t stall = 0;
    const std::size_t stall_limit = 100 * target_nodes + 1000;
    while (order.size() < target_nodes) {
        if (comp_visited[comp[start]] == comp_size[comp[start]] || stall > stall_limit) {
            std::vector<NodeId> fresh;
            for (NodeId v = 0; v < n; ++v)
                if (!visited[v]) fresh.push_back(v);
            start = cur = fresh[uniform_index(rng, fresh.size())];
            visit(start);
            stall = 0;
            continue;
        }
        std::size_t d = weak_degree(cur);
        if (d == 0 || uniform01(rng) < restart_probability)
            cur = start;
        else
            cur = weak_neighbor(cur, uniform_index(rng, d));
        if (!visited[cur]) {
            visit(cur);
            stall = 0;
        } else {
            ++stall;
        }
    }
    return order;
}

/// Induced subgraph on `nodes`, relabeled in ascending parent id order.
inline Graph induced_subgraph(const Graph& g, std::vector<NodeId> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    constexpr auto absent = static_cast<NodeId>(-1);
    std::vector<NodeId> to_local(g.num_nodes(), absent);
    std::vector<std::int64_t> original(nodes.size());
    for (NodeId i = 0; i < nodes.size(); ++i) {
        to_local[nodes[i]] = i;
        original[i] = g.original_id(nodes[i]);
    }
    std::vector<WeightedEdge> edges;
    for (NodeId u : nodes)
        for (const auto& a : g.out(u))
            if (to_local[a.node] != absent && (g.directed() || u < a.node))
                edges.push_back({to_local[u], to_local[a.node], a.p});
    return Graph::from_edges(nodes.size(), g.directed(), edges, std::move(original));
}

inline Graph sample_subgraph(const Graph& g, std::size_t target_nodes, std::uint64_t seed) {
    return induced_subgraph(g, sample_walk_nodes(g, target_nodes, seed));
}

// ---------------------------------------------------------------------------
// Attribute file and instance pools

/// Attributes supplied for a whole source graph, aligned with its dense ids.
struct SourceAttributes {
    NodeAttrs attrs;
    std::vector<std::int64_t> community_labels;
};

/// CSV with header `node_id,cost,benefit,community`; node_id refers to the
/// original id in the edge list. Rows for nodes absent from the graph are
/// ignored; every graph node must be covered.
inline SourceAttributes load_node_attributes_csv(const std::string& path, const Graph& g) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open attribute file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "node_id,cost,benefit,community") throw DataError(path + ": expected header 'node_id,cost,benefit,community'");

    std::unordered_map<std::int64_t, NodeId> dense;
    for (NodeId v = 0; v < g.num_nodes(); ++v) dense.emplace(g.original_id(v), v);

    SourceAttributes out;
    out.attrs.cost.assign(g.num_nodes(), 0.0);
    out.attrs.benefit.assign(g.num_nodes(), 0.0);
    out.community_labels.assign(g.num_nodes(), 0);
    std::vector<char> seen(g.num_nodes(), 0);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        for (auto& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::int64_t id = 0, community = 0;
        double cost = 0, benefit = 0;
        if (!(ls >> id >> cost >> benefit >> community))
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed attribute row");
        if (!(cost > 0.0) || !(benefit > 0.0))
            throw DataError(path + ":" + std::to_string(line_no) + ": cost and benefit must be positive");
        auto it = dense.find(id);
        if (it == dense.end()) continue;
        out.attrs.cost[it->second] = cost;
        out.attrs.benefit[it->second] = benefit;
        out.community_labels[it->second] = community;
        seen[it->second] = 1;
    }
    for (NodeId v = 0; v < g.num_nodes(); ++v)
        if (!seen[v]) throw DataError(path + ": no attributes for node " + std::to_string(g.original_id(v)));
    return out;
}

struct Instance {
    std::size_t id = 0;
    std::uint64_t seed = 0;
    Graph graph;
    NodeAttrs attrs;
    CommunityPartition communities;
};

struct InstancePool {
    std::vector<Instance> train;
    std::vector<Instance> test;
    std::uint64_t base_seed = 0;
};

struct PoolConfig {
    std::size_t n_train = 12;
    std::size_t n_test = 8;
    std::size_t nodes_per_instance = 500;
    ProbabilityModel probabilities = ProbabilityModel::uniform(0.1);
    Range cost_range{1.0, 100.0};
    Range benefit_range{1.0, 100.0};
    double minority_fraction = 0.2;
};

/// Builds one instance from a source graph. With `source` attributes the
/// sampled nodes keep their supplied cost, benefit and community; otherwise
/// they are generated from the instance seed.
inline Instance make_instance(const Graph& g, const PoolConfig& cfg, std::size_t id, std::uint64_t seed,
                              const SourceAttributes* source = nullptr) {
    auto nodes = sample_walk_nodes(g, cfg.nodes_per_instance, derive_seed(seed, stream::sampling));
    std::sort(nodes.begin(), nodes.end());
    Instance inst;
    inst.id = id;
    inst.seed = seed;
    inst.graph = assign_edge_probabilities(induced_subgraph(g, nodes), cfg.probabilities, seed);
    if (source) {
        std::vector<std::int64_t> labels;
        for (NodeId v : nodes) {
            inst.attrs.cost.push_back(source->attrs.cost[v]);
            inst.attrs.benefit.push_back(source->attrs.benefit[v]);
            labels.push_back(source->community_labels[v]);
        }
        inst.communities = CommunityPartition::from_labels(compact_labels(labels), inst.attrs);
    } else {
        inst.attrs = assign_node_attributes(inst.graph, cfg.cost_range, cfg.benefit_range, seed);
        inst.communities = assign_communities(inst.graph, inst.attrs, cfg.minority_fraction, seed);
    }
    inst.attrs.validate(inst.graph.num_nodes());
    return inst;
}

inline std::uint64_t instance_seed(std::uint64_t base_seed, std::size_t index) {
    return derive_seed(base_seed, {stream::sampling, index});
}

/// Train instances take derived indices 0..n_train-1, test instances follow.
inline InstancePool build_instance_pool(const Graph& g, const PoolConfig& cfg, std::uint64_t base_seed,
                                        const SourceAttributes* source = nullptr) {
    if (cfg.n_train < 1 || cfg.n_test < 1 || cfg.nodes_per_instance < 1)
        throw std::invalid_argument("instance pool counts must be at least 1");
    InstancePool pool;
    pool.base_seed = base_seed;
    for (std::size_t i = 0; i < cfg.n_train; ++i)
        pool.train.push_back(make_instance(g, cfg, i, instance_seed(base_seed, i), source));
    for (std::size_t i = 0; i < cfg.n_test; ++i)
        pool.test.push_back(make_instance(g, cfg, i, instance_seed(base_seed, cfg.n_train + i), source));
    return pool;
}

} // namespace fpm
