#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

using namespace fpm;
using namespace fpm::testing;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto path = std::filesystem::temp_directory_path() / ("fpm_test_" + name);
    std::ofstream(path) << text;
    return path;
}

void expect_symmetric(const Graph& g) {
    for (NodeId u = 0; u < g.num_nodes(); ++u)
        for (const auto& a : g.out(u)) {
            auto back = g.probability(a.node, u);
            ASSERT_TRUE(back.has_value());
            EXPECT_EQ(*back, a.p);
        }
}

} // namespace

TEST(LoadEdgeList, UndirectedPath) {
    auto path = write_temp("path.txt", "0 1\n1 2");
    auto g = load_edge_list(path.string(), false);
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(g.num_edges(), 2u);
    EXPECT_EQ(g.num_arcs(), 4u);
    expect_symmetric(g);
}

TEST(LoadEdgeList, SkipsCommentsAndRemapsIds) {
    std::istringstream in("# comment\n# FromNodeId ToNodeId\n10 30\n\n30 20\n");
    auto g = parse_edge_list(in, {true, false});
    EXPECT_EQ(g.num_nodes(), 3u);
    EXPECT_EQ(g.num_edges(), 2u);
    EXPECT_EQ(g.original_id(0), 10);
    EXPECT_EQ(g.original_id(1), 20);
    EXPECT_EQ(g.original_id(2), 30);
    EXPECT_TRUE(g.probability(0, 2).has_value());
    EXPECT_TRUE(g.probability(2, 1).has_value());
    EXPECT_FALSE(g.probability(2, 0).has_value());
}

TEST(LoadEdgeList, DropsSelfLoopsAndDuplicates) {
    std::istringstream in("0 1\n0 1\n1 1\n1 0\n2 0\n");
    auto d = parse_edge_list(in, {true, false});
    EXPECT_EQ(d.num_edges(), 3u);  // 0->1, 1->0, 2->0
    std::istringstream in2("0 1\n0 1\n1 1\n1 0\n2 0\n");
    auto u = parse_edge_list(in2, {false, false});
    EXPECT_EQ(u.num_edges(), 2u);
    expect_symmetric(u);
}

TEST(LoadEdgeList, MalformedLineReportsLineNumber) {
    std::istringstream in("0 1\n# ok\n2 x\n");
    try {
        parse_edge_list(in, {false, false}, "edges.txt");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("edges.txt:3"), std::string::npos) << e.what();
    }
}

TEST(LoadEdgeList, EmptyGraphAndMissingFileAreErrors) {
    std::istringstream only_comments("# nothing here\n");
    EXPECT_THROW(parse_edge_list(only_comments, {}), DataError);
    std::istringstream only_loops("3 3\n");
    EXPECT_THROW(parse_edge_list(only_loops, {}), DataError);
    EXPECT_THROW(load_edge_list("/nonexistent/fpm/edges.txt", false), DataError);
}

TEST(LoadEdgeList, ReadsProbabilityColumn) {
    std::istringstream in("0 1 0.25\n1 2 1\n");
    auto g = parse_edge_list(in, {false, true});
    EXPECT_DOUBLE_EQ(*g.probability(1, 0), 0.25);
    EXPECT_DOUBLE_EQ(*g.probability(1, 2), 1.0);
    std::istringstream bad("0 1 1.5\n");
    EXPECT_THROW(parse_edge_list(bad, {false, true}), DataError);
}

TEST(Graph, NeighborListsSortedAndInArcsMatchOutArcs) {
    auto g = make_graph(5, true, {{3, 1}, {0, 4}, {0, 1}, {2, 1}, {4, 3}});
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        auto out = g.out(v);
        EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), [](auto& a, auto& b) { return a.node < b.node; }));
        for (const auto& a : g.in(v)) EXPECT_TRUE(g.probability(a.node, v).has_value());
    }
    EXPECT_EQ(g.in_degree(1), 3u);
    EXPECT_EQ(g.in(1)[0].node, 0u);
}

TEST(Graph, RejectsInvalidProbability) {
    std::vector<WeightedEdge> e{{0, 1, 0.0}};
    EXPECT_THROW(Graph::from_edges(2, false, e), std::invalid_argument);
    std::vector<WeightedEdge> e2{{0, 5, 0.5}};
    EXPECT_THROW(Graph::from_edges(2, false, e2), std::invalid_argument);
}

TEST(AssignEdgeProbabilities, Uniform) {
    auto g = assign_edge_probabilities(barabasi_albert(50, 2, 1), ProbabilityModel::uniform(0.1), 7);
    for (const auto& e : g.edges()) EXPECT_EQ(e.p, 0.1);
    expect_symmetric(g);
    EXPECT_THROW(ProbabilityModel::uniform(0.0), std::invalid_argument);
    EXPECT_THROW(ProbabilityModel::uniform(1.5), std::invalid_argument);
}

TEST(AssignEdgeProbabilities, TrivalencyLevelsAndDeterminism) {
    auto base = barabasi_albert(200, 3, 2);
    auto a = assign_edge_probabilities(base, ProbabilityModel::trivalency(), 11);
    auto b = assign_edge_probabilities(base, ProbabilityModel::trivalency(), 11);
    auto c = assign_edge_probabilities(base, ProbabilityModel::trivalency(), 12);
    std::array<int, 3> hist{};
    bool differs = false;
    auto ea = a.edges(), eb = b.edges(), ec = c.edges();
    for (std::size_t i = 0; i < ea.size(); ++i) {
        EXPECT_EQ(ea[i].p, eb[i].p);
        differs |= ea[i].p != ec[i].p;
        auto it = std::find(std::begin(trivalency_levels), std::end(trivalency_levels), ea[i].p);
        ASSERT_NE(it, std::end(trivalency_levels));
        ++hist[it - std::begin(trivalency_levels)];
    }
    EXPECT_TRUE(differs);
    for (int h : hist) EXPECT_GT(h, 100);
    expect_symmetric(a);
}

TEST(AssignNodeAttributes, RangesAndSeeding) {
    auto g = barabasi_albert(300, 2, 3);
    auto fixed = assign_node_attributes(g, {5, 5}, {1, 100}, 1);
    for (double c : fixed.cost) EXPECT_EQ(c, 5.0);
    auto a = assign_node_attributes(g, {1, 100}, {1, 100}, 1);
    auto a2 = assign_node_attributes(g, {1, 100}, {1, 100}, 1);
    auto b = assign_node_attributes(g, {1, 100}, {1, 100}, 2);
    EXPECT_EQ(a.cost, a2.cost);
    EXPECT_EQ(a.benefit, a2.benefit);
    EXPECT_NE(a.benefit, b.benefit);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        EXPECT_GE(a.cost[v], 1.0);
        EXPECT_LE(a.cost[v], 100.0);
    }
    // uniform [1,100] has mean 50.5; 300 draws have std error ~1.65
    double mean = std::accumulate(a.cost.begin(), a.cost.end(), 0.0) / 300.0;
    EXPECT_NEAR(mean, 50.5, 6.0);
    EXPECT_THROW(assign_node_attributes(g, {0, 1}, {1, 2}, 0), std::invalid_argument);
    EXPECT_THROW(assign_node_attributes(g, {3, 2}, {1, 2}, 0), std::invalid_argument);
}

TEST(AssignCommunities, RatioCoverAndDeterminism) {
    auto g = barabasi_albert(100, 2, 4);
    auto attrs = constant_attrs(100, 1, 1);
    auto p = assign_communities(g, attrs, 0.2, 9);
    ASSERT_EQ(p.count(), 2u);
    EXPECT_EQ(p.members(0).size(), 20u);
    EXPECT_EQ(p.members(1).size(), 80u);
    EXPECT_DOUBLE_EQ(p.total_benefit(0), 20.0);

    std::vector<NodeId> all;
    for (std::size_t i = 0; i < p.count(); ++i) all.insert(all.end(), p.members(i).begin(), p.members(i).end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
    EXPECT_EQ(all.size(), 100u);

    auto q = assign_communities(g, attrs, 0.2, 9);
    EXPECT_EQ(p.labels(), q.labels());

    auto two = make_graph(2, false, {{0, 1}});
    auto half = assign_communities(two, constant_attrs(2, 1, 1), 0.5, 0);
    EXPECT_EQ(half.members(0).size(), 1u);
    EXPECT_EQ(half.members(1).size(), 1u);

    EXPECT_THROW(assign_communities(g, attrs, 0.0, 0), std::invalid_argument);
    EXPECT_THROW(assign_communities(g, attrs, 1.0, 0), std::invalid_argument);
}

TEST(SampleSubgraph, WholeGraphIsIdentityUpToRelabeling) {
    auto g = barabasi_albert(80, 2, 5);
    auto s = sample_subgraph(g, 80, 3);
    EXPECT_EQ(s.num_nodes(), 80u);
    EXPECT_EQ(s.num_edges(), g.num_edges());
}

TEST(SampleSubgraph, InducedAndDeterministic) {
    auto base = barabasi_albert(400, 3, 6);
    auto g = assign_edge_probabilities(base, ProbabilityModel::trivalency(), 1);
    auto nodes = sample_walk_nodes(g, 120, 42);
    ASSERT_EQ(nodes.size(), 120u);
    auto sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());

    auto sub = induced_subgraph(g, nodes);
    std::size_t expected_edges = 0;
    for (NodeId i = 0; i < sorted.size(); ++i)
        for (NodeId j = i + 1; j < sorted.size(); ++j)
            if (auto p = g.probability(sorted[i], sorted[j])) {
                ++expected_edges;
                EXPECT_EQ(sub.probability(i, j), p);
            }
    EXPECT_EQ(sub.num_edges(), expected_edges);
    for (NodeId i = 0; i < sorted.size(); ++i) EXPECT_EQ(sub.original_id(i), g.original_id(sorted[i]));

    auto again = sample_subgraph(g, 120, 42);
    EXPECT_EQ(again.edges().size(), sub.edges().size());
    EXPECT_EQ(again.original_ids(), sub.original_ids());
}

TEST(SampleSubgraph, JumpsAcrossComponents) {
    // three disjoint triangles and two isolated-ish pairs
    auto g = make_graph(13, false, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}, {6, 7}, {7, 8}, {8, 6}, {9, 10}, {11, 12}});
    auto nodes = sample_walk_nodes(g, 13, 1);
    EXPECT_EQ(nodes.size(), 13u);
    EXPECT_THROW(sample_walk_nodes(g, 14, 1), std::invalid_argument);
    EXPECT_THROW(sample_walk_nodes(g, 0, 1), std::invalid_argument);
}

TEST(SampleSubgraph, DirectedWalkUsesWeakNeighborhood) {
    // star with all arcs pointing into the center
    std::vector<std::pair<NodeId, NodeId>> e;
    for (NodeId v = 1; v < 30; ++v) e.emplace_back(v, 0);
    auto g = make_graph(30, true, e);
    auto s = sample_subgraph(g, 10, 8);
    EXPECT_EQ(s.num_nodes(), 10u);
    EXPECT_TRUE(s.directed());
}

TEST(InstancePool, EmailSizedConfiguration) {
    // directed stand-in with the Email-Eu-Core node count
    auto ba = barabasi_albert(1005, 12, 7);
    std::vector<WeightedEdge> arcs;
    Rng rng(3);
    for (const auto& e : ba.edges()) {
        if (uniform01(rng) < 0.5) arcs.push_back({e.u, e.v, 1.0});
        else arcs.push_back({e.v, e.u, 1.0});
    }
    auto g = Graph::from_edges(1005, true, arcs);
    PoolConfig cfg;  // 12 train, 8 test, 500 nodes
    auto pool = build_instance_pool(g, cfg, 2024);
    ASSERT_EQ(pool.train.size(), 12u);
    ASSERT_EQ(pool.test.size(), 8u);
    std::set<std::uint64_t> seeds;
    for (const auto* set : {&pool.train, &pool.test})
        for (std::size_t i = 0; i < set->size(); ++i) {
            const auto& inst = (*set)[i];
            EXPECT_EQ(inst.id, i);
            EXPECT_EQ(inst.graph.num_nodes(), 500u);
            EXPECT_EQ(inst.communities.count(), 2u);
            EXPECT_EQ(inst.communities.members(0).size(), 100u);
            for (const auto& e : inst.graph.edges()) EXPECT_EQ(e.p, 0.1);
            seeds.insert(inst.seed);
        }
    EXPECT_EQ(seeds.size(), 20u);

    auto again = build_instance_pool(g, cfg, 2024);
    EXPECT_EQ(again.test[3].graph.original_ids(), pool.test[3].graph.original_ids());
    EXPECT_EQ(again.test[3].attrs.cost, pool.test[3].attrs.cost);
}

TEST(InstancePool, HBa2kConfiguration) {
    auto g = barabasi_albert(30000, 4, 11);
    EXPECT_EQ(g.num_edges(), 119990u);
    PoolConfig cfg;
    cfg.n_train = 50;
    cfg.n_test = 10;
    cfg.nodes_per_instance = 2000;
    auto pool = build_instance_pool(g, cfg, 5);
    EXPECT_EQ(pool.train.size(), 50u);
    EXPECT_EQ(pool.test.size(), 10u);
    for (const auto& inst : pool.train) EXPECT_EQ(inst.graph.num_nodes(), 2000u);
}

TEST(InstancePool, MinimalPoolHasDistinctInstances) {
    auto g = barabasi_albert(300, 2, 12);
    PoolConfig cfg;
    cfg.n_train = 1;
    cfg.n_test = 1;
    cfg.nodes_per_instance = 50;
    auto pool = build_instance_pool(g, cfg, 1);
    EXPECT_NE(pool.train[0].seed, pool.test[0].seed);
    EXPECT_NE(pool.train[0].graph.original_ids(), pool.test[0].graph.original_ids());
    cfg.n_test = 0;
    EXPECT_THROW(build_instance_pool(g, cfg, 1), std::invalid_argument);
}

TEST(AttributeCsv, OverridesGeneratedAttributes) {
    std::istringstream edges("10 20\n20 30\n30 40\n");
    auto g = parse_edge_list(edges, {false, false});
    auto path = write_temp("attrs.csv",
                           "node_id,cost,benefit,community\n10,1.5,2,7\n20,2,3,7\n30,4,5,9\n40,1,1,9\n99,1,1,1\n");
    auto src = load_node_attributes_csv(path.string(), g);
    EXPECT_EQ(src.attrs.cost, (std::vector<double>{1.5, 2, 4, 1}));
    auto parts = CommunityPartition::from_labels(compact_labels(src.community_labels), src.attrs);
    EXPECT_EQ(parts.count(), 2u);
    EXPECT_DOUBLE_EQ(parts.total_benefit(1), 6.0);

    PoolConfig cfg;
    cfg.n_train = 1;
    cfg.n_test = 1;
    cfg.nodes_per_instance = 3;
    auto pool = build_instance_pool(g, cfg, 3, &src);
    const auto& inst = pool.train[0];
    for (NodeId v = 0; v < inst.graph.num_nodes(); ++v) {
        auto it = std::find(g.original_ids().begin(), g.original_ids().end(), inst.graph.original_id(v));
        auto parent = static_cast<NodeId>(it - g.original_ids().begin());
        EXPECT_EQ(inst.attrs.cost[v], src.attrs.cost[parent]);
    }

    auto missing = write_temp("attrs_missing.csv", "node_id,cost,benefit,community\n10,1,1,0\n");
    EXPECT_THROW(load_node_attributes_csv(missing.string(), g), DataError);
    auto bad_header = write_temp("attrs_header.csv", "id,cost\n");
    EXPECT_THROW(load_node_attributes_csv(bad_header.string(), g), DataError);
}
