#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fpm;
using namespace fpm::testing;

TEST(PageRank, SymmetricCycleIsUniform) {
    auto g = make_graph(3, true, {{0, 1}, {1, 2}, {2, 0}});
    auto pr = pagerank(g);
    for (double x : pr.scores) EXPECT_NEAR(x, 1.0 / 3.0, 1e-9);
}

TEST(PageRank, TwoNodeClosedForm) {
    // 0 -> 1 only; node 1 dangles. With d = 0.85:
    // x0 = 0.075 + 0.425 x1, x1 = 0.075 + 0.85 x0 + 0.425 x1
    // gives x0 = 20/57, x1 = 37/57
    auto g = make_graph(2, true, {{0, 1}});
    auto pr = pagerank(g);
    EXPECT_NEAR(pr.scores[0], 20.0 / 57.0, 1e-8);
    EXPECT_NEAR(pr.scores[1], 37.0 / 57.0, 1e-8);
    EXPECT_EQ(pr.order[0], 1u);
}

TEST(PageRank, SumsToOneAndFavorsHubs) {
    auto g = barabasi_albert(300, 2, 3);
    auto pr = pagerank(g);
    double total = 0;
    for (double x : pr.scores) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
    auto deg = degree_scores(g);
    EXPECT_GT(pr.scores[deg.order[0]], 1.0 / 300.0);
}

TEST(HighDegree, StarCenterFirst) {
    auto g = star(6);
    auto a = constant_attrs(7, 1, 1);
    auto s = high_degree_seeds(g, a, 1.0);
    EXPECT_EQ(std::vector<NodeId>(s.nodes().begin(), s.nodes().end()), std::vector<NodeId>{0});
    auto p = pagerank_seeds(g, a, 1.0);
    EXPECT_TRUE(p.contains(0));
}

TEST(HighDegree, SkipsUnaffordableAndContinues) {
    // degrees 5, 2, 2 for nodes 0, 1, 2 with costs B + 1, 1, 1
    auto g = make_graph(8, false, {{0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7}, {1, 3}, {1, 4}, {2, 5}, {2, 6}});
    const double budget = 2.0;
    NodeAttrs a{{budget + 1, 1, 1, 5, 5, 5, 5, 5}, std::vector<double>(8, 1.0)};
    auto s = high_degree_seeds(g, a, budget);
    EXPECT_EQ(std::vector<NodeId>(s.nodes().begin(), s.nodes().end()), (std::vector<NodeId>{1, 2}));
}

TEST(Random, WithinBudgetAndSeeded) {
    auto g = barabasi_albert(100, 2, 1);
    Rng gen(1);
    auto a = random_attrs(gen, 100, {1, 100}, {1, 100});
    Rng r1(5), r2(5), r3(6);
    auto s1 = random_seeds(g, a, 500, r1);
    auto s2 = random_seeds(g, a, 500, r2);
    auto s3 = random_seeds(g, a, 500, r3);
    EXPECT_EQ(s1, s2);
    EXPECT_NE(s1, s3);
    EXPECT_LE(s1.cost(), 500.0);
    double remaining = 500.0 - s1.cost();
    for (NodeId v = 0; v < 100; ++v)
        if (!s1.contains(v)) { EXPECT_GT(a.cost[v], remaining); }
}

TEST(Parity, TwentyEightyPopulationGivesTwoOfTen) {
    // 10 minority and 40 majority nodes, unit costs, budget 10
    std::vector<std::pair<NodeId, NodeId>> e;
    for (NodeId v = 1; v < 50; ++v) e.emplace_back(v - 1, v);
    auto g = make_graph(50, false, e);
    auto a = constant_attrs(50, 1, 1);
    std::vector<std::uint32_t> labels(50, 1);
    for (NodeId v = 0; v < 10; ++v) labels[v] = 0;
    auto parts = CommunityPartition::from_labels(labels, a);
    for (auto* fn : {&parity_seeds, &fair_pagerank_seeds}) {
        auto s = (*fn)(g, a, parts, 10.0);
        ASSERT_EQ(s.size(), 10u);
        std::size_t minority = 0;
        for (NodeId v : s.nodes()) minority += labels[v] == 0;
        EXPECT_EQ(minority, 2u);
    }
}

TEST(Parity, PrefersHigherScoresWithinCommunity) {
    NodeAttrs a = constant_attrs(6, 1, 1);
    auto parts = CommunityPartition::from_labels({0, 0, 0, 1, 1, 1}, a);
    auto table = ScoreTable::from_scores({1, 3, 2, 9, 8, 7});
    auto s = parity_by_score(table, a, parts, 2.0);
    EXPECT_EQ(std::vector<NodeId>(s.nodes().begin(), s.nodes().end()), (std::vector<NodeId>{1, 3}));
}

TEST(Baselines, NeverExceedBudget) {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = barabasi_albert(40, 2, trial);
        auto a = random_attrs(rng, 40, {0.1, 50}, {1, 10});
        auto parts = assign_communities(g, a, 0.3, trial);
        double budget = std::uniform_real_distribution<double>(0.05, 300)(rng);
        Rng r(trial);
        for (const auto& s : {random_seeds(g, a, budget, r), high_degree_seeds(g, a, budget), pagerank_seeds(g, a, budget),
                              parity_seeds(g, a, parts, budget), fair_pagerank_seeds(g, a, parts, budget)})
            EXPECT_LE(s.cost(), budget);
    }
}
