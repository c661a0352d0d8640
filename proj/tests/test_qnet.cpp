#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"

using namespace fpm;
using namespace fpm::testing;

namespace {

std::vector<QSample> random_batch(Rng& rng, std::size_t k, std::size_t dim) {
    std::vector<QSample> batch;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> s(dim);
        for (auto& x : s) x = std::uniform_real_distribution<double>(-1, 1)(rng);
        batch.push_back({StateVector(std::move(s)), std::uniform_real_distribution<double>(-5, 5)(rng)});
    }
    return batch;
}

double batch_loss(const QNetwork& net, const std::vector<QSample>& batch) {
    double loss = 0.0;
    for (const auto& s : batch) {
        double e = net.forward(s.state) - s.target;
        loss += e * e;
    }
    return loss / static_cast<double>(batch.size());
}

} // namespace

TEST(StateEncoding, LayoutAndScaling) {
    auto g = make_graph(3, false, {{0, 1}, {1, 2}}, 0.5);
    NodeAttrs a{{10, 20, 40}, {1, 2, 3}};
    auto p = init_embedding_params(4, 1);
    auto h = compute_embeddings(g, a, p, 2);
    auto s = encode_state(1, h, 2, 60.0, a, 100.0, 10);
    ASSERT_EQ(s.size(), 4u + state_tail_size);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(s[k], h.of(1)[k]);
    EXPECT_DOUBLE_EQ(s[4], 0.2);
    EXPECT_DOUBLE_EQ(s[5], 0.6);
    EXPECT_DOUBLE_EQ(s[6], 0.2);
    EXPECT_EQ(max_seed_count(100.0, 10.0), 10u);
    EXPECT_EQ(max_seed_count(5.0, 10.0), 1u);
}

TEST(QNetwork, ShapeAndZeroInit) {
    QNetwork zero(67, 128);
    EXPECT_EQ(zero.num_params(), 128u * 67u + 128u + 128u + 1u);
    std::vector<double> s(67, 0.3);
    EXPECT_EQ(zero.forward(s), 0.0);
    EXPECT_THROW(zero.forward(std::vector<double>(66, 0.0)), std::invalid_argument);

    QNetwork a(67, 128, 5), b(67, 128, 5), c(67, 128, 6);
    EXPECT_TRUE(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
    EXPECT_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
    for (std::size_t i = 0; i < a.w2_offset(); ++i) EXPECT_LE(std::abs(a.params()[i]), 1.0 / std::sqrt(67.0));
}

TEST(QNetwork, ForwardByHand) {
    QNetwork net(2, 2);
    auto p = net.params();
    // W1 = [[1, -1], [2, 0.5]], b1 = [0, -10], W2 = [3, 4], b2 = 0.5
    double values[] = {1, -1, 2, 0.5, 0, -10, 3, 4, 0.5};
    std::copy(std::begin(values), std::end(values), p.begin());
    std::vector<double> s{2, 1};
    // hidden pre [1, -5.5] -> relu [1, 0] -> 3 + 0.5
    EXPECT_DOUBLE_EQ(net.forward(s), 3.5);
}

TEST(QNetwork, GradientMatchesFiniteDifferences) {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        QNetwork net(7, 16, trial);
        auto batch = random_batch(rng, 8, 7);
        auto lg = q_loss_and_grad(net, batch);
        EXPECT_NEAR(lg.loss, batch_loss(net, batch), 1e-12);
        const double h = 1e-6;
        for (std::size_t i = 0; i < net.num_params(); ++i) {
            QNetwork plus = net, minus = net;
            plus.params()[i] += h;
            minus.params()[i] -= h;
            double fd = (batch_loss(plus, batch) - batch_loss(minus, batch)) / (2 * h);
            double denom = std::max({std::abs(fd), std::abs(lg.grads[i]), 1e-3});
            EXPECT_LE(std::abs(fd - lg.grads[i]) / denom, 1e-4) << "param " << i;
        }
    }
}

TEST(Adam, FirstStepMovesByAlpha) {
    QNetwork net(3, 2, 1);
    std::vector<double> before(net.params().begin(), net.params().end());
    std::vector<double> grads(net.num_params());
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = (i % 2 ? -1.0 : 1.0) * (0.1 + static_cast<double>(i));
    net.adam_step(grads, 0.001);
    EXPECT_EQ(net.adam_steps(), 1u);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        double moved = before[i] - net.params()[i];
        EXPECT_NEAR(moved, 0.001 * (grads[i] > 0 ? 1.0 : -1.0), 1e-9);
    }
}

TEST(Adam, ReducesLossOnFixedBatch) {
    Rng rng(4);
    QNetwork net(5, 32, 2);
    auto batch = random_batch(rng, 16, 5);
    double start = batch_loss(net, batch);
    for (int step = 0; step < 500; ++step) net.adam_step(q_loss_and_grad(net, batch).grads, 0.01);
    EXPECT_LT(batch_loss(net, batch), 0.5 * start);
}

TEST(Checkpoint, RoundTripIsExact) {
    PolicyModel m;
    m.net = QNetwork(67, 128, 9);
    m.embedding = init_embedding_params(64, 9);
    m.embedding_iterations = 3;
    Rng rng(1);
    auto batch = random_batch(rng, 4, 67);
    for (int i = 0; i < 3; ++i) m.net.adam_step(q_loss_and_grad(m.net, batch).grads, 0.001);

    std::stringstream ss;
    write_checkpoint(ss, m);
    auto arch = architecture_of(m);
    auto back = read_checkpoint(ss, &arch);
    EXPECT_TRUE(std::equal(m.net.params().begin(), m.net.params().end(), back.net.params().begin()));
    EXPECT_EQ(back.net.adam_m(), m.net.adam_m());
    EXPECT_EQ(back.net.adam_v(), m.net.adam_v());
    EXPECT_EQ(back.net.adam_steps(), 3u);
    EXPECT_EQ(back.embedding.w_agg, m.embedding.w_agg);
    std::vector<double> s(67, 0.1);
    EXPECT_EQ(back.net.forward(s), m.net.forward(s));
}

TEST(Checkpoint, MismatchedArchitectureIsRejected) {
    PolicyModel m;
    m.net = QNetwork(67, 128, 1);
    m.embedding = init_embedding_params(64, 1);
    std::stringstream ss;
    write_checkpoint(ss, m);
    Architecture wrong{67, 64, 64, 3};
    EXPECT_THROW(read_checkpoint(ss, &wrong), CheckpointMismatch);

    std::string text;
    {
        std::stringstream again;
        write_checkpoint(again, m);
        text = again.str();
    }
    auto pos = text.find("hidden_dim 128");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 14, "hidden_dim 127");
    std::istringstream tampered(text);
    EXPECT_THROW(read_checkpoint(tampered), CheckpointMismatch);

    std::istringstream garbage("hello world");
    EXPECT_THROW(read_checkpoint(garbage), DataError);
}

TEST(Checkpoint, TruncatedFileIsDataError) {
    PolicyModel m;
    m.net = QNetwork(5, 4, 1);
    m.embedding = init_embedding_params(2, 1);
    std::stringstream ss;
    write_checkpoint(ss, m);
    auto text = ss.str();
    std::istringstream cut(text.substr(0, text.size() / 2));
    EXPECT_THROW(read_checkpoint(cut), DataError);
}
