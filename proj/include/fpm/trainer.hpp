#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpm/diffusion.hpp"
#include "fpm/embedding.hpp"
#include "fpm/graph.hpp"
#include "fpm/metrics.hpp"
#include "fpm/qnet.hpp"
#include "fpm/rng.hpp"

namespace fpm {

struct TrainConfig {
    double budget = 1500.0;
    std::size_t episodes = 720;
    double learning_rate = 0.001;
    double gamma = 0.95;
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay = 0.995;
    std::size_t replay_capacity = 10000;
    std::size_t batch_size = 32;
    std::size_t update_period = 2;
    double phi = 1.0;
    std::uint64_t seed = 0;

    std::size_t embedding_dim = 64;
    std::size_t embedding_iterations = 3;
    std::size_t hidden_dim = default_hidden_dim;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0,1)");
        if (!(epsilon_min > 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0))
            throw std::invalid_argument("epsilon schedule needs 0 < eps_min <= eps_0 <= 1");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw std::invalid_argument("epsilon decay must lie in (0,1]");
        if (batch_size < 1 || batch_size > replay_capacity) throw std::invalid_argument("batch size must lie in [1, capacity]");
        if (update_period < 1) throw std::invalid_argument("update period must be >= 1");
        if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
        if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
        if (!(phi >= 0.0)) throw std::invalid_argument("fairness weight must be >= 0");
        if (embedding_dim < 1 || embedding_iterations < 1 || hidden_dim < 1)
            throw std::invalid_argument("network dimensions must be >= 1");
    }

    Architecture architecture() const {
        return {embedding_dim + state_tail_size, hidden_dim, embedding_dim, embedding_iterations};
    }
};

/// Exploration rate after `episode` annealing steps: max(eps_0 * rho^e, eps_min).
/// Equal to repeated eps <- max(eps * rho, eps_min) since the floor absorbs.
inline double epsilon_after(const TrainConfig& cfg, std::size_t episode) {
    return std::max(cfg.epsilon_start * std::pow(cfg.epsilon_decay, static_cast<double>(episode)), cfg.epsilon_min);
}

struct Transition {
    std::size_t instance = 0;
    SeedSet before;
    NodeId action = 0;
    double reward = 0.0;
    SeedSet after;
    bool terminal = false;
    double remaining_before = 0.0;
    double remaining_after = 0.0;
    std::shared_ptr<const NodeEmbeddings> embeddings;
};

/// Bounded FIFO; index 0 is the oldest stored transition.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
        items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const Transition& operator[](std::size_t i) const { return items_[(head_ + i) % items_.size()]; }

    /// k distinct transitions drawn uniformly.
    std::vector<const Transition*> sample(std::size_t k, Rng& rng) const {
        if (k > items_.size()) throw std::invalid_argument("minibatch larger than buffer");
        std::vector<std::size_t> idx(items_.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::vector<std::size_t> picked;
        picked.reserve(k);
        std::sample(idx.begin(), idx.end(), std::back_inserter(picked), k, rng);
        std::vector<const Transition*> out;
        out.reserve(k);
        for (auto i : picked) out.push_back(&items_[i]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> items_;
};

/// Q-values for many candidates of one (network, embedding) pair. The
/// embedding half of the first layer is computed once per node; scores match
/// QNetwork::forward on the encoded state bit for bit.
class CandidateScorer {
public:
    CandidateScorer(const QNetwork& net, const NodeEmbeddings& h) : net_(&net), hidden_(net.hidden_dim()) {
        if (net.input_dim() != h.dim() + state_tail_size) throw std::invalid_argument("embedding size does not match network input");
        const std::size_t n = h.num_nodes(), d = h.dim(), in = net.input_dim();
        partial_.resize(n * hidden_);
        auto params = net.params();
        for (NodeId v = 0; v < n; ++v) {
            auto hv = h.of(v);
            for (std::size_t j = 0; j < hidden_; ++j) {
                const double* row = params.data() + j * in;
                double acc = net.b1(j);
                for (std::size_t i = 0; i < d; ++i) acc += row[i] * hv[i];
                partial_[v * hidden_ + j] = acc;
            }
        }
        tail_offset_ = d;
        pre_.resize(hidden_);
    }

    double score(NodeId v, const std::array<double, state_tail_size>& tail) {
        const std::size_t in = net_->input_dim();
        auto params = net_->params();
        for (std::size_t j = 0; j < hidden_; ++j) {
            const double* row = params.data() + j * in + tail_offset_;
            double acc = partial_[v * hidden_ + j];
            for (std::size_t i = 0; i < state_tail_size; ++i) acc += row[i] * tail[i];
            pre_[j] = acc;
        }
        return net_->readout(pre_);
    }

private:
    const QNetwork* net_;
    std::size_t hidden_;
    std::size_t tail_offset_ = 0;
    std::vector<double> partial_;
    std::vector<double> pre_;
};

/// Fixed per-episode quantities the selector needs.
struct EpisodeContext {
    const Graph* graph;
    const NodeAttrs* attrs;
    double budget;
    std::size_t k_max;
};

inline EpisodeContext make_context(const Instance& inst, double budget) {
    return {&inst.graph, &inst.attrs, budget, max_seed_count(budget, inst.attrs.min_cost())};
}

/// Candidates: not selected, not excluded, cost <= remaining. With
/// probability eps a uniform candidate, otherwise the argmax of Q with ties
/// going to the lowest id. Returns nullopt when no candidate exists.
inline std::optional<NodeId> epsilon_greedy_select(CandidateScorer& scorer, const EpisodeContext& ctx, const SeedSet& selected,
                                                   std::span<const char> excluded, double eps, double remaining, Rng& rng) {
    const auto& attrs = *ctx.attrs;
    std::vector<NodeId> candidates;
    for (NodeId v = 0; v < attrs.size(); ++v)
        if (!excluded[v] && attrs.cost[v] <= remaining && !selected.contains(v)) candidates.push_back(v);
    if (candidates.empty()) return std::nullopt;
    if (eps > 0.0 && uniform01(rng) < eps) return candidates[uniform_index(rng, candidates.size())];
    NodeId best = candidates.front();
    double best_q = -std::numeric_limits<double>::infinity();
    for (NodeId v : candidates) {
        double q = scorer.score(v, state_tail(attrs.cost[v], remaining, selected.size(), ctx.budget, ctx.k_max));
        if (q > best_q) {
            best_q = q;
            best = v;
        }
    }
    return best;
}

inline std::optional<NodeId> epsilon_greedy_select(const QNetwork& net, const Graph& g, const SeedSet& selected,
                                                   std::span<const char> excluded, double eps, const NodeEmbeddings& h,
                                                   double remaining, const NodeAttrs& attrs, double budget, Rng& rng) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
    CandidateScorer scorer(net, h);
    EpisodeContext ctx{&g, &attrs, budget, max_seed_count(budget, attrs.min_cost())};
    return epsilon_greedy_select(scorer, ctx, selected, excluded, eps, remaining, rng);
}

/// One training episode. Remaining budget is always B - cost(X) with the
/// canonical cost sum, so cost(X) <= B holds exactly at every step; a pick
/// that would break that is excluded and the loop continues.
inline std::vector<Transition> run_episode(const QNetwork& net, const Instance& inst,
                                           std::shared_ptr<const NodeEmbeddings> h, const TrainConfig& cfg, double eps,
                                           Rng& rng) {
    std::vector<Transition> out;
    const auto& attrs = inst.attrs;
    const double cmin = attrs.min_cost();
    if (cfg.budget < cmin) return out;

    auto ctx = make_context(inst, cfg.budget);
    CandidateScorer scorer(net, *h);
    SeedSet x;
    std::vector<char> excluded(attrs.size(), 0);
    double remaining = cfg.budget;
    double previous = 0.0;
    while (remaining >= cmin) {
        auto a = epsilon_greedy_select(scorer, ctx, x, excluded, eps, remaining, rng);
        if (!a) break;
        if (!fits_budget(x, *a, attrs, cfg.budget)) {
            excluded[*a] = 1;
            continue;
        }
        SeedSet next = x.with(*a, attrs);
        double next_remaining = cfg.budget - next.cost();
        if (next_remaining < 0.0) throw std::logic_error("budget exceeded during episode");
        double reward = shaped_reward(inst.graph, attrs, inst.communities, next, cfg.phi, rng);

        Transition t;
        t.instance = inst.id;
        t.before = x;
        t.action = *a;
        t.reward = marginal_reward(reward, previous);
        t.after = next;
        t.terminal = next_remaining <= 0.0;
        t.remaining_before = remaining;
        t.remaining_after = next_remaining;
        t.embeddings = h;
        out.push_back(std::move(t));

        previous = reward;
        remaining = next_remaining;
        x = std::move(next);
    }
    return out;
}

struct EpisodeLog {
    std::size_t episode = 0;
    std::size_t instance = 0;
    double epsilon = 0.0;  // after this episode's annealing
    std::size_t buffer_size = 0;
    std::size_t transitions = 0;
    bool updated = false;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double episode_return = 0.0;
};

struct TrainResult {
    PolicyModel model;
    std::vector<EpisodeLog> log;
    std::size_t gradient_steps = 0;
};

/// Bootstrapped targets y = r, or r + gamma * max Q(s') over candidates not in
/// X' that fit the transition's stored remaining budget. No feasible
/// candidate makes the transition terminal.
inline std::vector<QSample> bellman_samples(const QNetwork& net, std::span<const Transition* const> batch,
                                            const std::vector<Instance>& instances, const TrainConfig& cfg) {
    std::map<std::size_t, CandidateScorer> scorers;
    std::vector<QSample> samples;
    samples.reserve(batch.size());
    for (const Transition* t : batch) {
        const Instance& inst = instances.at(t->instance);
        auto ctx = make_context(inst, cfg.budget);
        const auto& attrs = inst.attrs;
        StateVector s = encode_state(t->action, *t->embeddings, t->before.size(), t->remaining_before, attrs, cfg.budget,
                                     ctx.k_max);
        double y = t->reward;
        if (!t->terminal) {
            auto it = scorers.find(t->instance);
            if (it == scorers.end()) it = scorers.emplace(t->instance, CandidateScorer(net, *t->embeddings)).first;
            double best = -std::numeric_limits<double>::infinity();
            for (NodeId v = 0; v < attrs.size(); ++v) {
                if (attrs.cost[v] > t->remaining_after || t->after.contains(v)) continue;
                best = std::max(best, it->second.score(v, state_tail(attrs.cost[v], t->remaining_after, t->after.size(),
                                                                     cfg.budget, ctx.k_max)));
            }
            if (std::isfinite(best)) y += cfg.gamma * best;
        }
        samples.push_back({std::move(s), y});
    }
    return samples;
}

/// Deep Q-learning over a pool of training instances.
inline TrainResult train(const TrainConfig& cfg, const std::vector<Instance>& instances) {
    cfg.validate();
    if (instances.empty()) throw std::invalid_argument("training pool is empty");
    for (std::size_t i = 0; i < instances.size(); ++i)
        if (instances[i].id != i) throw std::invalid_argument("training instance ids must be 0..n-1 in order");

    TrainResult result;
    auto arch = cfg.architecture();
    result.model.embedding = init_embedding_params(cfg.embedding_dim, cfg.seed);
    result.model.embedding_iterations = cfg.embedding_iterations;
    result.model.net = QNetwork(arch.input_dim, arch.hidden_dim, cfg.seed);
    QNetwork& net = result.model.net;

    Rng rng(derive_seed(cfg.seed, stream::training));
    ReplayBuffer buffer(cfg.replay_capacity);
    std::vector<std::shared_ptr<const NodeEmbeddings>> embeddings(instances.size());
    double eps = cfg.epsilon_start;

    for (std::size_t e = 1; e <= cfg.episodes; ++e) {
        EpisodeLog log;
        log.episode = e;
        log.instance = uniform_index(rng, instances.size());
        const Instance& inst = instances[log.instance];
        if (!embeddings[log.instance])
            embeddings[log.instance] = std::make_shared<const NodeEmbeddings>(
                compute_embeddings(inst.graph, inst.attrs, result.model.embedding, cfg.embedding_iterations));

        auto transitions = run_episode(net, inst, embeddings[log.instance], cfg, eps, rng);
        log.transitions = transitions.size();
        for (auto& t : transitions) {
            log.episode_return += t.reward;
            buffer.push(std::move(t));
        }

        if (e % cfg.update_period == 0 && buffer.size() >= cfg.batch_size) {
            auto batch = buffer.sample(cfg.batch_size, rng);
            auto samples = bellman_samples(net, batch, instances, cfg);
            auto lg = q_loss_and_grad(net, samples);
            net.adam_step(lg.grads, cfg.learning_rate);
            log.updated = true;
            log.loss = lg.loss;
            ++result.gradient_steps;
        }

        eps = epsilon_after(cfg, e);
        log.epsilon = eps;
        log.buffer_size = buffer.size();
        result.log.push_back(log);
    }
    return result;
}

inline TrainResult train(const TrainConfig& cfg, const InstancePool& pool) { return train(cfg, pool.train); }

/// Greedy rollout of the learned policy under budget B; no rewards sampled.
inline SeedSet infer_seed_set(const PolicyModel& model, const Instance& inst, double budget) {
    if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
    const auto& attrs = inst.attrs;
    SeedSet x;
    const double cmin = attrs.min_cost();
    if (budget < cmin) return x;
    auto h = compute_embeddings(inst.graph, attrs, model.embedding, model.embedding_iterations);
    CandidateScorer scorer(model.net, h);
    auto ctx = make_context(inst, budget);
    std::vector<char> excluded(attrs.size(), 0);
    Rng unused(0);
    double remaining = budget;
    while (remaining >= cmin) {
        auto a = epsilon_greedy_select(scorer, ctx, x, excluded, 0.0, remaining, unused);
        if (!a) break;
        if (!fits_budget(x, *a, attrs, budget)) {
            excluded[*a] = 1;
            continue;
        }
        x = x.with(*a, attrs);
        remaining = budget - x.cost();
    }
    return x;
}

/// Greedy selection followed by the m-rollout Monte Carlo evaluation.
inline std::pair<SeedSet, EvaluationSummary> infer_seed_set(const PolicyModel& model, const Instance& inst, double budget,
                                                            std::size_t m, std::uint64_t seed, double tau = 0.0) {
    auto s = infer_seed_set(model, inst, budget);
    auto summary = evaluate_seed_set(inst.graph, inst.attrs, inst.communities, s, m, seed, tau);
    return {std::move(s), summary};
}

} // namespace fpm
