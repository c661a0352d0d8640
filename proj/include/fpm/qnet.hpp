#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "fpm/embedding.hpp"
#include "fpm/error.hpp"
#include "fpm/graph.hpp"
#include "fpm/rng.hpp"

namespace fpm {

inline constexpr std::size_t state_tail_size = 3;
inline constexpr std::size_t default_hidden_dim = 128;

/// [h_candidate | cost/B | remaining/B | seed_count/k_max]
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(std::vector<double> values) : values_(std::move(values)) {}

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

/// Largest seed count any budget-feasible set can reach: floor(B / min cost).
inline std::size_t max_seed_count(double budget, double min_cost) {
    if (!(budget > 0.0) || !(min_cost > 0.0)) throw std::invalid_argument("budget and min cost must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(budget / min_cost)));
}

inline std::array<double, state_tail_size> state_tail(double candidate_cost, double remaining_budget,
                                                      std::size_t seed_count, double budget, std::size_t k_max) {
    return {candidate_cost / budget, remaining_budget / budget,
            static_cast<double>(seed_count) / static_cast<double>(k_max)};
}

inline StateVector encode_state(NodeId candidate, const NodeEmbeddings& h, std::size_t seed_count,
                                double remaining_budget, const NodeAttrs& attrs, double budget, std::size_t k_max) {
    if (candidate >= attrs.size()) throw std::invalid_argument("candidate out of range");
    if (!(budget > 0.0) || k_max < 1) throw std::invalid_argument("budget must be positive and k_max >= 1");
    auto emb = h.of(candidate);
    std::vector<double> v(emb.begin(), emb.end());
    for (double x : state_tail(attrs.cost[candidate], remaining_budget, seed_count, budget, k_max)) v.push_back(x);
    return StateVector(std::move(v));
}

/// Two-layer value network: relu(W1 s + b1) then a linear readout.
/// Parameters live in one flat buffer [W1 | b1 | W2 | b2] so the Adam moments
/// and gradients share its layout.
class QNetwork {
public:
    QNetwork() = default;

    QNetwork(std::size_t input_dim, std::size_t hidden_dim)
        : input_(input_dim), hidden_(hidden_dim), params_(count(input_dim, hidden_dim), 0.0),
          m_(params_.size(), 0.0), v_(params_.size(), 0.0) {
        if (input_dim < 1 || hidden_dim < 1) throw std::invalid_argument("network dimensions must be >= 1");
    }

    /// Uniform(+-1/sqrt(fan_in)) initialization per layer.
    QNetwork(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) : QNetwork(input_dim, hidden_dim) {
        Rng rng(derive_seed(seed, stream::qnet));
        double b_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
        double b_hid = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
        std::uniform_real_distribution<double> u1(-b_in, b_in), u2(-b_hid, b_hid);
        for (std::size_t i = 0; i < w2_offset(); ++i) params_[i] = u1(rng);
        for (std::size_t i = w2_offset(); i < params_.size(); ++i) params_[i] = u2(rng);
    }

    static std::size_t count(std::size_t input_dim, std::size_t hidden_dim) {
        return hidden_dim * input_dim + 2 * hidden_dim + 1;
    }

    std::size_t input_dim() const noexcept { return input_; }
    std::size_t hidden_dim() const noexcept { return hidden_; }
    std::size_t num_params() const noexcept { return params_.size(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    const std::vector<double>& adam_m() const noexcept { return m_; }
    const std::vector<double>& adam_v() const noexcept { return v_; }
    std::uint64_t adam_steps() const noexcept { return step_; }

    std::size_t b1_offset() const noexcept { return hidden_ * input_; }
    std::size_t w2_offset() const noexcept { return b1_offset() + hidden_; }
    std::size_t b2_offset() const noexcept { return w2_offset() + hidden_; }

    double w1(std::size_t j, std::size_t i) const { return params_[j * input_ + i]; }
    double b1(std::size_t j) const { return params_[b1_offset() + j]; }
    double w2(std::size_t j) const { return params_[w2_offset() + j]; }
    double b2() const { return params_[b2_offset()]; }

    /// Hidden pre-activations for s.
    void hidden_pre(std::span<const double> s, std::span<double> out) const {
        for (std::size_t j = 0; j < hidden_; ++j) {
            const double* row = params_.data() + j * input_;
            double acc = params_[b1_offset() + j];
            for (std::size_t i = 0; i < input_; ++i) acc += row[i] * s[i];
            out[j] = acc;
        }
    }

    /// Readout from hidden pre-activations.
    double readout(std::span<const double> pre) const {
        double out = 0.0;
        for (std::size_t j = 0; j < hidden_; ++j)
            if (pre[j] > 0.0) out += params_[w2_offset() + j] * pre[j];
        return out + params_[b2_offset()];
    }

    double forward(std::span<const double> s) const {
        if (s.size() != input_) throw std::invalid_argument("state size does not match network input");
        std::vector<double> pre(hidden_);
        hidden_pre(s, pre);
        return readout(pre);
    }
    double forward(const StateVector& s) const { return forward(s.values()); }

    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias correction.
    void adam_step(std::span<const double> grads, double alpha) {
        if (grads.size() != params_.size()) throw std::invalid_argument("gradient shape mismatch");
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++step_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i] = beta1 * m_[i] + (1.0 - beta1) * grads[i];
            v_[i] = beta2 * v_[i] + (1.0 - beta2) * grads[i] * grads[i];
            params_[i] -= alpha * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
        }
    }

    void set_optimizer_state(std::vector<double> m, std::vector<double> v, std::uint64_t steps) {
        if (m.size() != params_.size() || v.size() != params_.size()) throw std::invalid_argument("optimizer state shape mismatch");
        m_ = std::move(m);
        v_ = std::move(v);
        step_ = steps;
    }

private:
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t step_ = 0;
};

struct QSample {
    StateVector state;
    double target;
};

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grads;
};

/// Mean squared error (1/K) sum (y - Q(s))^2 and its gradient by backprop.
/// The relu subgradient at 0 is 0.
inline LossAndGrad q_loss_and_grad(const QNetwork& net, std::span<const QSample> batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::size_t in = net.input_dim(), hid = net.hidden_dim();
    const double k = static_cast<double>(batch.size());
    LossAndGrad out;
    out.grads.assign(net.num_params(), 0.0);
    std::vector<double> pre(hid);
    for (const auto& sample : batch) {
        auto s = sample.state.values();
        if (s.size() != in) throw std::invalid_argument("state size does not match network input");
        net.hidden_pre(s, pre);
        double q = net.readout(pre);
        double err = q - sample.target;
        out.loss += err * err / k;
        double dq = 2.0 * err / k;
        out.grads[net.b2_offset()] += dq;
        for (std::size_t j = 0; j < hid; ++j) {
            if (!(pre[j] > 0.0)) continue;
            out.grads[net.w2_offset() + j] += dq * pre[j];
            double dpre = dq * net.w2(j);
            out.grads[net.b1_offset() + j] += dpre;
            double* row = out.grads.data() + j * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += dpre * s[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

/// A trained policy: the value network plus the fixed embedding it reads.
struct PolicyModel {
    QNetwork net;
    EmbeddingParams embedding;
    std::size_t embedding_iterations = 3;
};

struct Architecture {
    std::size_t input_dim;
    std::size_t hidden_dim;
    std::size_t embedding_dim;
    std::size_t embedding_iterations;
};

inline Architecture architecture_of(const PolicyModel& m) {
    return {m.net.input_dim(), m.net.hidden_dim(), m.embedding.dim, m.embedding_iterations};
}

inline std::uint64_t config_hash(const Architecture& a, std::uint64_t embedding_seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t x : {std::uint64_t{a.input_dim}, std::uint64_t{a.hidden_dim}, std::uint64_t{a.embedding_dim},
                            std::uint64_t{a.embedding_iterations}, embedding_seed}) {
        for (int byte = 0; byte < 8; ++byte) {
            h ^= (x >> (8 * byte)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

namespace detail {

inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw DataError("checkpoint: bad number '" + s + "'");
    return x;
}

} // namespace detail

inline constexpr const char* checkpoint_magic = "fpm-qnet";
inline constexpr int checkpoint_version = 1;

inline void write_checkpoint(std::ostream& os, const PolicyModel& model) {
    auto arch = architecture_of(model);
    os << checkpoint_magic << ' ' << checkpoint_version << '\n'
       << "input_dim " << arch.input_dim << '\n'
       << "hidden_dim " << arch.hidden_dim << '\n'
       << "embedding_dim " << arch.embedding_dim << '\n'
       << "embedding_iterations " << arch.embedding_iterations << '\n'
       << "embedding_seed " << model.embedding.seed << '\n'
       << "config_hash " << config_hash(arch, model.embedding.seed) << '\n'
       << "adam_steps " << model.net.adam_steps() << '\n';
    auto block = [&](const char* name, std::span<const double> xs) {
        os << name << ' ' << xs.size() << '\n';
        for (double x : xs) os << detail::format_double(x) << '\n';
    };
    block("params", model.net.params());
    block("adam_m", model.net.adam_m());
    block("adam_v", model.net.adam_v());
}

inline void save_checkpoint(const std::string& path, const PolicyModel& model) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write checkpoint '" + path + "'");
    write_checkpoint(os, model);
    if (!os) throw DataError("failed writing checkpoint '" + path + "'");
}

/// Throws CheckpointMismatch when the stored architecture disagrees with
/// `expected`, or when the stored shapes and hash are inconsistent.
inline PolicyModel read_checkpoint(std::istream& is, const Architecture* expected = nullptr) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != checkpoint_magic) throw DataError("not a checkpoint file");
    if (version != checkpoint_version) throw CheckpointMismatch("unsupported checkpoint version " + std::to_string(version));
    auto field = [&](const char* name) {
        std::string key;
        std::uint64_t value = 0;
        if (!(is >> key >> value) || key != name) throw DataError(std::string("checkpoint: expected field ") + name);
        return value;
    };
    Architecture arch{};
    arch.input_dim = field("input_dim");
    arch.hidden_dim = field("hidden_dim");
    arch.embedding_dim = field("embedding_dim");
    arch.embedding_iterations = field("embedding_iterations");
    std::uint64_t emb_seed = field("embedding_seed");
    std::uint64_t hash = field("config_hash");
    std::uint64_t steps = field("adam_steps");

    if (hash != config_hash(arch, emb_seed)) throw CheckpointMismatch("checkpoint config hash does not match its header");
    if (arch.input_dim != arch.embedding_dim + state_tail_size)
        throw CheckpointMismatch("checkpoint input dimension inconsistent with embedding dimension");
    if (expected && (expected->input_dim != arch.input_dim || expected->hidden_dim != arch.hidden_dim ||
                     expected->embedding_dim != arch.embedding_dim ||
                     expected->embedding_iterations != arch.embedding_iterations))
        throw CheckpointMismatch("checkpoint architecture does not match the configured network");

    const std::size_t n = QNetwork::count(arch.input_dim, arch.hidden_dim);
    auto block = [&](const char* name) {
        if (field(name) != n) throw CheckpointMismatch(std::string("checkpoint block ") + name + " has the wrong size");
        std::vector<double> xs(n);
        std::string tok;
        for (auto& x : xs) {
            if (!(is >> tok)) throw DataError("checkpoint truncated");
            x = detail::parse_double(tok);
        }
        return xs;
    };
    PolicyModel model;
    model.net = QNetwork(arch.input_dim, arch.hidden_dim);
    auto params = block("params");
    std::copy(params.begin(), params.end(), model.net.params().begin());
    auto m = block("adam_m");
    auto v = block("adam_v");
    model.net.set_optimizer_state(std::move(m), std::move(v), steps);
    model.embedding = init_embedding_params(arch.embedding_dim, emb_seed);
    model.embedding_iterations = arch.embedding_iterations;
    return model;
}

inline PolicyModel load_checkpoint(const std::string& path, const Architecture* expected = nullptr) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(is, expected);
}

} // namespace fpm
