#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fpm/graph.hpp"
#include "fpm/parallel.hpp"
#include "fpm/rng.hpp"

namespace fpm {

/// Fixed random parameters of the mean-field embedding. Row-major matrices.
struct EmbeddingParams {
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> w_feat;  // dim x 2, applied to [cost, benefit]
    std::vector<double> w_agg;   // dim x dim, applied to the neighbor sum
    std::vector<double> w_edge;  // dim, scales the summed incoming edge probability
};

inline EmbeddingParams init_embedding_params(std::size_t dim, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
    EmbeddingParams p;
    p.dim = dim;
    p.seed = seed;
    Rng rng(derive_seed(seed, stream::embedding));
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto fill = [&](std::vector<double>& w, std::size_t count) {
        w.resize(count);
        for (auto& x : w) x = u(rng);
    };
    fill(p.w_feat, dim * 2);
    fill(p.w_agg, dim * dim);
    fill(p.w_edge, dim);
    return p;
}

class NodeEmbeddings {
public:
    NodeEmbeddings() = default;
    NodeEmbeddings(std::size_t n, std::size_t dim, std::size_t iterations)
        : dim_(dim), iterations_(iterations), data_(n * dim, 0.0) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t iterations() const noexcept { return iterations_; }
    std::size_t num_nodes() const noexcept { return dim_ ? data_.size() / dim_ : 0; }
    std::span<const double> of(NodeId v) const { return {data_.data() + v * dim_, dim_}; }
    std::span<double> of(NodeId v) { return {data_.data() + v * dim_, dim_}; }

private:
    std::size_t dim_ = 0;
    std::size_t iterations_ = 0;
    std::vector<double> data_;
};

/// Cost and benefit min-max scaled to [0,1]; constant columns map to 0.
inline std::vector<double> normalized_features(const NodeAttrs& attrs) {
    auto scale = [](const std::vector<double>& x, std::size_t n) {
        std::vector<double> out(n, 0.0);
        if (n == 0) return out;
        auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        double span = *hi - *lo;
        if (span > 0.0)
            for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - *lo) / span;
        return out;
    };
    auto c = scale(attrs.cost, attrs.size());
    auto b = scale(attrs.benefit, attrs.size());
    std::vector<double> f(2 * attrs.size());
    for (std::size_t v = 0; v < attrs.size(); ++v) {
        f[2 * v] = c[v];
        f[2 * v + 1] = b[v];
    }
    return f;
}

/// T rounds of
///   h_v <- relu(W_feat [c_v, b_v] + W_agg sum_{u in N(v)} h_u + w_edge sum_{u in N(v)} p(u,v))
/// from h = 0, where N(v) are the in-neighbors (the full neighborhood when
/// undirected).
inline NodeEmbeddings compute_embeddings(const Graph& g, const NodeAttrs& attrs, const EmbeddingParams& params,
                                         std::size_t iterations) {
    if (iterations < 1) throw std::invalid_argument("embedding needs at least one iteration");
    const std::size_t n = g.num_nodes(), d = params.dim;
    auto features = normalized_features(attrs);

    // input-independent terms: feature projection and edge-probability term
    std::vector<double> base(n * d);
    for (NodeId v = 0; v < n; ++v) {
        double psum = 0.0;
        for (const auto& a : g.in(v)) psum += a.p;
        for (std::size_t k = 0; k < d; ++k)
            base[v * d + k] = params.w_feat[2 * k] * features[2 * v] + params.w_feat[2 * k + 1] * features[2 * v + 1] +
                              params.w_edge[k] * psum;
    }

    NodeEmbeddings cur(n, d, iterations), next(n, d, iterations);
    for (std::size_t t = 0; t < iterations; ++t) {
        parallel_for(n, [&](std::size_t vi) {
            auto v = static_cast<NodeId>(vi);
            std::vector<double> agg(d, 0.0);
            for (const auto& a : g.in(v)) {
                auto hu = cur.of(a.node);
                for (std::size_t k = 0; k < d; ++k) agg[k] += hu[k];
            }
            auto out = next.of(v);
            for (std::size_t k = 0; k < d; ++k) {
                double acc = base[v * d + k];
                const double* row = params.w_agg.data() + k * d;
                for (std::size_t j = 0; j < d; ++j) acc += row[j] * agg[j];
                out[k] = std::max(0.0, acc);
            }
        });
        std::swap(cur, next);
    }
    return cur;
}

} // namespace fpm
