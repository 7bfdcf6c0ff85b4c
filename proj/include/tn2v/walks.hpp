#pragma once

#include "common.hpp"
#include "graph.hpp"
#include "rng.hpp"

#include <cstdint>
#include <optional>

namespace tn2v {

// Second-order biased random-walk parameters. walks_per_node == kInfiniteWalks
// selects the deterministic mode where T_v is the normalized weight row
// (equivalent to length 1 with infinitely many walks).
struct WalkConfig {
    static constexpr int kInfiniteWalks = 0;

    int length = 1;
    int walks_per_node = kInfiniteWalks;
    double p = 1.0;
    double q = 1.0;
    std::uint64_t seed = 0;

    bool infinite() const { return walks_per_node == kInfiniteWalks; }

    void validate() const {
        require(length >= 1, "walk length must be >= 1");
        require(walks_per_node >= 1 || infinite(), "walks per node must be >= 1 or infinite");
        require(p > 0.0 && std::isfinite(p), "return parameter p must be positive");
        require(q > 0.0 && std::isfinite(q), "in-out parameter q must be positive");
    }
};

// Unnormalized transition bias for the step prev -> curr -> next.
inline double xi(Eigen::Index prev, Eigen::Index curr, Eigen::Index next, const WeightedGraph& g,
                 const WalkConfig& cfg) {
    if (g.weight(curr, next) == 0.0) return 0.0;
    if (next == prev) return 1.0 / cfg.p;
    if (g.weight(prev, next) > 0.0) return 1.0;
    return 1.0 / cfg.q;
}

// Distribution of the next vertex. Without a previous vertex this is the
// normalized weight row of curr. Dead ends give the all-zero vector.
inline Vector step_distribution(std::optional<Eigen::Index> prev, Eigen::Index curr, const WeightedGraph& g,
                                const WalkConfig& cfg) {
    const Eigen::Index n = g.size();
    Vector dist(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = g.weight(curr, j);
        dist(j) = prev ? xi(*prev, curr, j, g, cfg) * w : w;
    }
    const double total = dist.sum();
    if (total > 0.0) dist /= total;
    else dist.setZero();
    return dist;
}

namespace detail {

inline Eigen::Index sample_index(const Vector& dist, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    Eigen::Index last_positive = -1;
    for (Eigen::Index j = 0; j < dist.size(); ++j) {
        if (dist(j) <= 0.0) continue;
        acc += dist(j);
        last_positive = j;
        if (u < acc) return j;
    }
    return last_positive; // rounding: u landed past the accumulated total
}

} // namespace detail

// Rows of the returned n x n matrix are the training neighborhoods T_v.
// Visit counts exclude the start vertex and are normalized by the number of
// steps actually taken. The RNG stream for vertex v is derived from
// (seed, v, epoch), so results do not depend on evaluation order.
inline Matrix generate_neighborhoods(const WeightedGraph& g, const WalkConfig& cfg, std::uint64_t epoch = 0) {
    cfg.validate();
    const Eigen::Index n = g.size();
    Matrix T = Matrix::Zero(n, n);
    if (cfg.infinite()) {
        for (Eigen::Index v = 0; v < n; ++v) {
            const double s = g.weights().row(v).sum();
            if (s > 0.0) T.row(v) = g.weights().row(v) / s;
        }
        return T;
    }
    for (Eigen::Index v = 0; v < n; ++v) {
        Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(v), epoch}));
        double taken = 0.0;
        for (int walk = 0; walk < cfg.walks_per_node; ++walk) {
            std::optional<Eigen::Index> prev;
            Eigen::Index curr = v;
            for (int step = 0; step < cfg.length; ++step) {
                const Vector dist = step_distribution(prev, curr, g, cfg);
                const Eigen::Index next = detail::sample_index(dist, rng);
                if (next < 0) break;
                T(v, next) += 1.0;
                taken += 1.0;
                prev = curr;
                curr = next;
            }
        }
        if (taken > 0.0) T.row(v) /= taken;
    }
    return T;
}

} // namespace tn2v
