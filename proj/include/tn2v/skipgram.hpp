#pragma once

#include "common.hpp"
#include "rng.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace tn2v {

// Skip-gram parameters: W1 is n x m (its rows are the embedding), W2 is m x n.
struct ModelParams {
    Matrix W1;
    Matrix W2;

    Eigen::Index vertices() const { return W1.rows(); }
    Eigen::Index dim() const { return W1.cols(); }

    // The embedding is W1 itself; rows are points in R^m.
    const Matrix& embedding() const { return W1; }

    bool finite() const { return W1.allFinite() && W2.allFinite(); }
};

struct ParamGradient {
    Matrix W1;
    Matrix W2;
};

inline ModelParams init_params(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
    require(n >= 1 && m >= 1, "init_params requires n, m >= 1");
    Rng rng(derive_seed(seed, {0x5eed'0001ULL}));
    ModelParams p{Matrix(n, m), Matrix(m, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) p.W1(i, j) = rng.uniform_open(-1.0, 1.0);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) p.W2(i, j) = rng.uniform_open(-1.0, 1.0);
    return p;
}

inline std::vector<Eigen::Index> all_vertices(Eigen::Index n) {
    std::vector<Eigen::Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Eigen::Index{0});
    return v;
}

inline double log_sum_exp(const RowVector& u) {
    const double mx = u.maxCoeff();
    return mx + std::log((u.array() - mx).exp().sum());
}

inline RowVector softmax(const RowVector& u) {
    RowVector e = (u.array() - u.maxCoeff()).exp();
    return e / e.sum();
}

// Logits u_v = W1(v, .) * W2.
inline RowVector logits(Eigen::Index v, const ModelParams& params) { return params.W1.row(v) * params.W2; }

// Predicted neighborhood C_v = softmax(u_v).
inline RowVector predict_neighborhood(Eigen::Index v, const ModelParams& params) {
    return softmax(logits(v, params));
}

// Sum over the batch of the cross-entropy H(T_v, C_v), evaluated as
// -<T_v, u_v> + |T_v| * logsumexp(u_v). The |T_v| factor is 1 for proper
// distributions and 0 for isolated vertices (0 log 0 = 0).
inline double loss_L0(const Matrix& T, const ModelParams& params, std::span<const Eigen::Index> batch) {
    double total = 0.0;
    for (Eigen::Index v : batch) {
        const RowVector u = logits(v, params);
        const double mass = T.row(v).sum();
        if (mass == 0.0) continue;
        total += -T.row(v).dot(u) + mass * log_sum_exp(u);
    }
    return total;
}

inline double loss_L0(const Matrix& T, const ModelParams& params) {
    const auto all = all_vertices(params.vertices());
    return loss_L0(T, params, all);
}

// Closed-form gradient of loss_L0 restricted to a batch. W1 rows outside the
// batch receive zero; the W2 gradient sums only over batch vertices.
inline ParamGradient grad_L0(const Matrix& T, const ModelParams& params, std::span<const Eigen::Index> batch) {
    const Eigen::Index n = params.vertices();
    const Eigen::Index m = params.dim();
    ParamGradient g{Matrix::Zero(n, m), Matrix::Zero(m, n)};
    for (Eigen::Index v : batch) {
        const double mass = T.row(v).sum();
        if (mass == 0.0) continue;
        const RowVector residual = mass * predict_neighborhood(v, params) - T.row(v);
        g.W1.row(v) = (params.W2 * residual.transpose()).transpose();
        g.W2.noalias() += params.W1.row(v).transpose() * residual;
    }
    return g;
}

inline ParamGradient grad_L0(const Matrix& T, const ModelParams& params) {
    const auto all = all_vertices(params.vertices());
    return grad_L0(T, params, all);
}

} // namespace tn2v
