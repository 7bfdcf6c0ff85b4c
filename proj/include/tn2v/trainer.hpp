#pragma once

#include "common.hpp"
#include "graph.hpp"
#include "persistence.hpp"
#include "rng.hpp"
#include "skipgram.hpp"
#include "topo_loss.hpp"
#include "walks.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace tn2v {

// Fraction of vertices used per epoch: constant, or a linear ramp from
// `start` to `end` over `ramp_epochs` epochs (0: the whole budget), then
// held at `end`.
struct MinibatchSchedule {
    enum class Kind { constant, linear };
    Kind kind = Kind::constant;
    double start = 1.0;
    double end = 1.0;
    int ramp_epochs = 0;

    static MinibatchSchedule constant_fraction(double f) { return {Kind::constant, f, f, 0}; }
    static MinibatchSchedule linear_ramp(double from, double to, int over = 0) { return {Kind::linear, from, to, over}; }

    double fraction(int epoch, int epochs) const {
        const int span = ramp_epochs > 0 ? ramp_epochs : epochs;
        if (kind == Kind::constant || span <= 1) return kind == Kind::constant ? start : end;
        const double t = std::clamp(static_cast<double>(epoch) / (span - 1), 0.0, 1.0);
        return start + (end - start) * t;
    }

    void validate() const {
        require(start > 0.0 && start <= 1.0, "minibatch fractions must lie in (0, 1]");
        require(kind == Kind::constant || (end > 0.0 && end <= 1.0), "minibatch fractions must lie in (0, 1]");
        require(ramp_epochs >= 0, "ramp_epochs must be >= 0");
    }
};

struct ConvergenceCriterion {
    int window = 50;
    double threshold = 1e-5; // relative improvement of the combined loss over the window
};

struct TrainConfig {
    double eta = 0.05;
    double eta_decay = 0.0; // eta_k = eta / (1 + eta_decay * k)
    double lambda0 = 1.0;
    double lambda1 = 1.0;
    int epochs = 3000;
    int dim = 2; // embedding dimension m
    MinibatchSchedule minibatch;
    WalkConfig walk;
    TopoLossConfig topo;
    std::uint64_t seed = 0;
    ConvergenceCriterion convergence;

    void validate() const {
        require(eta > 0.0 && std::isfinite(eta), "learning rate must be positive");
        require(eta_decay >= 0.0, "eta_decay must be >= 0");
        require(lambda0 >= 0.0 && lambda1 >= 0.0, "loss weights must be nonnegative");
        require(lambda0 + lambda1 > 0.0, "at least one loss weight must be positive");
        require(epochs >= 0, "epoch budget must be >= 0");
        require(dim >= 1, "embedding dimension must be >= 1");
        require(convergence.window >= 1, "convergence window must be >= 1");
        require(convergence.threshold >= 0.0, "convergence threshold must be >= 0");
        minibatch.validate();
        walk.validate();
        topo.validate();
    }

    double learning_rate(int epoch) const { return eta / (1.0 + eta_decay * epoch); }
};

struct EpochMetrics {
    int epoch = 0;
    double L0 = 0.0;
    double L1 = 0.0;
    double combined = 0.0;
    double grad_norm_W1 = 0.0;
    double grad_norm_W2 = 0.0;
    double batch_fraction = 1.0;
    int batch_size = 0;
    int gp_warnings = 0;
    int solver_unconverged = 0;
    double millis = 0.0;
};

struct TrainState {
    ModelParams params;
    int epoch = 0;
    std::vector<EpochMetrics> metrics;
};

// ceil(fraction * n) distinct vertices, uniformly without replacement, sorted.
inline std::vector<Eigen::Index> minibatch_select(Eigen::Index n, double fraction, Rng& rng) {
    require(fraction > 0.0 && fraction <= 1.0, "minibatch fraction must lie in (0, 1]");
    auto all = all_vertices(n);
    if (fraction >= 1.0) return all;
    const auto k = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(all[i], all[j]);
    }
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
}

// Gradients applied in one epoch, exposed for inspection.
struct EpochGradients {
    ParamGradient L0;
    Matrix L1_W1; // n x m, zero outside the batch
    std::vector<Eigen::Index> batch;
};

// One step of  Theta <- Theta - eta (lambda0 grad L0 + lambda1 grad L1).
// Both losses see the same vertex subsample; L1 is evaluated on the
// sub-cloud of batch rows against the full target diagram.
inline EpochMetrics train_epoch(TrainState& state, const Matrix& T, const TopologicalLoss* topo, const TrainConfig& cfg,
                                EpochGradients* captured = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams& p = state.params;
    const Eigen::Index n = p.vertices(), m = p.dim();
    EpochMetrics mt;
    mt.epoch = state.epoch;
    mt.batch_fraction = cfg.minibatch.fraction(state.epoch, cfg.epochs);
    Rng rng(derive_seed(cfg.seed, {0x6d62'0000ULL, static_cast<std::uint64_t>(state.epoch)}));
    const auto batch = minibatch_select(n, mt.batch_fraction, rng);
    mt.batch_size = static_cast<int>(batch.size());

    ParamGradient g0{Matrix::Zero(n, m), Matrix::Zero(m, n)};
    if (cfg.lambda0 > 0.0) {
        mt.L0 = loss_L0(T, p, batch);
        g0 = grad_L0(T, p, batch);
    }
    Matrix g1 = Matrix::Zero(n, m);
    if (cfg.lambda1 > 0.0) {
        require(topo != nullptr, "topological loss requested without a target");
        Matrix sub(static_cast<Eigen::Index>(batch.size()), m);
        for (std::size_t k = 0; k < batch.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = p.W1.row(batch[k]);
        const auto r = topo->evaluate(sub, true);
        mt.L1 = r.value;
        mt.gp_warnings = r.gp_warnings;
        mt.solver_unconverged = r.converged ? 0 : 1;
        for (std::size_t k = 0; k < batch.size(); ++k) g1.row(batch[k]) = r.gradient->grads.row(static_cast<Eigen::Index>(k));
    }
    mt.combined = cfg.lambda0 * mt.L0 + cfg.lambda1 * mt.L1;

    const Matrix gW1 = cfg.lambda0 * g0.W1 + cfg.lambda1 * g1;
    const Matrix gW2 = cfg.lambda0 * g0.W2;
    mt.grad_norm_W1 = gW1.norm();
    mt.grad_norm_W2 = gW2.norm();
    if (!gW1.allFinite() || !gW2.allFinite() || !std::isfinite(mt.combined))
        throw RuntimeAbort("non-finite gradient or loss at epoch " + std::to_string(state.epoch) +
                           " (learning rate too high?)");
    const double eta = cfg.learning_rate(state.epoch);
    if (cfg.lambda0 > 0.0 || cfg.lambda1 > 0.0) p.W1 -= eta * gW1;
    if (cfg.lambda0 > 0.0) p.W2 -= eta * gW2;
    if (!p.finite())
        throw RuntimeAbort("parameters became non-finite at epoch " + std::to_string(state.epoch) +
                           " (learning rate too high?)");

    if (captured) *captured = {std::move(g0), std::move(g1), batch};
    mt.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    state.metrics.push_back(mt);
    ++state.epoch;
    return mt;
}

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetrics> metrics;
    std::vector<PersistenceDiagram> target; // empty when lambda1 == 0
    bool converged = false;
};

struct TrainHooks {
    std::function<void(const TrainState&, const EpochMetrics&)> on_epoch;
};

// Relative improvement of the combined loss over the last `window` epochs.
inline bool has_converged(const std::vector<EpochMetrics>& metrics, const ConvergenceCriterion& c) {
    const auto k = metrics.size();
    if (k <= static_cast<std::size_t>(c.window)) return false;
    const double now = metrics[k - 1].combined;
    const double then = metrics[k - 1 - c.window].combined;
    const double denom = std::max(std::abs(then), 1e-300);
    return (then - now) / denom < c.threshold && (then - now) / denom > -c.threshold;
}

inline TrainResult train(const WeightedGraph& g, const TrainConfig& cfg, const TrainHooks& hooks = {},
                         std::optional<ModelParams> init = std::nullopt) {
    cfg.validate();
    TrainResult out;
    TrainState state;
    state.params = init ? *init : init_params(g.size(), cfg.dim, cfg.seed);
    require(state.params.vertices() == g.size() && state.params.dim() == cfg.dim,
            "initial parameters do not match the graph and embedding dimension");

    std::optional<TopologicalLoss> topo;
    if (cfg.lambda1 > 0.0) {
        topo.emplace(TopologicalLoss::from_graph(g, cfg.topo));
        out.target = topo->target();
    }
    WalkConfig walk = cfg.walk;
    walk.seed = derive_seed(cfg.seed, {0x7a1c'0000ULL, walk.seed});
    Matrix T;
    if (walk.infinite()) T = generate_neighborhoods(g, walk);

    while (state.epoch < cfg.epochs) {
        if (!walk.infinite()) T = generate_neighborhoods(g, walk, static_cast<std::uint64_t>(state.epoch));
        const auto mt = train_epoch(state, T, topo ? &*topo : nullptr, cfg);
        if (hooks.on_epoch) hooks.on_epoch(state, mt);
        if (has_converged(state.metrics, cfg.convergence)) {
            out.converged = true;
            break;
        }
    }
    out.params = std::move(state.params);
    out.metrics = std::move(state.metrics);
    return out;
}

} // namespace tn2v
