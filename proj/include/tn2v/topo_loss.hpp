#pragma once

#include "common.hpp"
#include "graph.hpp"
#include "persistence.hpp"
#include "skipgram.hpp"
#include "transport.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace tn2v {

struct TopoLossConfig {
    std::optional<double> epsilon; // unset: epsilon_factor * mean squared target gap, per dim
    double epsilon_factor = 1e-2;
    std::vector<int> dims{1};
    std::vector<double> dim_weights; // empty means unit weights
    FiltrationParams filtration;
    EntropicOptions solver;
    GradientOptions gradient;

    void validate() const {
        require(!dims.empty(), "topological loss needs at least one homology dimension");
        for (int d : dims) require(d == 1 || d == 2, "topological loss dims must be 1 or 2");
        for (std::size_t a = 0; a < dims.size(); ++a)
            for (std::size_t b = a + 1; b < dims.size(); ++b)
                require(dims[a] != dims[b], "duplicate homology dimension in topological loss");
        require(!epsilon || (*epsilon > 0.0 && std::isfinite(*epsilon)), "epsilon must be positive");
        require(epsilon_factor > 0.0 && std::isfinite(epsilon_factor), "epsilon_factor must be positive");
        require(dim_weights.empty() || dim_weights.size() == dims.size(),
                "dim_weights must match dims in length");
        for (double w : dim_weights) require(w >= 0.0 && std::isfinite(w), "dim weights must be nonnegative");
        require(solver.tol > 0.0, "solver tol must be positive");
        require(solver.max_iter >= 1, "solver max_iter must be >= 1");
        filtration.validate();
    }

    int max_dim() const { return *std::max_element(dims.begin(), dims.end()); }
    double weight(std::size_t k) const { return dim_weights.empty() ? 1.0 : dim_weights[k]; }
};

// Derivative of a Rips edge length with respect to its endpoints:
// d|p_i - p_j| / dp_i = (p_i - p_j) / |p_i - p_j|, and the negative for p_j.
inline std::pair<RowVector, RowVector> edge_length_partial(const Edge& e, const Matrix& points) {
    require(e.valid(), "critical edge is missing");
    const RowVector diff = points.row(e.i) - points.row(e.j);
    const double len = diff.norm();
    if (!(len > 0.0)) throw InvalidInput("critical edge has coincident endpoints");
    RowVector u = diff / len;
    return {u, -u};
}

struct BirthDeathPartial {
    RowVector birth; // d b / d p
    RowVector death; // d d / d p
};

// Sparse map vertex -> (db/dp, dd/dp) for one diagram point.
inline std::map<Eigen::Index, BirthDeathPartial> rips_point_partial(const DiagramPoint& x, const Matrix& points) {
    const Eigen::Index m = points.cols();
    std::map<Eigen::Index, BirthDeathPartial> out;
    auto slot = [&](Eigen::Index v) -> BirthDeathPartial& {
        auto it = out.find(v);
        if (it == out.end()) it = out.emplace(v, BirthDeathPartial{RowVector::Zero(m), RowVector::Zero(m)}).first;
        return it->second;
    };
    if (x.birth_edge.valid()) {
        const auto [gi, gj] = edge_length_partial(x.birth_edge, points);
        slot(x.birth_edge.i).birth += gi;
        slot(x.birth_edge.j).birth += gj;
    }
    const auto [gi, gj] = edge_length_partial(x.death_edge, points);
    slot(x.death_edge.i).death += gi;
    slot(x.death_edge.j).death += gj;
    return out;
}

struct PointGradient {
    Matrix grads; // n x m, aligned with embedding rows
};

struct TopoLossResult {
    double value = 0.0;
    std::vector<double> per_dim; // aligned with cfg.dims
    std::optional<PointGradient> gradient;
    std::vector<PersistenceDiagram> diagrams; // embedding diagrams 0..max_dim
    int gp_warnings = 0;                      // tied pairwise distances in the embedding
    bool converged = true;
};

// L1 against a fixed target. Target diagrams and their self terms are
// computed once; each evaluation recomputes the embedding diagram.
class TopologicalLoss {
public:
    TopologicalLoss(std::vector<PersistenceDiagram> target, TopoLossConfig cfg)
        : cfg_(std::move(cfg)), target_(std::move(target)) {
        cfg_.validate();
        for (int d : cfg_.dims) {
            require(d < static_cast<int>(target_.size()), "target diagrams do not cover requested dims");
            const PDPointSet beta(target_[d]);
            const double eps = cfg_.epsilon ? *cfg_.epsilon : default_epsilon(beta, cfg_.epsilon_factor);
            targets_.push_back(beta);
            eps_.push_back(eps);
            self_.push_back(fg_entropic_self(beta, eps, cfg_.solver));
        }
    }

    static TopologicalLoss from_graph(const WeightedGraph& g, const TopoLossConfig& cfg) {
        cfg.validate();
        return TopologicalLoss(diagram_of_graph(g, cfg.filtration, cfg.max_dim()), cfg);
    }

    const TopoLossConfig& config() const { return cfg_; }
    const std::vector<PersistenceDiagram>& target() const { return target_; }
    double epsilon(std::size_t k) const { return eps_[k]; }

    TopoLossResult evaluate(const Matrix& points, bool with_gradient) const {
        TopoLossResult r;
        const Eigen::Index n = points.rows();
        if (with_gradient) r.gradient = PointGradient{Matrix::Zero(n, points.cols())};
        const Matrix dist = pairwise_distances(points);
        r.gp_warnings = static_cast<int>(check_general_position(dist).duplicates.size());
        r.diagrams = rips_diagram(dist, cfg_.max_dim());
        for (std::size_t k = 0; k < cfg_.dims.size(); ++k) {
            const PersistenceDiagram& emb = r.diagrams[cfg_.dims[k]];
            const PDPointSet alpha(emb);
            const double w = cfg_.weight(k);
            const auto both = sfg_with_gradient(alpha, targets_[k], eps_[k], cfg_.solver, self_[k], cfg_.gradient);
            const auto& div = both.divergence;
            r.converged = r.converged && div.converged;
            r.per_dim.push_back(div.value);
            r.value += w * div.value;
            if (!with_gradient || w == 0.0 || alpha.empty()) continue;
            const auto& zeta = both.gradient;
            for (std::size_t i = 0; i < emb.size(); ++i) {
                for (const auto& [v, part] : rips_point_partial(emb.points[i], points))
                    r.gradient->grads.row(v) += w * (zeta.grad[i].b * part.birth + zeta.grad[i].d * part.death);
            }
        }
        return r;
    }

private:
    TopoLossConfig cfg_;
    std::vector<PersistenceDiagram> target_;
    std::vector<PDPointSet> targets_;
    std::vector<double> eps_;
    std::vector<EntropicResult> self_;
};

inline double loss_L1(const std::vector<PersistenceDiagram>& target, const ModelParams& params,
                      const TopoLossConfig& cfg) {
    return TopologicalLoss(target, cfg).evaluate(params.embedding(), false).value;
}

inline PointGradient grad_L1(const std::vector<PersistenceDiagram>& target, const ModelParams& params,
                             const TopoLossConfig& cfg) {
    return *TopologicalLoss(target, cfg).evaluate(params.embedding(), true).gradient;
}

} // namespace tn2v
