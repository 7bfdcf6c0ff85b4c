#pragma once

#include "common.hpp"
#include "persistence.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <optional>
#include <vector>

namespace tn2v {

// A point (birth, death) of the upper half-plane.
struct Point2 {
    double b = 0.0;
    double d = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(const Point2& x, const Point2& y) {
    const double db = x.b - y.b, dd = x.d - y.d;
    return db * db + dd * dd;
}

// Diagram reduced to coordinates, with its total persistence
// pers = sum_i (d_i - b_i)^2 / 2 (squared distances to the diagonal).
class PDPointSet {
public:
    PDPointSet() = default;

    explicit PDPointSet(std::vector<Point2> pts) : pts_(std::move(pts)) {
        for (const auto& p : pts_) {
            require(p.d >= p.b, "diagram points must satisfy death >= birth");
            pers_ += 0.5 * (p.d - p.b) * (p.d - p.b);
        }
    }

    explicit PDPointSet(const PersistenceDiagram& dgm) : PDPointSet(coordinates(dgm)) {}

    static std::vector<Point2> coordinates(const PersistenceDiagram& dgm) {
        std::vector<Point2> pts;
        pts.reserve(dgm.size());
        for (const auto& p : dgm.points) pts.push_back({p.birth, p.death});
        return pts;
    }

    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    const Point2& operator[](std::size_t i) const { return pts_[i]; }
    const std::vector<Point2>& points() const { return pts_; }
    double pers() const { return pers_; }

private:
    std::vector<Point2> pts_;
    double pers_ = 0.0;
};

// Orthogonal projection onto the diagonal and the squared distance to it.
inline std::pair<Point2, double> diag_proj(const Point2& x) {
    const double mid = 0.5 * (x.b + x.d);
    const double gap = x.d - x.b;
    return {Point2{mid, mid}, 0.5 * gap * gap};
}

// Partial transport plan: P is N x M with row and column sums at most 1;
// the slack of each row/column is the mass sent to the diagonal.
struct TransportPlan {
    Matrix P;
    Vector row_slack;
    Vector col_slack;

    double total_mass() const { return P.sum(); }
    double row_mass(Eigen::Index i) const { return P.row(i).sum(); }

    static TransportPlan from_matrix(Matrix P) {
        TransportPlan t;
        t.row_slack = Vector::Ones(P.rows()) - P.rowwise().sum();
        t.col_slack = Vector::Ones(P.cols()) - P.colwise().sum().transpose();
        t.P = std::move(P);
        return t;
    }
};

namespace detail {

// Minimum-cost perfect assignment on a square cost matrix (shortest
// augmenting paths with potentials, O(K^3)). Returns row -> column.
inline std::vector<int> hungarian(const Matrix& cost) {
    const int K = static_cast<int>(cost.rows());
    std::vector<double> u(K + 1, 0.0), v(K + 1, 0.0), minv(K + 1);
    std::vector<int> p(K + 1, 0), way(K + 1, 0);
    std::vector<char> used(K + 1);
    for (int i = 1; i <= K; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= K; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= K; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(K, -1);
    for (int j = 1; j <= K; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

inline double log_sum_exp(const double* x, std::size_t n, std::size_t stride) {
    double mx = -kInf;
    for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x[k * stride]);
    if (mx == -kInf) return -kInf;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::exp(x[k * stride] - mx);
    return mx + std::log(s);
}

} // namespace detail

struct ExactResult {
    double value = 0.0;
    TransportPlan plan;
    std::vector<int> match; // alpha index -> beta index, or -1 for the diagonal
};

// Partial matching cost: matched pairs, then unmatched alpha points, then
// unmatched beta points, each in index order.
inline double matching_cost(const PDPointSet& alpha, const PDPointSet& beta, const std::vector<int>& match) {
    double v = 0.0;
    std::vector<char> beta_used(beta.size(), 0);
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (match[i] >= 0) {
            v += squared_distance(alpha[i], beta[match[i]]);
            beta_used[match[i]] = 1;
        }
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (match[i] < 0) v += diag_proj(alpha[i]).second;
    for (std::size_t j = 0; j < beta.size(); ++j)
        if (!beta_used[j]) v += diag_proj(beta[j]).second;
    return v;
}

// Exact squared partial-matching distance FG, solved as an (N+M)x(N+M)
// assignment where every point may also go to its own diagonal projection.
inline ExactResult fg_exact(const PDPointSet& alpha, const PDPointSet& beta) {
    const Eigen::Index N = static_cast<Eigen::Index>(alpha.size());
    const Eigen::Index M = static_cast<Eigen::Index>(beta.size());
    ExactResult r;
    r.match.assign(N, -1);
    if (N > 0 && M > 0) {
        const Eigen::Index K = N + M;
        double scale = 0.0;
        Matrix cost = Matrix::Zero(K, K);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = 0; j < M; ++j) {
                cost(i, j) = squared_distance(alpha[i], beta[j]);
                scale = std::max(scale, cost(i, j));
            }
        for (Eigen::Index i = 0; i < N; ++i) scale = std::max(scale, diag_proj(alpha[i]).second);
        for (Eigen::Index j = 0; j < M; ++j) scale = std::max(scale, diag_proj(beta[j]).second);
        const double forbidden = 4.0 * static_cast<double>(K) * (scale + 1.0);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index t = 0; t < N; ++t) cost(i, M + t) = i == t ? diag_proj(alpha[i]).second : forbidden;
        for (Eigen::Index t = 0; t < M; ++t)
            for (Eigen::Index j = 0; j < M; ++j) cost(N + t, j) = t == j ? diag_proj(beta[j]).second : forbidden;
        const auto assign = detail::hungarian(cost);
        for (Eigen::Index i = 0; i < N; ++i)
            if (assign[i] < M) r.match[i] = assign[i];
    }
    Matrix P = Matrix::Zero(N, M);
    for (Eigen::Index i = 0; i < N; ++i)
        if (r.match[i] >= 0) P(i, r.match[i]) = 1.0;
    r.plan = TransportPlan::from_matrix(std::move(P));
    r.value = matching_cost(alpha, beta, r.match);
    return r;
}

struct EntropicOptions {
    double tol = 1e-9;
    int max_iter = 5000;
};

struct EntropicResult {
    double value = 0.0;  // dual objective at the returned potentials
    double primal = 0.0; // objective evaluated at the returned plan
    TransportPlan plan;
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;
};

// Entropic partial transport between diagrams with the homogeneous
// regularizer  eps * (KL(P | ab^T / pers(alpha)) + KL(P | ab^T / pers(beta))) / 2,
// where a_i, b_j are squared distances to the diagonal. The dual
//   D(f, g) = -eps * sum_ij P_ij - sum f - sum g + const,
//   P_ij = q_ij exp(-(C_ij - a_i - b_j + f_i + g_j) / eps),  f, g >= 0,
// is maximized by eps-scaled coordinate ascent followed by projected Newton.
// Converged when every row/column KKT violation is below tol.
inline EntropicResult fg_entropic(const PDPointSet& alpha, const PDPointSet& beta, double eps,
                                  const EntropicOptions& opt = {}) {
    require(eps > 0.0 && std::isfinite(eps), "entropic parameter must be positive");
    const Eigen::Index N = static_cast<Eigen::Index>(alpha.size());
    const Eigen::Index M = static_cast<Eigen::Index>(beta.size());
    EntropicResult r;
    if (N == 0 || M == 0) {
        r.value = r.primal = alpha.pers() + beta.pers();
        r.plan = TransportPlan::from_matrix(Matrix::Zero(N, M));
        return r;
    }
    const double pa = alpha.pers(), pb = beta.pers();
    require(pa > 0.0 && pb > 0.0, "entropic transport requires positive total persistence");

    Vector a(N), b(M);
    for (Eigen::Index i = 0; i < N; ++i) a(i) = diag_proj(alpha[i]).second;
    for (Eigen::Index j = 0; j < M; ++j) b(j) = diag_proj(beta[j]).second;
    // row-major so that row reductions are contiguous
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor cost(N, M), logq(N, M);
    const double half_log_pers = 0.5 * (std::log(pa) + std::log(pb));
    double cmax = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < M; ++j) {
            cost(i, j) = squared_distance(alpha[i], beta[j]) - a(i) - b(j);
            logq(i, j) = std::log(a(i)) + std::log(b(j)) - half_log_pers;
            cmax = std::max(cmax, std::abs(cost(i, j)));
        }

    Vector f = Vector::Zero(N), g = Vector::Zero(M);
    RowMajor work(N, M);
    std::vector<double> colbuf(N);

    auto row_update = [&](double e) {
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = 0; j < M; ++j) work(i, j) = logq(i, j) - (cost(i, j) + g(j)) / e;
            f(i) = std::max(0.0, e * detail::log_sum_exp(&work(i, 0), M, 1));
        }
    };
    auto col_update = [&](double e) {
        for (Eigen::Index j = 0; j < M; ++j) {
            for (Eigen::Index i = 0; i < N; ++i) colbuf[i] = logq(i, j) - (cost(i, j) + f(i)) / e;
            g(j) = std::max(0.0, e * detail::log_sum_exp(colbuf.data(), N, 1));
        }
    };
    auto plan_at = [&](const Vector& ff, const Vector& gg, RowMajor& P) {
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = 0; j < M; ++j) P(i, j) = std::exp(logq(i, j) - (cost(i, j) + ff(i) + gg(j)) / eps);
    };
    // KKT violation: a positive potential needs an exact marginal, a zero
    // potential only a sub-marginal.
    auto kkt = [&](const Vector& grad, const Vector& x) {
        double res = 0.0;
        for (Eigen::Index k = 0; k < x.size(); ++k)
            res = std::max(res, x(k) > 0.0 ? std::abs(grad(k)) : std::max(0.0, grad(k)));
        return res;
    };

    double e = std::max(eps, cmax);
    while (e > eps) {
        for (int it = 0; it < 5; ++it) {
            row_update(e);
            col_update(e);
        }
        e = std::max(eps, 0.5 * e);
    }
    for (int it = 0; it < 5; ++it) {
        row_update(eps);
        col_update(eps);
    }

    const Eigen::Index K = N + M;
    Vector x(K), grad(K);
    x << f, g;
    RowMajor P(N, M), trial(N, M);
    plan_at(f, g, P);
    int it = 0;
    double res = kInf;
    while (true) {
        grad.head(N) = P.rowwise().sum().array() - 1.0;
        grad.tail(M) = P.colwise().sum().transpose().array() - 1.0;
        res = kkt(grad, x);
        if (res < opt.tol || it >= opt.max_iter) break;
        ++it;

        // free variables: positive, or at the bound with an ascent direction
        std::vector<Eigen::Index> free;
        for (Eigen::Index k = 0; k < K; ++k)
            if (x(k) > 0.0 || grad(k) > 0.0) free.push_back(k);
        const Eigen::Index F = static_cast<Eigen::Index>(free.size());
        Matrix H = Matrix::Zero(F, F);
        Vector rhs(F);
        for (Eigen::Index u = 0; u < F; ++u) {
            const Eigen::Index ku = free[u];
            rhs(u) = grad(ku);
            for (Eigen::Index v = 0; v < F; ++v) {
                const Eigen::Index kv = free[v];
                if (ku == kv) H(u, v) = grad(ku) + 1.0; // row or column sum
                else if (ku < N && kv >= N) H(u, v) = P(ku, kv - N);
                else if (ku >= N && kv < N) H(u, v) = P(kv, ku - N);
            }
        }
        H /= eps;
        const double lm = 1e-10 * (H.diagonal().maxCoeff() + 1.0);
        H.diagonal().array() += lm;
        const Vector step = H.ldlt().solve(rhs);
        Vector dir = Vector::Zero(K);
        for (Eigen::Index u = 0; u < F; ++u) dir(free[u]) = step(u);

        // projected backtracking (Armijo) along the Newton direction; the
        // dual gain is formed from the increments so that it stays accurate
        // when it is far below the dual value itself, while the trial plan is
        // evaluated afresh so that underflowed entries can recover
        auto gain_to = [&](const Vector& xn) {
            double gain = -(xn - x).sum();
            for (Eigen::Index i = 0; i < N; ++i)
                for (Eigen::Index j = 0; j < M; ++j) {
                    const double em = std::expm1(-((xn(i) - x(i)) + (xn(N + j) - x(N + j))) / eps);
                    trial(i, j) = std::exp(logq(i, j) - (cost(i, j) + xn(i) + xn(N + j)) / eps);
                    gain -= eps * (P(i, j) > 0.0 ? P(i, j) * em : trial(i, j));
                }
            return gain;
        };
        double t = 1.0;
        bool accepted = false;
        Vector xn(K);
        for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
            xn = (x + t * dir).cwiseMax(0.0);
            const double gain = gain_to(xn);
            if (std::isfinite(gain) && gain > 0.0 && gain >= 1e-4 * grad.dot(xn - x)) {
                x = xn;
                P.swap(trial);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            f = x.head(N);
            g = x.tail(M);
            row_update(eps);
            col_update(eps);
            x << f, g;
            plan_at(f, g, P);
        }
    }
    f = x.head(N);
    g = x.tail(M);
    r.iterations = it;
    r.residual = res;
    r.converged = res < opt.tol;

    Matrix plan(N, M);
    double kl_part = 0.0, lin = 0.0;
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < M; ++j) {
            const double logp = logq(i, j) - (cost(i, j) + f(i) + g(j)) / eps;
            const double pij = std::exp(logp);
            plan(i, j) = pij;
            lin += pij * cost(i, j);
            if (pij > 0.0) kl_part += pij * (logp - logq(i, j)) - pij;
        }
    const double mass = plan.sum();
    const double constant = pa + pb + 0.5 * eps * (pa + pb);
    r.primal = constant + lin + eps * kl_part;
    r.value = constant - eps * mass - f.sum() - g.sum();
    r.plan = TransportPlan::from_matrix(std::move(plan));
    return r;
}

// Self-transport of a diagram; the optimal plan is symmetric, so the
// computed plan is symmetrized.
inline EntropicResult fg_entropic_self(const PDPointSet& alpha, double eps, const EntropicOptions& opt = {}) {
    EntropicResult r = fg_entropic(alpha, alpha, eps, opt);
    if (r.plan.P.size() > 0) {
        Matrix sym = 0.5 * (r.plan.P + r.plan.P.transpose());
        r.plan = TransportPlan::from_matrix(std::move(sym));
    }
    return r;
}

struct DivergenceResult {
    double value = 0.0;
    double cross = 0.0;     // FG_eps(alpha, beta)
    double self_alpha = 0.0; // FG_eps(alpha, alpha)
    double self_beta = 0.0;  // FG_eps(beta, beta)
    bool converged = true;
};

// Sinkhorn divergence FG_eps(a,b) - FG_eps(a,a)/2 - FG_eps(b,b)/2.
inline DivergenceResult sfg(const PDPointSet& alpha, const PDPointSet& beta, double eps,
                            const EntropicOptions& opt = {}) {
    DivergenceResult r;
    const auto ab = fg_entropic(alpha, beta, eps, opt);
    const auto aa = fg_entropic_self(alpha, eps, opt);
    const auto bb = fg_entropic_self(beta, eps, opt);
    r.cross = ab.value;
    r.self_alpha = aa.value;
    r.self_beta = bb.value;
    r.converged = ab.converged && aa.converged && bb.converged;
    r.value = ab.value - 0.5 * aa.value - 0.5 * bb.value;
    return r;
}

// T(x_i) = 2 * [ proj(x_i) * (1 - M_i(P)) + sum_j P_ij y_j ].
inline std::vector<Point2> barycentric_map(const PDPointSet& alpha, const PDPointSet& beta,
                                           const TransportPlan& plan) {
    require(plan.P.rows() == static_cast<Eigen::Index>(alpha.size()) &&
                plan.P.cols() == static_cast<Eigen::Index>(beta.size()),
            "plan shape does not match the diagrams");
    std::vector<Point2> out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const Point2 proj = diag_proj(alpha[i]).first;
        const double mi = plan.row_mass(static_cast<Eigen::Index>(i));
        Point2 t{proj.b * (1.0 - mi), proj.d * (1.0 - mi)};
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double pij = plan.P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            t.b += pij * beta[j].b;
            t.d += pij * beta[j].d;
        }
        out[i] = {2.0 * t.b, 2.0 * t.d};
    }
    return out;
}

struct GradientOptions {
    // Entropic correction eps * K_i; only switched off to demonstrate that
    // the transport terms alone do not give the gradient.
    bool entropic_term = true;
};

struct DivergenceGradient {
    std::vector<Point2> grad; // d SFG / d(b_i, d_i) per alpha point
    bool converged = true;
};

// Gradient of alpha -> SFG_eps(alpha, beta) with respect to the coordinates
// of the alpha points:
//   T_aa(x_i) - T_ab(x_i) + eps * K_i * (-1, 1),
//   K_i = (d_i - b_i) / (2 pers(alpha)) * (M(P_ab) - M(P_aa))
//         - 2 / (d_i - b_i) * (M_i(P_ab) - M_i(P_aa)).
// For an empty beta, FG_eps(alpha, {}) = pers(alpha) carries no entropic
// constant, which adds -eps * (d_i - b_i) / 2 to K_i.
namespace detail {

inline std::vector<Point2> sfg_gradient_from_plans(const PDPointSet& alpha, const PDPointSet& beta, double eps,
                                                   const EntropicResult& ab, const EntropicResult& aa,
                                                   const GradientOptions& gopt) {
    const auto t_ab = barycentric_map(alpha, beta, ab.plan);
    const auto t_aa = barycentric_map(alpha, alpha, aa.plan);
    const double mass_ab = ab.plan.total_mass();
    const double mass_aa = aa.plan.total_mass();
    std::vector<Point2> grad(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double gap = alpha[i].d - alpha[i].b;
        double k = 0.5 * gap / alpha.pers() * (mass_ab - mass_aa) -
                   2.0 / gap * (ab.plan.row_mass(ii) - aa.plan.row_mass(ii));
        if (beta.empty()) k -= 0.5 * gap;
        if (!gopt.entropic_term) k = 0.0;
        grad[i] = {t_aa[i].b - t_ab[i].b - eps * k, t_aa[i].d - t_ab[i].d + eps * k};
    }
    return grad;
}

} // namespace detail

inline DivergenceGradient grad_sfg(const PDPointSet& alpha, const PDPointSet& beta, double eps,
                                   const EntropicOptions& opt = {}, const GradientOptions& gopt = {}) {
    DivergenceGradient out;
    if (alpha.empty()) return out;
    const auto ab = fg_entropic(alpha, beta, eps, opt);
    const auto aa = fg_entropic_self(alpha, eps, opt);
    out.converged = ab.converged && aa.converged;
    out.grad = detail::sfg_gradient_from_plans(alpha, beta, eps, ab, aa, gopt);
    return out;
}

struct DivergenceWithGradient {
    DivergenceResult divergence;
    DivergenceGradient gradient;
};

// Value and gradient from one pair of solves. self_beta, when given, is a
// precomputed FG_eps(beta, beta).
inline DivergenceWithGradient sfg_with_gradient(const PDPointSet& alpha, const PDPointSet& beta, double eps,
                                                const EntropicOptions& opt = {},
                                                std::optional<EntropicResult> self_beta = std::nullopt,
                                                const GradientOptions& gopt = {}) {
    DivergenceWithGradient out;
    const auto ab = fg_entropic(alpha, beta, eps, opt);
    const auto aa = fg_entropic_self(alpha, eps, opt);
    const auto bb = self_beta ? *self_beta : fg_entropic_self(beta, eps, opt);
    auto& d = out.divergence;
    d.cross = ab.value;
    d.self_alpha = aa.value;
    d.self_beta = bb.value;
    d.converged = ab.converged && aa.converged && bb.converged;
    d.value = ab.value - 0.5 * aa.value - 0.5 * bb.value;
    out.gradient.converged = ab.converged && aa.converged;
    if (!alpha.empty()) out.gradient.grad = detail::sfg_gradient_from_plans(alpha, beta, eps, ab, aa, gopt);
    return out;
}

// Scale-relative default: 1e-2 times the mean squared distance of the
// target points to the diagonal.
inline double default_epsilon(const PDPointSet& target, double factor = 1e-2) {
    if (target.empty()) return factor;
    return factor * target.pers() / static_cast<double>(target.size());
}

} // namespace tn2v
