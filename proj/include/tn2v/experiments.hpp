#pragma once

#include "common.hpp"
#include "graph.hpp"
#include "persistence.hpp"
#include "rng.hpp"
#include "transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace tn2v {

enum class SyntheticKind { eight_circles, torus, circle };

inline std::string to_string(SyntheticKind k) {
    switch (k) {
    case SyntheticKind::eight_circles: return "eight_circles";
    case SyntheticKind::torus: return "torus";
    case SyntheticKind::circle: return "circle";
    }
    return "?";
}

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "eight_circles") return SyntheticKind::eight_circles;
    if (s == "torus") return SyntheticKind::torus;
    if (s == "circle") return SyntheticKind::circle;
    throw InvalidInput("unknown synthetic kind '" + s + "' (expected eight_circles, torus or circle)");
}

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::eight_circles;
    // eight_circles: `circles` rings of `points_per_circle` points, ring
    // centres on a circle of radius outer_radius; circle: one ring.
    int circles = 8;
    int points_per_circle = 16;
    // torus: grid_u angles around the axis, grid_v around the tube
    int grid_u = 32;
    int grid_v = 16;
    double inner_radius = 1.0; // small circle / tube radius
    double outer_radius = 3.0; // ring of centres / torus major radius
    double jitter = 1e-3;
    std::uint64_t seed = 0;

    void validate() const {
        require(inner_radius > 0.0 && outer_radius > 0.0, "radii must be positive");
        require(jitter >= 0.0 && std::isfinite(jitter), "jitter must be >= 0");
        switch (kind) {
        case SyntheticKind::eight_circles:
            require(circles >= 1 && points_per_circle >= 1, "counts must be positive");
            break;
        case SyntheticKind::circle: require(points_per_circle >= 1, "counts must be positive"); break;
        case SyntheticKind::torus:
            require(grid_u >= 1 && grid_v >= 1, "torus grid must be positive");
            require(inner_radius < outer_radius, "torus tube radius must be below the major radius");
            break;
        }
    }
};

namespace detail {

inline void add_jitter(Matrix& p, double jitter, std::uint64_t seed, std::uint64_t tag) {
    if (jitter == 0.0) return;
    Rng rng(derive_seed(seed, {tag}));
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) += rng.uniform(-jitter, jitter);
}

} // namespace detail

inline PointCloud gen_eight_circles(const SyntheticSpec& spec) {
    spec.validate();
    const int k = spec.circles, per = spec.points_per_circle;
    Matrix p(k * per, 2);
    for (int c = 0; c < k; ++c) {
        const double phi = 2.0 * std::numbers::pi * c / k;
        for (int j = 0; j < per; ++j) {
            const double t = 2.0 * std::numbers::pi * j / per;
            p(c * per + j, 0) = spec.outer_radius * std::cos(phi) + spec.inner_radius * std::cos(t);
            p(c * per + j, 1) = spec.outer_radius * std::sin(phi) + spec.inner_radius * std::sin(t);
        }
    }
    detail::add_jitter(p, spec.jitter, spec.seed, 0xC1C1E5ULL);
    return {p};
}

inline PointCloud gen_circle(const SyntheticSpec& spec) {
    spec.validate();
    const int n = spec.points_per_circle;
    Matrix p(n, 2);
    for (int j = 0; j < n; ++j) {
        const double t = 2.0 * std::numbers::pi * j / n;
        p(j, 0) = spec.inner_radius * std::cos(t);
        p(j, 1) = spec.inner_radius * std::sin(t);
    }
    detail::add_jitter(p, spec.jitter, spec.seed, 0xC1ULL);
    return {p};
}

inline PointCloud gen_torus(const SyntheticSpec& spec) {
    require(spec.inner_radius < spec.outer_radius, "torus tube radius must be below the major radius");
    spec.validate();
    const double R = spec.outer_radius, r = spec.inner_radius;
    Matrix p(spec.grid_u * spec.grid_v, 3);
    for (int a = 0; a < spec.grid_u; ++a) {
        const double u = 2.0 * std::numbers::pi * a / spec.grid_u;
        for (int b = 0; b < spec.grid_v; ++b) {
            const double v = 2.0 * std::numbers::pi * b / spec.grid_v;
            const Eigen::Index row = a * spec.grid_v + b;
            p(row, 0) = (R + r * std::cos(v)) * std::cos(u);
            p(row, 1) = (R + r * std::cos(v)) * std::sin(u);
            p(row, 2) = r * std::sin(v);
        }
    }
    detail::add_jitter(p, spec.jitter, spec.seed, 0x7025ULL);
    return {p};
}

inline PointCloud generate(const SyntheticSpec& spec) {
    switch (spec.kind) {
    case SyntheticKind::eight_circles: return gen_eight_circles(spec);
    case SyntheticKind::torus: return gen_torus(spec);
    case SyntheticKind::circle: return gen_circle(spec);
    }
    throw InvalidInput("unknown synthetic kind");
}

// --- prominence ---

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Points whose persistence exceeds `factor` times the median persistence.
inline int prominent_count(const PersistenceDiagram& d, double factor = 5.0) {
    std::vector<double> pers;
    for (const auto& p : d.points) pers.push_back(p.persistence());
    const double med = median(pers);
    return static_cast<int>(std::count_if(pers.begin(), pers.end(), [&](double x) { return x > factor * med; }));
}

// --- geometry helpers ---

inline double diameter(const Matrix& points) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
    return std::sqrt(best);
}

inline Matrix centered(const Matrix& points) { return points.rowwise() - points.colwise().mean(); }

// Coordinates in the principal-axis frame, ordered by decreasing variance
// (columns: first component, second, ...). For a 3-D cloud the last column
// serves as depth, and for a torus it is the symmetry axis.
inline Matrix principal_coordinates(const Matrix& points) {
    const Matrix c = centered(points);
    const Matrix cov = c.transpose() * c / std::max<Eigen::Index>(1, c.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    const Eigen::Index m = points.cols();
    Matrix basis(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        Vector v = es.eigenvectors().col(m - 1 - k); // descending eigenvalues
        // deterministic sign: largest-magnitude entry positive
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        basis.col(k) = v;
    }
    return c * basis;
}

struct SphereProfile {
    std::vector<double> angles;
    std::vector<double> radii; // normalized by cloud diameter
    int empty_slabs = 0;

    double mean() const {
        if (radii.empty()) return 0.0;
        double s = 0.0;
        for (double r : radii) s += r;
        return s / static_cast<double>(radii.size());
    }
    double coefficient_of_variation() const {
        const double mu = mean();
        if (radii.empty() || mu == 0.0) return kInf;
        double s = 0.0;
        for (double r : radii) s += (r - mu) * (r - mu);
        return std::sqrt(s / static_cast<double>(radii.size())) / mu;
    }
};

// For each of K angles about the z-axis, average the points lying in the
// half-slab |<p, n_theta>| <= w/2 on the ray's side, and record the largest
// empty sphere around that average: min_p |p - c|, divided by the diameter.
// The slab width is slab_fraction times the diameter.
inline SphereProfile inscribed_sphere_profile(const Matrix& pc, int K = 100, double slab_fraction = 0.1) {
    require(pc.cols() == 3, "inscribed sphere profile needs a 3-D cloud");
    require(K >= 4, "profile needs at least 4 angles");
    require(slab_fraction > 0.0, "slab width must be positive");
    SphereProfile out;
    const double diam = diameter(pc);
    require(diam > 0.0, "cloud has zero diameter");
    const double half = 0.5 * slab_fraction * diam;
    for (int k = 0; k < K; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / K;
        const double cx = std::cos(theta), sy = std::sin(theta);
        Eigen::RowVector3d c = Eigen::RowVector3d::Zero();
        int count = 0;
        for (Eigen::Index i = 0; i < pc.rows(); ++i) {
            const double along = cx * pc(i, 0) + sy * pc(i, 1);
            const double across = -sy * pc(i, 0) + cx * pc(i, 1);
            if (along > 0.0 && std::abs(across) <= half) {
                c += pc.row(i);
                ++count;
            }
        }
        out.angles.push_back(theta);
        if (count == 0) {
            ++out.empty_slabs;
            out.radii.push_back(0.0);
            continue;
        }
        c /= count;
        double best = kInf;
        for (Eigen::Index i = 0; i < pc.rows(); ++i) best = std::min(best, (pc.row(i) - c).norm());
        out.radii.push_back(best / diam);
    }
    return out;
}

// --- diagram comparison ---

struct MatchedPair {
    int embedding = -1; // index into the embedding diagram, -1 for the diagonal
    int target = -1;    // index into the target diagram, -1 for the diagonal
    double cost = 0.0;
};

struct DiagramMatchReport {
    double fg_exact = 0.0;
    double sfg = 0.0;
    double epsilon = 0.0;
    bool converged = true;
    std::vector<MatchedPair> pairs;
};

inline DiagramMatchReport diagram_match_report(const PersistenceDiagram& emb, const PersistenceDiagram& target,
                                               double eps, const EntropicOptions& opt = {}) {
    const PDPointSet a(emb), b(target);
    DiagramMatchReport r;
    const auto ex = fg_exact(a, b);
    r.fg_exact = ex.value;
    const auto div = sfg(a, b, eps, opt);
    r.sfg = div.value;
    r.converged = div.converged;
    r.epsilon = eps;
    std::vector<char> used(b.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int j = ex.match[i];
        if (j >= 0) {
            used[j] = 1;
            r.pairs.push_back({static_cast<int>(i), j, squared_distance(a[i], b[j])});
        } else {
            r.pairs.push_back({static_cast<int>(i), -1, diag_proj(a[i]).second});
        }
    }
    for (std::size_t j = 0; j < b.size(); ++j)
        if (!used[j]) r.pairs.push_back({-1, static_cast<int>(j), diag_proj(b[j]).second});
    return r;
}

} // namespace tn2v
