#pragma once

#include "common.hpp"
#include "csv.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace tn2v {

// Undirected graph with symmetric nonnegative weights over vertices 0..n-1.
// Zero weight means "no edge".
class WeightedGraph {
public:
    WeightedGraph() = default;

    explicit WeightedGraph(Eigen::Index n) : weights_(Matrix::Zero(n, n)) {}

    explicit WeightedGraph(Matrix weights) : weights_(std::move(weights)) { validate(); }

    Eigen::Index size() const { return weights_.rows(); }
    const Matrix& weights() const { return weights_; }
    double weight(Eigen::Index i, Eigen::Index j) const { return weights_(i, j); }

    void set_weight(Eigen::Index i, Eigen::Index j, double w) {
        require(i != j || w == 0.0, "self-loops must have zero weight");
        require(std::isfinite(w) && w >= 0.0, "edge weight must be finite and nonnegative");
        weights_(i, j) = w;
        weights_(j, i) = w;
    }

private:
    void validate() const {
        require(weights_.rows() == weights_.cols(), "weight matrix must be square");
        for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
            require(weights_(i, i) == 0.0, "weight matrix diagonal must be zero (row " + std::to_string(i) + ")");
            for (Eigen::Index j = i + 1; j < weights_.cols(); ++j) {
                const double w = weights_(i, j);
                require(std::isfinite(w) && w >= 0.0,
                        "weights must be finite and nonnegative at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
                require(w == weights_(j, i), "weight matrix is not symmetric at (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ")");
            }
        }
    }

    Matrix weights_;
};

// Edge (u, v) enters the graph filtration at 1 / (w(u, v) + gamma)^nu.
struct FiltrationParams {
    double nu = 1.0;
    double gamma = 1e-9;

    void validate() const {
        require(nu > 0.0 && std::isfinite(nu), "filtration exponent nu must be positive");
        require(gamma > 0.0 && std::isfinite(gamma), "filtration offset gamma must be positive");
    }
};

// n points in R^m stored as the rows of an n x m matrix.
struct PointCloud {
    Matrix points;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

inline Matrix pairwise_distances(const Matrix& points) {
    const Eigen::Index n = points.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (points.row(i) - points.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

inline Matrix pairwise_distances(const PointCloud& pc) { return pairwise_distances(pc.points); }

inline Matrix graph_filtration_distances(const WeightedGraph& g, const FiltrationParams& fp) {
    fp.validate();
    const Eigen::Index n = g.size();
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = 1.0 / std::pow(g.weight(i, j) + fp.gamma, fp.nu);
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

// Reciprocal-distance graph: w(i, j) = 1 / |p_i - p_j|. With nu = 1 the
// filtration distances reproduce the original distances up to gamma.
inline WeightedGraph pointcloud_to_graph(const PointCloud& pc) {
    const Eigen::Index n = pc.size();
    require(pc.dim() >= 1 || n == 0, "point cloud must have dimension >= 1");
    Matrix w = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = (pc.points.row(i) - pc.points.row(j)).norm();
            if (!(dist > 0.0))
                throw InvalidInput("duplicate points " + std::to_string(i) + " and " + std::to_string(j));
            w(i, j) = 1.0 / dist;
            w(j, i) = w(i, j);
        }
    return WeightedGraph(std::move(w));
}

// Edge list: one "u<TAB>v<TAB>w" per line (any whitespace accepted), 0-based
// ids, '#' comments. A "# n=<int>" (or bare "n=<int>") line fixes the vertex
// count; otherwise n = 1 + max id.
inline WeightedGraph parse_edge_list(std::istream& in, const std::string& source = "<edge list>") {
    std::optional<long long> header_n;
    std::map<std::pair<long long, long long>, double> edges;
    long long max_id = -1;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidInput(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = csv::trim(line);
        if (t.empty()) continue;
        std::string_view body = t;
        const bool comment = body.front() == '#';
        if (comment) body = csv::trim(body.substr(1));
        if (body.rfind("n=", 0) == 0) {
            long long n = -1;
            std::istringstream hs{std::string(body.substr(2))};
            std::string rest;
            if (!(hs >> n) || (hs >> rest) || n < 0) fail("bad vertex-count header");
            header_n = n;
            continue;
        }
        if (comment) continue;

        std::istringstream ls{std::string(body)};
        std::string su, sv, sw, extra;
        if (!(ls >> su >> sv >> sw) || (ls >> extra)) fail("expected 'u v w'");
        long long u = -1, v = -1;
        double w = 0.0;
        try {
            std::size_t pu = 0, pv = 0;
            u = std::stoll(su, &pu);
            v = std::stoll(sv, &pv);
            if (pu != su.size() || pv != sv.size()) fail("vertex ids must be integers");
        } catch (const std::logic_error&) {
            fail("vertex ids must be integers");
        }
        if (!csv::parse_double(sw, w)) fail("weight is not a number");
        if (u < 0 || v < 0) fail("vertex ids must be nonnegative");
        if (!std::isfinite(w) || w < 0.0) fail("weight must be finite and nonnegative");
        if (u == v) {
            if (w > 0.0) fail("self-loop with positive weight");
            max_id = std::max(max_id, u);
            continue;
        }
        auto key = std::minmax(u, v);
        auto [it, inserted] = edges.emplace(std::pair<long long, long long>(key.first, key.second), w);
        if (!inserted && it->second != w)
            fail("conflicting weights for edge (" + std::to_string(key.first) + "," +
                 std::to_string(key.second) + ")");
        max_id = std::max({max_id, u, v});
    }
    long long n = header_n ? *header_n : max_id + 1;
    if (header_n && max_id >= *header_n)
        throw InvalidInput(source + ": vertex id " + std::to_string(max_id) + " exceeds header n=" +
                           std::to_string(*header_n));
    WeightedGraph g(static_cast<Eigen::Index>(n));
    for (const auto& [e, w] : edges) g.set_weight(e.first, e.second, w);
    return g;
}

inline WeightedGraph load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return parse_edge_list(in, path.string());
}

inline void write_edge_list(std::ostream& out, const WeightedGraph& g) {
    out << "# n=" << g.size() << '\n';
    for (Eigen::Index i = 0; i < g.size(); ++i)
        for (Eigen::Index j = i + 1; j < g.size(); ++j)
            if (g.weight(i, j) > 0.0) out << i << '\t' << j << '\t' << format_double(g.weight(i, j)) << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const WeightedGraph& g) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_edge_list(out, g);
}

// Dense weight matrix: CSV rows are matrix rows, no header.
inline WeightedGraph load_weight_matrix(const std::filesystem::path& path) {
    return WeightedGraph(csv::read_matrix(path));
}

inline PointCloud load_point_cloud(const std::filesystem::path& path) {
    PointCloud pc{csv::read_matrix(path)};
    require(pc.size() == 0 || pc.dim() >= 1, "point cloud must have at least one column");
    return pc;
}

inline void write_point_cloud(const std::filesystem::path& path, const PointCloud& pc) {
    csv::write_matrix(path, pc.points);
}

} // namespace tn2v
