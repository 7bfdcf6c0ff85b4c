#pragma once

#include "common.hpp"
#include "csv.hpp"
#include "graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <queue>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace tn2v {

// Unordered vertex pair stored with i < j; i = j = -1 means "none".
struct Edge {
    int i = -1;
    int j = -1;

    static Edge make(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }
    bool valid() const { return i >= 0; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

struct DiagramPoint {
    int dim = 0;
    double birth = 0.0;
    double death = 0.0;
    Edge birth_edge; // none for dimension-0 births
    Edge death_edge;

    double persistence() const { return death - birth; }
};

// Finite points of one homology dimension. The essential H0 class is dropped.
struct PersistenceDiagram {
    int dim = 0;
    std::vector<DiagramPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// Smallest radius at which some vertex is within reach of every other
// vertex. Above it the Rips complex is a cone, so no finite feature lives
// beyond this scale.
inline double enclosing_radius(const Matrix& d) {
    double r = kInf;
    for (Eigen::Index i = 0; i < d.rows(); ++i) r = std::min(r, d.row(i).maxCoeff());
    return d.rows() == 0 ? 0.0 : r;
}

inline void validate_distance_matrix(const Matrix& d) {
    require(d.rows() == d.cols(), "distance matrix must be square");
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        require(d(i, i) == 0.0, "distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
            require(std::isfinite(d(i, j)) && d(i, j) >= 0.0,
                    "distances must be finite and nonnegative at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
            require(d(i, j) == d(j, i),
                    "distance matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

namespace detail {

// Vietoris-Rips persistence by cohomology reduction with clearing and
// implicit coboundaries. Simplices are addressed by their combinatorial
// (colex) index; the filtration order is (diameter, index).
class RipsReducer {
public:
    using Index = std::int64_t;

    RipsReducer(const Matrix& dist, int max_dim, double threshold)
        : d_(dist), n_(static_cast<int>(dist.rows())), max_dim_(max_dim), thr_(threshold) {
        binom_.assign(max_dim_ + 3, std::vector<Index>(n_ + 1, 0));
        for (int v = 0; v <= n_; ++v) {
            binom_[0][v] = 1;
            for (int k = 1; k <= max_dim_ + 2; ++k)
                binom_[k][v] = v == 0 ? 0 : binom_[k][v - 1] + binom_[k - 1][v - 1];
        }
    }

    std::vector<PersistenceDiagram> compute() {
        std::vector<PersistenceDiagram> out(max_dim_ + 1);
        for (int k = 0; k <= max_dim_; ++k) out[k].dim = k;
        if (n_ < 2) return out;

        std::vector<Simplex> columns = reduce_dim0(out[0]);
        for (int k = 1; k <= max_dim_; ++k) {
            std::unordered_set<Index> next_cleared;
            reduce(k, columns, out[k], k < max_dim_ ? &next_cleared : nullptr);
            if (k < max_dim_) columns = assemble_columns(k + 1, next_cleared);
        }
        return out;
    }

private:
    struct Simplex {
        double diam;
        Index idx;
    };
    struct Verts {
        std::array<int, 4> v{};
        int count = 0;
    };

    static bool before(const Simplex& a, const Simplex& b) {
        return a.diam < b.diam || (a.diam == b.diam && a.idx < b.idx);
    }
    struct Later {
        bool operator()(const Simplex& a, const Simplex& b) const { return before(b, a); }
    };
    using MinHeap = std::priority_queue<Simplex, std::vector<Simplex>, Later>;

    Index index_of(const Verts& s) const {
        Index idx = 0;
        for (int t = 0; t < s.count; ++t) idx += binom_[t + 1][s.v[t]];
        return idx;
    }

    Verts vertices_of(Index idx, int k) const {
        Verts s;
        s.count = k + 1;
        int hi = n_;
        for (int t = k; t >= 0; --t) {
            // largest v < hi with C(v, t+1) <= idx
            int lo = t, h = hi - 1;
            while (lo < h) {
                int mid = (lo + h + 1) / 2;
                if (binom_[t + 1][mid] <= idx) lo = mid;
                else h = mid - 1;
            }
            s.v[t] = lo;
            idx -= binom_[t + 1][lo];
            hi = lo;
        }
        return s;
    }

    double diameter(const Verts& s) const {
        double r = 0.0;
        for (int a = 0; a < s.count; ++a)
            for (int b = a + 1; b < s.count; ++b) r = std::max(r, d_(s.v[a], s.v[b]));
        return r;
    }

    // Longest edge; ties go to the lexicographically smallest pair.
    Edge longest_edge(const Verts& s) const {
        Edge e;
        double best = -1.0;
        for (int a = 0; a < s.count; ++a)
            for (int b = a + 1; b < s.count; ++b)
                if (d_(s.v[a], s.v[b]) > best) {
                    best = d_(s.v[a], s.v[b]);
                    e = Edge{s.v[a], s.v[b]};
                }
        return e;
    }

    // Calls visit(cofacet) for every cofacet within the threshold, in
    // increasing index order. visit returns false to stop early.
    template <class Visit>
    void for_each_cofacet(const Simplex& s, int k, Visit&& visit) const {
        const Verts sv = vertices_of(s.idx, k);
        std::array<Index, 5> low{}, high{};
        for (int t = 0; t < sv.count; ++t) low[t + 1] = low[t] + binom_[t + 1][sv.v[t]];
        high[sv.count] = 0;
        for (int t = sv.count - 1; t >= 0; --t) high[t] = high[t + 1] + binom_[t + 2][sv.v[t]];
        int pos = 0;
        for (int v = 0; v < n_; ++v) {
            if (pos < sv.count && sv.v[pos] == v) {
                ++pos;
                continue;
            }
            double diam = s.diam;
            for (int t = 0; t < sv.count; ++t) diam = std::max(diam, d_(v, sv.v[t]));
            if (diam > thr_) continue;
            const Index idx = low[pos] + binom_[pos + 1][v] + high[pos];
            if (!visit(Simplex{diam, idx})) return;
        }
    }

    // Oldest cofacet in filtration order. Cofacet indices increase with the
    // inserted vertex, so the first cofacet of equal diameter is the answer.
    std::optional<Simplex> min_cofacet(const Simplex& s, int k) const {
        std::optional<Simplex> best;
        for_each_cofacet(s, k, [&](const Simplex& c) {
            if (!best || before(c, *best)) best = c;
            return c.diam != s.diam;
        });
        return best;
    }

    // Youngest facet of tau among those sharing its diameter.
    std::optional<Simplex> max_equal_facet(const Simplex& tau, int k) const {
        const Verts tv = vertices_of(tau.idx, k);
        std::optional<Simplex> best;
        for (int omit = 0; omit < tv.count; ++omit) {
            Verts f;
            f.count = tv.count - 1;
            for (int t = 0, u = 0; t < tv.count; ++t)
                if (t != omit) f.v[u++] = tv.v[t];
            const double diam = diameter(f);
            if (diam != tau.diam) continue;
            const Simplex fs{diam, index_of(f)};
            if (!best || before(*best, fs)) best = fs;
        }
        return best;
    }

    // If (sigma, tau) is a zero-persistence apparent pair, returns sigma.
    std::optional<Simplex> apparent_facet(const Simplex& tau, int k_tau) const {
        auto facet = max_equal_facet(tau, k_tau);
        if (!facet) return std::nullopt;
        auto cof = min_cofacet(*facet, k_tau - 1);
        if (cof && cof->idx == tau.idx) return facet;
        return std::nullopt;
    }

    std::vector<Simplex> reduce_dim0(PersistenceDiagram& diagram) {
        std::vector<Simplex> edges;
        for (int j = 1; j < n_; ++j)
            for (int i = 0; i < j; ++i)
                if (d_(i, j) <= thr_) edges.push_back({d_(i, j), binom_[1][i] + binom_[2][j]});
        std::sort(edges.begin(), edges.end(), before);

        std::vector<int> parent(n_);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::vector<Simplex> columns;
        for (const auto& e : edges) {
            const Verts ev = vertices_of(e.idx, 1);
            int a = find(ev.v[0]), b = find(ev.v[1]);
            if (a != b) {
                parent[std::max(a, b)] = std::min(a, b);
                if (e.diam > 0.0) diagram.points.push_back({0, 0.0, e.diam, Edge{}, Edge{ev.v[0], ev.v[1]}});
            } else {
                columns.push_back(e);
            }
        }
        std::reverse(columns.begin(), columns.end());
        return columns;
    }

    std::vector<Simplex> assemble_columns(int k, const std::unordered_set<Index>& cleared) const {
        std::vector<Simplex> cols;
        if (k == 2) {
            for (int l = 2; l < n_; ++l)
                for (int j = 1; j < l; ++j) {
                    const double djl = d_(j, l);
                    if (djl > thr_) continue;
                    for (int i = 0; i < j; ++i) {
                        const double diam = std::max({djl, d_(i, j), d_(i, l)});
                        if (diam > thr_) continue;
                        const Index idx = binom_[1][i] + binom_[2][j] + binom_[3][l];
                        if (!cleared.count(idx)) cols.push_back({diam, idx});
                    }
                }
        } else {
            throw InvalidInput("rips_diagram supports homology dimensions up to 2");
        }
        std::sort(cols.begin(), cols.end(), [](const Simplex& a, const Simplex& b) { return before(b, a); });
        return cols;
    }

    // Pops the pivot of a Z/2 heap column, cancelling paired entries.
    static std::optional<Simplex> pop_pivot(MinHeap& heap) {
        while (!heap.empty()) {
            Simplex top = heap.top();
            heap.pop();
            if (!heap.empty() && heap.top().idx == top.idx) {
                heap.pop();
                continue;
            }
            return top;
        }
        return std::nullopt;
    }

    void reduce(int k, const std::vector<Simplex>& columns, PersistenceDiagram& diagram,
                std::unordered_set<Index>* pivots_out) {
        // pivot -> reduction chain (sum of k-simplices) of the owning column
        std::unordered_map<Index, std::vector<Simplex>> owner;

        auto record = [&](const Simplex& sigma, const Simplex& tau) {
            if (pivots_out) pivots_out->insert(tau.idx);
            if (tau.diam > sigma.diam) {
                const Edge be = longest_edge(vertices_of(sigma.idx, k));
                const Edge de = longest_edge(vertices_of(tau.idx, k + 1));
                diagram.points.push_back({k, sigma.diam, tau.diam, be, de});
            }
        };

        for (const Simplex& sigma : columns) {
            auto tau0 = min_cofacet(sigma, k);
            if (!tau0) continue; // essential class
            if (tau0->diam == sigma.diam) {
                auto facet = max_equal_facet(*tau0, k + 1);
                if (facet && facet->idx == sigma.idx) {
                    record(sigma, *tau0); // apparent pair
                    continue;
                }
            }

            auto chain_of = [&](const Simplex& tau) -> std::optional<std::vector<Simplex>> {
                if (auto it = owner.find(tau.idx); it != owner.end()) return it->second;
                if (auto f = apparent_facet(tau, k + 1); f && f->idx != sigma.idx)
                    return std::vector<Simplex>{*f};
                return std::nullopt;
            };

            if (!chain_of(*tau0)) {
                record(sigma, *tau0);
                owner.emplace(tau0->idx, std::vector<Simplex>{sigma});
                continue;
            }

            MinHeap heap;
            std::vector<Simplex> chain{sigma};
            auto push_coboundary = [&](const Simplex& s) {
                for_each_cofacet(s, k, [&](const Simplex& c) {
                    heap.push(c);
                    return true;
                });
            };
            push_coboundary(sigma);
            std::optional<Simplex> pivot;
            while ((pivot = pop_pivot(heap))) {
                auto other = chain_of(*pivot);
                if (!other) break;
                heap.push(*pivot);
                for (const auto& s : *other) {
                    chain.push_back(s);
                    push_coboundary(s);
                }
            }
            if (!pivot) continue; // cocycle: essential class
            record(sigma, *pivot);
            owner.emplace(pivot->idx, compress(std::move(chain)));
        }
    }

    // Z/2 chain: drop simplices that appear an even number of times.
    static std::vector<Simplex> compress(std::vector<Simplex> chain) {
        std::sort(chain.begin(), chain.end(), [](const Simplex& a, const Simplex& b) { return a.idx < b.idx; });
        std::vector<Simplex> out;
        for (std::size_t i = 0; i < chain.size();) {
            std::size_t j = i;
            while (j < chain.size() && chain[j].idx == chain[i].idx) ++j;
            if ((j - i) % 2 == 1) out.push_back(chain[i]);
            i = j;
        }
        return out;
    }

    const Matrix& d_;
    int n_;
    int max_dim_;
    double thr_;
    std::vector<std::vector<Index>> binom_;
};

} // namespace detail

// Vietoris-Rips persistence diagrams for dimensions 0..max_dim of a finite
// metric given by its distance matrix. Simplices with diameter above
// max_scale (default: the enclosing radius) are omitted. Points with
// death == birth and essential classes are not reported.
inline std::vector<PersistenceDiagram> rips_diagram(const Matrix& distances, int max_dim = 1,
                                                    std::optional<double> max_scale = std::nullopt) {
    validate_distance_matrix(distances);
    require(max_dim >= 0 && max_dim <= 2, "max_dim must be 0, 1 or 2");
    const double thr = max_scale ? *max_scale : enclosing_radius(distances);
    detail::RipsReducer reducer(distances, max_dim, thr);
    return reducer.compute();
}

inline std::vector<PersistenceDiagram> diagram_of_graph(const WeightedGraph& g, const FiltrationParams& fp,
                                                        int max_dim = 1) {
    return rips_diagram(graph_filtration_distances(g, fp), max_dim);
}

inline std::vector<PersistenceDiagram> diagram_of_points(const Matrix& points, int max_dim = 1) {
    return rips_diagram(pairwise_distances(points), max_dim);
}

struct GeneralPositionReport {
    bool general = true;
    std::vector<std::pair<Edge, Edge>> duplicates; // pairs of edges with equal length
};

// Sufficient condition for Rips general position: all pairwise distances
// are distinct.
inline GeneralPositionReport check_general_position(const Matrix& distances) {
    std::vector<std::pair<double, Edge>> all;
    for (Eigen::Index i = 0; i < distances.rows(); ++i)
        for (Eigen::Index j = i + 1; j < distances.cols(); ++j)
            all.push_back({distances(i, j), Edge{static_cast<int>(i), static_cast<int>(j)}});
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    GeneralPositionReport r;
    for (std::size_t t = 1; t < all.size(); ++t)
        if (all[t].first == all[t - 1].first) r.duplicates.push_back({all[t - 1].second, all[t].second});
    r.general = r.duplicates.empty();
    return r;
}

// --- diagram CSV: "dim,birth,death,bi,bj,di,dj" ---
// A leading "# max_dim=K" comment keeps empty trailing dimensions on reload.

inline void write_diagrams(std::ostream& out, const std::vector<PersistenceDiagram>& diagrams) {
    out << "# max_dim=" << static_cast<int>(diagrams.size()) - 1 << '\n';
    out << "dim,birth,death,bi,bj,di,dj\n";
    for (const auto& dgm : diagrams)
        for (const auto& p : dgm.points)
            out << p.dim << ',' << format_double(p.birth) << ',' << format_double(p.death) << ',' << p.birth_edge.i
                << ',' << p.birth_edge.j << ',' << p.death_edge.i << ',' << p.death_edge.j << '\n';
}

inline void write_diagrams(const std::filesystem::path& path, const std::vector<PersistenceDiagram>& diagrams) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_diagrams(out, diagrams);
}

// Returns one diagram per dimension 0..K, where K is the larger of the
// "# max_dim" header and the highest dimension present.
inline std::vector<PersistenceDiagram> read_diagrams(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::vector<PersistenceDiagram> out;
    auto grow = [&](int dim) {
        const int old = static_cast<int>(out.size());
        if (old > dim) return;
        out.resize(dim + 1);
        for (int d = old; d <= dim; ++d) out[d].dim = d;
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = csv::trim(line);
        if (t.rfind("# max_dim=", 0) == 0) {
            double k = 0.0;
            if (csv::parse_double(t.substr(10), k) && k >= 0.0 && k <= 16.0) grow(static_cast<int>(k));
            continue;
        }
        if (t.empty() || t.front() == '#' || t.rfind("dim", 0) == 0) continue;
        auto fields = csv::split(t, ',');
        auto fail = [&] { throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": bad diagram row"); };
        if (fields.size() != 7) fail();
        double v[7];
        for (int f = 0; f < 7; ++f)
            if (!csv::parse_double(fields[f], v[f])) fail();
        DiagramPoint p;
        p.dim = static_cast<int>(v[0]);
        p.birth = v[1];
        p.death = v[2];
        p.birth_edge = Edge{static_cast<int>(v[3]), static_cast<int>(v[4])};
        p.death_edge = Edge{static_cast<int>(v[5]), static_cast<int>(v[6])};
        if (p.dim < 0 || p.dim > 16 || !(p.death > p.birth)) fail();
        grow(p.dim);
        out[p.dim].points.push_back(p);
    }
    return out;
}

} // namespace tn2v
