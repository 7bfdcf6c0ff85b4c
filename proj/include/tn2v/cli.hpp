#pragma once

#include "common.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "persistence.hpp"
#include "topo_loss.hpp"
#include "trainer.hpp"
#include "transport.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

// Command implementations behind the tn2v executable. Each returns a process
// exit code: 0 success, 1 usage or input error, 2 runtime abort.

namespace tn2v::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kAbort = 2;

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        body();
        return kOk;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const RuntimeAbort& e) {
        err << "aborted: " << e.what() << '\n';
        return kAbort;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

// TN2V_THREADS: validated and reported; every command currently runs on one
// thread, so values above 1 do not change results.
inline int thread_count_from_env() {
    const char* s = std::getenv("TN2V_THREADS");
    if (!s || !*s) return 1;
    double v = 0.0;
    if (!csv::parse_double(s, v) || v < 1.0 || v != std::floor(v))
        throw InvalidInput("TN2V_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return static_cast<int>(v);
}

inline WeightedGraph load_graph(const InputSpec& in) {
    switch (in.format) {
    case InputFormat::edges: return load_edge_list(in.path);
    case InputFormat::matrix: return load_weight_matrix(in.path);
    case InputFormat::points: return pointcloud_to_graph(load_point_cloud(in.path));
    case InputFormat::synthetic: return pointcloud_to_graph(generate(in.synthetic));
    }
    throw InvalidInput("unknown input format");
}

// .csv defaults to a point cloud, anything else to an edge list.
inline InputFormat guess_format(const std::filesystem::path& p) {
    return p.extension() == ".csv" ? InputFormat::points : InputFormat::edges;
}

// --- generate ---

struct GenerateArgs {
    std::filesystem::path spec;
    std::filesystem::path out_dir = ".";
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const SyntheticSpec spec = synthetic_spec_from_json(read_json_file(a.spec), a.spec.string());
        const PointCloud pc = generate(spec);
        std::filesystem::create_directories(a.out_dir);
        write_point_cloud(a.out_dir / "points.csv", pc);
        write_edge_list(a.out_dir / "graph.tsv", pointcloud_to_graph(pc));
        const int max_dim = spec.kind == SyntheticKind::torus ? 2 : 1;
        const auto dgms = rips_diagram(pairwise_distances(pc), max_dim);
        out << "n=" << pc.size() << " m=" << pc.dim();
        for (int d = 1; d <= max_dim; ++d) out << " prominent_H" << d << "=" << prominent_count(dgms[d]);
        out << '\n';
    });
}

// --- pd ---

struct PdArgs {
    std::filesystem::path input;
    std::optional<InputFormat> format;
    int max_dim = 1;
    FiltrationParams filtration;
    std::filesystem::path output; // empty: stdout
};

inline int cmd_pd(const PdArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        require(a.max_dim >= 0 && a.max_dim <= 3, "--max-dim must be between 0 and 3");
        a.filtration.validate();
        const InputFormat f = a.format.value_or(guess_format(a.input));
        std::vector<PersistenceDiagram> dgms;
        if (f == InputFormat::points) {
            dgms = rips_diagram(pairwise_distances(load_point_cloud(a.input)), a.max_dim);
        } else {
            dgms = diagram_of_graph(load_graph({f, a.input, {}}), a.filtration, a.max_dim);
        }
        if (a.output.empty()) write_diagrams(out, dgms);
        else write_diagrams(a.output, dgms);
    });
}

// --- compare ---

struct CompareArgs {
    std::filesystem::path a, b;
    int dim = 1;
    std::optional<double> epsilon; // unset: 1e-2 times the mean squared gap of b
    std::filesystem::path output;
};

inline Json match_report_json(const DiagramMatchReport& r, int dim) {
    Json pairs = Json::array();
    for (const auto& p : r.pairs) pairs.push_back({{"embedding", p.embedding}, {"target", p.target}, {"cost", p.cost}});
    return {{"dim", dim},
            {"fg_exact", r.fg_exact},
            {"sfg", r.sfg},
            {"epsilon", r.epsilon},
            {"converged", r.converged},
            {"pairs", pairs}};
}

inline const PersistenceDiagram& diagram_dim(const std::vector<PersistenceDiagram>& d, int dim,
                                             const std::string& what) {
    require(dim >= 0 && dim < static_cast<int>(d.size()), what + " has no dimension " + std::to_string(dim));
    return d[dim];
}

inline int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto da = read_diagrams(a.a), db = read_diagrams(a.b);
        const auto& x = diagram_dim(da, a.dim, a.a.string());
        const auto& y = diagram_dim(db, a.dim, a.b.string());
        double eps = 0.0;
        if (a.epsilon) {
            require(*a.epsilon > 0.0, "--epsilon must be positive");
            eps = *a.epsilon;
        } else {
            const PDPointSet ys(y), xs(x);
            eps = ys.empty() ? (xs.empty() ? 1e-2 : default_epsilon(xs)) : default_epsilon(ys);
        }
        const Json j = match_report_json(diagram_match_report(x, y, eps), a.dim);
        if (a.output.empty()) {
            out << j.dump(2) << '\n';
        } else {
            std::ofstream f(a.output);
            if (!f) throw InvalidInput("cannot write " + a.output.string());
            f << j.dump(2) << '\n';
        }
    });
}

// --- train ---

struct TrainOverrides {
    std::optional<std::filesystem::path> output_dir;
    std::optional<int> epochs;
    std::optional<double> eta;
    std::optional<double> lambda0;
    std::optional<double> lambda1;
    std::optional<std::uint64_t> seed;
    std::optional<int> checkpoint_every;
};

struct TrainArgs {
    std::filesystem::path config;
    TrainOverrides overrides;
    bool quiet = false;
};

inline void apply_overrides(RunConfig& c, const TrainOverrides& o) {
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.epochs) c.train.epochs = *o.epochs;
    if (o.eta) c.train.eta = *o.eta;
    if (o.lambda0) c.train.lambda0 = *o.lambda0;
    if (o.lambda1) c.train.lambda1 = *o.lambda1;
    if (o.seed) c.train.seed = *o.seed;
    if (o.checkpoint_every) c.checkpoint_every = *o.checkpoint_every;
}

// Per-dimension comparison of a final embedding against the input graph.
inline Json training_report(const WeightedGraph& g, const Matrix& embedding, const TopoLossConfig& topo) {
    const int max_dim = topo.max_dim();
    const auto target = diagram_of_graph(g, topo.filtration, max_dim);
    const auto emb = rips_diagram(pairwise_distances(embedding), max_dim);
    Json dims = Json::array();
    for (int d : topo.dims) {
        const PDPointSet beta(target[d]);
        const double eps = topo.epsilon ? *topo.epsilon
                                        : (beta.empty() ? 1e-2 : default_epsilon(beta, topo.epsilon_factor));
        Json r = match_report_json(diagram_match_report(emb[d], target[d], eps, topo.solver), d);
        r["target_total_persistence"] = beta.pers();
        r["prominent_embedding"] = prominent_count(emb[d]);
        r["prominent_target"] = prominent_count(target[d]);
        dims.push_back(std::move(r));
    }
    return {{"dims", dims}, {"embedding_diameter", diameter(embedding)}};
}

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        thread_count_from_env();
        RunConfig c = load_run_config(a.config);
        apply_overrides(c, a.overrides);
        c.validate();
        const auto dir = c.output_dir;
        std::filesystem::create_directories(dir);
        {
            std::ofstream f(dir / "config.json");
            if (!f) throw InvalidInput("cannot write into " + dir.string());
            f << run_config_to_json(c).dump(2) << '\n';
        }
        const WeightedGraph g = load_graph(c.input);
        MetricsWriter metrics(dir / "metrics.jsonl");
        TrainHooks hooks;
        hooks.on_epoch = [&](const TrainState& s, const EpochMetrics& m) {
            metrics.write(m);
            if (c.checkpoint_every > 0 && s.epoch % c.checkpoint_every == 0)
                write_checkpoint(dir / "checkpoints", "epoch" + std::to_string(s.epoch) + "_", s.params, s.epoch,
                                 c.train.seed);
            if (!a.quiet && c.train.epochs >= 10 && (m.epoch + 1) % (c.train.epochs / 10) == 0)
                out << "epoch " << m.epoch + 1 << "/" << c.train.epochs << " L0=" << m.L0 << " L1=" << m.L1 << '\n';
        };
        const TrainResult r = train(g, c.train, hooks);
        const int epochs_run = static_cast<int>(r.metrics.size());
        write_checkpoint(dir, "final_", r.params, epochs_run, c.train.seed);
        csv::write_matrix(dir / "embedding.csv", r.params.embedding());
        const int max_dim = std::max(1, c.train.topo.max_dim());
        write_diagrams(dir / "diagram.csv", rips_diagram(pairwise_distances(r.params.embedding()), max_dim));
        const Json report = training_report(g, r.params.embedding(), c.train.topo);
        {
            std::ofstream f(dir / "report.json");
            f << report.dump(2) << '\n';
        }
        out << "epochs=" << epochs_run << " converged=" << (r.converged ? "true" : "false");
        for (const auto& d : report["dims"])
            out << " H" << d["dim"].get<int>() << ":prominent=" << d["prominent_embedding"].get<int>()
                << ",fg_exact=" << format_double(d["fg_exact"].get<double>());
        out << '\n';
    });
}

// --- eval ---

struct EvalArgs {
    std::filesystem::path embedding;
    int spheres = 100;
    double slab_fraction = 0.1;
    std::filesystem::path out_dir = ".";
};

inline int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Matrix emb = csv::read_matrix(a.embedding);
        require(emb.cols() == 3, "eval expects a 3-D embedding, got " + std::to_string(emb.cols()) + " columns");
        const Matrix pc = principal_coordinates(emb);
        const SphereProfile prof = inscribed_sphere_profile(pc, a.spheres, a.slab_fraction);
        std::filesystem::create_directories(a.out_dir);
        {
            std::ofstream f(a.out_dir / "profile.csv");
            if (!f) throw InvalidInput("cannot write into " + a.out_dir.string());
            f << "angle,radius\n";
            for (std::size_t k = 0; k < prof.radii.size(); ++k)
                f << format_double(prof.angles[k]) << ',' << format_double(prof.radii[k]) << '\n';
        }
        csv::write_matrix(a.out_dir / "pca.csv", pc);
        const Json summary = {{"spheres", a.spheres},
                              {"slab_fraction", a.slab_fraction},
                              {"mean_radius", prof.mean()},
                              {"coefficient_of_variation", prof.coefficient_of_variation()},
                              {"empty_slabs", prof.empty_slabs},
                              {"diameter", diameter(pc)}};
        {
            std::ofstream f(a.out_dir / "summary.json");
            f << summary.dump(2) << '\n';
        }
        if (prof.empty_slabs > 0) err << "warning: " << prof.empty_slabs << " empty slab(s), radius recorded as 0\n";
        out << "mean_radius=" << format_double(prof.mean())
            << " cv=" << format_double(prof.coefficient_of_variation()) << '\n';
    });
}

} // namespace tn2v::cli
