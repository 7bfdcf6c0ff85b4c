#pragma once

#include "common.hpp"
#include "experiments.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "trainer.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

namespace tn2v {

// Strict JSON run configuration. Every section is optional except `input`;
// unknown keys anywhere are rejected with their path.
//
// {
//   "input":  {"path": "...", "format": "edges|matrix|points"}
//          or {"synthetic": {SyntheticSpec fields}},
//   "walk":   {"length", "walks_per_node" (int or "infinite"), "p", "q", "seed"},
//   "model":  {"m", "seed"},
//   "train":  {"eta", "eta_decay", "lambda0", "lambda1", "epochs",
//              "minibatch": {"kind": "constant|linear", "start", "end", "ramp_epochs"},
//              "convergence": {"window", "threshold"}, "checkpoint_every"},
//   "topo":   {"epsilon", "epsilon_factor", "dims", "dim_weights", "nu", "gamma",
//              "solver_tol", "solver_max_iter"},
//   "output_dir": "..."
// }

enum class InputFormat { edges, matrix, points, synthetic };

inline InputFormat input_format_from_string(const std::string& s) {
    if (s == "edges") return InputFormat::edges;
    if (s == "matrix") return InputFormat::matrix;
    if (s == "points") return InputFormat::points;
    throw InvalidInput("unknown input format '" + s + "' (expected edges, matrix or points)");
}

inline std::string to_string(InputFormat f) {
    switch (f) {
    case InputFormat::edges: return "edges";
    case InputFormat::matrix: return "matrix";
    case InputFormat::points: return "points";
    case InputFormat::synthetic: return "synthetic";
    }
    return "?";
}

struct InputSpec {
    InputFormat format = InputFormat::edges;
    std::filesystem::path path;
    SyntheticSpec synthetic;
};

struct RunConfig {
    InputSpec input;
    TrainConfig train;
    int checkpoint_every = 0; // 0 disables periodic checkpoints
    std::filesystem::path output_dir = "run";

    void validate() const {
        train.validate();
        require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
        if (input.format == InputFormat::synthetic) {
            input.synthetic.validate();
        } else {
            require(!input.path.empty(), "input.path is required");
            require(std::filesystem::exists(input.path), "input file does not exist: " + input.path.string());
        }
        require(!output_dir.empty(), "output_dir must not be empty");
    }
};

namespace detail {

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidInput(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw InvalidInput(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw InvalidInput(where + "." + key + ": wrong type");
    }
}

} // namespace detail

inline SyntheticSpec synthetic_spec_from_json(const Json& j, const std::string& where = "synthetic") {
    detail::check_keys(j, where, {"kind", "circles", "points_per_circle", "grid_u", "grid_v", "inner_radius",
                                  "outer_radius", "jitter", "seed"});
    SyntheticSpec s;
    std::string kind = to_string(s.kind);
    detail::read(j, "kind", kind, where);
    s.kind = synthetic_kind_from_string(kind);
    detail::read(j, "circles", s.circles, where);
    detail::read(j, "points_per_circle", s.points_per_circle, where);
    detail::read(j, "grid_u", s.grid_u, where);
    detail::read(j, "grid_v", s.grid_v, where);
    detail::read(j, "inner_radius", s.inner_radius, where);
    detail::read(j, "outer_radius", s.outer_radius, where);
    detail::read(j, "jitter", s.jitter, where);
    detail::read(j, "seed", s.seed, where);
    if (s.kind == SyntheticKind::torus && !j.contains("outer_radius")) s.outer_radius = 2.0;
    s.validate();
    return s;
}

inline Json synthetic_spec_to_json(const SyntheticSpec& s) {
    return {{"kind", to_string(s.kind)},     {"circles", s.circles},
            {"points_per_circle", s.points_per_circle}, {"grid_u", s.grid_u},
            {"grid_v", s.grid_v},            {"inner_radius", s.inner_radius},
            {"outer_radius", s.outer_radius}, {"jitter", s.jitter},
            {"seed", s.seed}};
}

// Relative input paths resolve against `base` (the config file's directory).
inline RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base = {}) {
    detail::check_keys(j, "config", {"input", "walk", "model", "train", "topo", "output_dir"});
    RunConfig c;
    if (!j.contains("input")) throw InvalidInput("config: missing 'input' section");

    const Json& in = j.at("input");
    detail::check_keys(in, "input", {"path", "format", "synthetic"});
    if (in.contains("synthetic")) {
        if (in.contains("path")) throw InvalidInput("input: give either 'path' or 'synthetic', not both");
        c.input.format = InputFormat::synthetic;
        c.input.synthetic = synthetic_spec_from_json(in.at("synthetic"), "input.synthetic");
    } else {
        std::string path, format = "edges";
        detail::read(in, "path", path, "input");
        detail::read(in, "format", format, "input");
        c.input.format = input_format_from_string(format);
        c.input.path = path;
        if (!path.empty() && c.input.path.is_relative() && !base.empty()) c.input.path = base / c.input.path;
    }

    if (j.contains("walk")) {
        const Json& w = j.at("walk");
        detail::check_keys(w, "walk", {"length", "walks_per_node", "p", "q", "seed"});
        detail::read(w, "length", c.train.walk.length, "walk");
        if (w.contains("walks_per_node")) {
            const Json& r = w.at("walks_per_node");
            if (r.is_string() && r.get<std::string>() == "infinite") c.train.walk.walks_per_node = WalkConfig::kInfiniteWalks;
            else if (r.is_number_integer() && r.get<long long>() >= 1) c.train.walk.walks_per_node = r.get<int>();
            else throw InvalidInput("walk.walks_per_node: expected a positive integer or \"infinite\"");
        }
        detail::read(w, "p", c.train.walk.p, "walk");
        detail::read(w, "q", c.train.walk.q, "walk");
        detail::read(w, "seed", c.train.walk.seed, "walk");
    }

    if (j.contains("model")) {
        const Json& m = j.at("model");
        detail::check_keys(m, "model", {"m", "seed"});
        detail::read(m, "m", c.train.dim, "model");
        detail::read(m, "seed", c.train.seed, "model");
    }

    if (j.contains("train")) {
        const Json& t = j.at("train");
        detail::check_keys(t, "train", {"eta", "eta_decay", "lambda0", "lambda1", "epochs", "minibatch",
                                        "convergence", "checkpoint_every"});
        detail::read(t, "eta", c.train.eta, "train");
        detail::read(t, "eta_decay", c.train.eta_decay, "train");
        detail::read(t, "lambda0", c.train.lambda0, "train");
        detail::read(t, "lambda1", c.train.lambda1, "train");
        detail::read(t, "epochs", c.train.epochs, "train");
        detail::read(t, "checkpoint_every", c.checkpoint_every, "train");
        if (t.contains("minibatch")) {
            const Json& mb = t.at("minibatch");
            detail::check_keys(mb, "train.minibatch", {"kind", "start", "end", "fraction", "ramp_epochs"});
            std::string kind = "constant";
            detail::read(mb, "kind", kind, "train.minibatch");
            if (kind == "constant") {
                double f = 1.0;
                detail::read(mb, "start", f, "train.minibatch");
                detail::read(mb, "fraction", f, "train.minibatch");
                if (mb.contains("end") || mb.contains("ramp_epochs"))
                    throw InvalidInput("train.minibatch: 'end' and 'ramp_epochs' only apply to linear schedules");
                c.train.minibatch = MinibatchSchedule::constant_fraction(f);
            } else if (kind == "linear") {
                double a = 1.0, b = 1.0;
                int over = 0;
                if (mb.contains("fraction")) throw InvalidInput("train.minibatch: use start/end for linear schedules");
                detail::read(mb, "start", a, "train.minibatch");
                detail::read(mb, "end", b, "train.minibatch");
                detail::read(mb, "ramp_epochs", over, "train.minibatch");
                c.train.minibatch = MinibatchSchedule::linear_ramp(a, b, over);
            } else {
                throw InvalidInput("train.minibatch.kind: expected constant or linear");
            }
        }
        if (t.contains("convergence")) {
            const Json& cv = t.at("convergence");
            detail::check_keys(cv, "train.convergence", {"window", "threshold"});
            detail::read(cv, "window", c.train.convergence.window, "train.convergence");
            detail::read(cv, "threshold", c.train.convergence.threshold, "train.convergence");
        }
    }

    if (j.contains("topo")) {
        const Json& t = j.at("topo");
        detail::check_keys(t, "topo", {"epsilon", "epsilon_factor", "dims", "dim_weights", "nu", "gamma",
                                       "solver_tol", "solver_max_iter"});
        if (t.contains("epsilon") && !t.at("epsilon").is_null()) {
            double e = 0.0;
            detail::read(t, "epsilon", e, "topo");
            c.train.topo.epsilon = e;
        }
        detail::read(t, "epsilon_factor", c.train.topo.epsilon_factor, "topo");
        detail::read(t, "dims", c.train.topo.dims, "topo");
        detail::read(t, "dim_weights", c.train.topo.dim_weights, "topo");
        detail::read(t, "nu", c.train.topo.filtration.nu, "topo");
        detail::read(t, "gamma", c.train.topo.filtration.gamma, "topo");
        detail::read(t, "solver_tol", c.train.topo.solver.tol, "topo");
        detail::read(t, "solver_max_iter", c.train.topo.solver.max_iter, "topo");
    }

    if (j.contains("output_dir")) {
        std::string out;
        detail::read(j, "output_dir", out, "config");
        c.output_dir = out;
    }
    return c;
}

inline Json run_config_to_json(const RunConfig& c) {
    Json j;
    if (c.input.format == InputFormat::synthetic) {
        j["input"] = {{"synthetic", synthetic_spec_to_json(c.input.synthetic)}};
    } else {
        j["input"] = {{"path", c.input.path.string()}, {"format", to_string(c.input.format)}};
    }
    const auto& t = c.train;
    j["walk"] = {{"length", t.walk.length}, {"p", t.walk.p}, {"q", t.walk.q}, {"seed", t.walk.seed}};
    if (t.walk.infinite()) j["walk"]["walks_per_node"] = "infinite";
    else j["walk"]["walks_per_node"] = t.walk.walks_per_node;
    j["model"] = {{"m", t.dim}, {"seed", t.seed}};
    Json mb;
    if (t.minibatch.kind == MinibatchSchedule::Kind::constant) mb = {{"kind", "constant"}, {"start", t.minibatch.start}};
    else mb = {{"kind", "linear"}, {"start", t.minibatch.start}, {"end", t.minibatch.end},
               {"ramp_epochs", t.minibatch.ramp_epochs}};
    j["train"] = {{"eta", t.eta},
                  {"eta_decay", t.eta_decay},
                  {"lambda0", t.lambda0},
                  {"lambda1", t.lambda1},
                  {"epochs", t.epochs},
                  {"minibatch", mb},
                  {"convergence", {{"window", t.convergence.window}, {"threshold", t.convergence.threshold}}},
                  {"checkpoint_every", c.checkpoint_every}};
    j["topo"] = {{"epsilon_factor", t.topo.epsilon_factor}, {"dims", t.topo.dims},
                 {"dim_weights", t.topo.dim_weights},       {"nu", t.topo.filtration.nu},
                 {"gamma", t.topo.filtration.gamma},        {"solver_tol", t.topo.solver.tol},
                 {"solver_max_iter", t.topo.solver.max_iter}};
    j["topo"]["epsilon"] = t.topo.epsilon ? Json(*t.topo.epsilon) : Json(nullptr);
    j["output_dir"] = c.output_dir.string();
    return j;
}

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_json_file(path), path.parent_path());
}

} // namespace tn2v
