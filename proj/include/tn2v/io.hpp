#pragma once

#include "common.hpp"
#include "csv.hpp"
#include "skipgram.hpp"
#include "trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

namespace tn2v {

using Json = nlohmann::json;

// JSON numbers printed via format_double so values round-trip exactly.
inline std::string json_number(double x) {
    if (!std::isfinite(x)) return "null";
    return format_double(x);
}

inline std::string metrics_json_line(const EpochMetrics& m) {
    std::string s = "{";
    s += "\"epoch\":" + std::to_string(m.epoch);
    s += ",\"L0\":" + json_number(m.L0);
    s += ",\"L1\":" + json_number(m.L1);
    s += ",\"combined\":" + json_number(m.combined);
    s += ",\"grad_norm_W1\":" + json_number(m.grad_norm_W1);
    s += ",\"grad_norm_W2\":" + json_number(m.grad_norm_W2);
    s += ",\"batch_fraction\":" + json_number(m.batch_fraction);
    s += ",\"batch_size\":" + std::to_string(m.batch_size);
    s += ",\"gp_warnings\":" + std::to_string(m.gp_warnings);
    s += ",\"solver_unconverged\":" + std::to_string(m.solver_unconverged);
    s += ",\"millis\":" + json_number(m.millis);
    s += "}";
    return s;
}

inline EpochMetrics metrics_from_json(const Json& j) {
    EpochMetrics m;
    m.epoch = j.at("epoch").get<int>();
    m.L0 = j.at("L0").get<double>();
    m.L1 = j.at("L1").get<double>();
    m.combined = j.at("combined").get<double>();
    m.grad_norm_W1 = j.at("grad_norm_W1").get<double>();
    m.grad_norm_W2 = j.at("grad_norm_W2").get<double>();
    m.batch_fraction = j.at("batch_fraction").get<double>();
    m.batch_size = j.value("batch_size", 0);
    m.gp_warnings = j.at("gp_warnings").get<int>();
    m.solver_unconverged = j.value("solver_unconverged", 0);
    m.millis = j.at("millis").get<double>();
    return m;
}

// Append-only JSONL sink; one flushed line per epoch.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw InvalidInput("cannot write " + path.string());
    }

    void write(const EpochMetrics& m) {
        std::lock_guard lock(mu_);
        out_ << metrics_json_line(m) << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mu_;
};

inline std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::vector<EpochMetrics> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        try {
            out.push_back(metrics_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// --- checkpoints: <prefix>W1.csv, <prefix>W2.csv, <prefix>meta.json ---

struct CheckpointMeta {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    int epoch = 0;
    std::uint64_t seed = 0;
};

inline void write_checkpoint(const std::filesystem::path& dir, const std::string& prefix, const ModelParams& p,
                             int epoch, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    csv::write_matrix(dir / (prefix + "W1.csv"), p.W1);
    csv::write_matrix(dir / (prefix + "W2.csv"), p.W2);
    Json meta = {{"n", p.vertices()}, {"m", p.dim()}, {"epoch", epoch}, {"seed", seed}};
    std::ofstream out(dir / (prefix + "meta.json"));
    if (!out) throw InvalidInput("cannot write checkpoint metadata in " + dir.string());
    out << meta.dump(2) << '\n';
}

inline std::pair<ModelParams, CheckpointMeta> read_checkpoint(const std::filesystem::path& dir,
                                                              const std::string& prefix) {
    ModelParams p{csv::read_matrix(dir / (prefix + "W1.csv")), csv::read_matrix(dir / (prefix + "W2.csv"))};
    std::ifstream in(dir / (prefix + "meta.json"));
    if (!in) throw InvalidInput("missing checkpoint metadata in " + dir.string());
    CheckpointMeta meta;
    try {
        const Json j = Json::parse(in);
        meta.n = j.at("n").get<Eigen::Index>();
        meta.m = j.at("m").get<Eigen::Index>();
        meta.epoch = j.at("epoch").get<int>();
        meta.seed = j.at("seed").get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw InvalidInput("bad checkpoint metadata: " + std::string(e.what()));
    }
    require(p.W1.rows() == meta.n && p.W1.cols() == meta.m, "checkpoint W1 does not match its metadata");
    require(p.W2.rows() == meta.m && p.W2.cols() == meta.n, "checkpoint W2 does not match its metadata");
    return {std::move(p), meta};
}

} // namespace tn2v
