#include <tn2v/cli.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace tn2v;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    fs::path p = fs::temp_directory_path() / "tn2v_cli_tests" / (std::string(info->test_suite_name()) + "." +
                                                                 info->name() + "." + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p);
    out << s;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') ++n;
    return n;
}

Json small_config(const fs::path& out, double lambda1 = 1.0, int epochs = 15) {
    Json j = Json::parse(R"({
        "input": {"synthetic": {"kind": "circle", "points_per_circle": 10, "seed": 3}},
        "walk": {"walks_per_node": "infinite"},
        "model": {"m": 2, "seed": 7},
        "train": {"eta": 0.05, "lambda0": 1,
                  "minibatch": {"kind": "linear", "start": 0.5, "end": 1.0},
                  "convergence": {"window": 50, "threshold": 0}},
        "topo": {"dims": [1], "epsilon_factor": 0.01}
    })");
    j["output_dir"] = out.string();
    j["train"]["lambda1"] = lambda1;
    j["train"]["epochs"] = epochs;
    return j;
}

int run_train(const fs::path& cfg_path, cli::TrainOverrides o = {}) {
    std::ostringstream out, err;
    return cli::cmd_train({cfg_path, o, true}, out, err);
}

} // namespace

// --- config parsing ---

TEST(RunConfigParse, MinimalSyntheticConfig) {
    const auto c = run_config_from_json(Json::parse(R"({"input": {"synthetic": {"kind": "eight_circles"}}})"));
    EXPECT_EQ(c.input.format, InputFormat::synthetic);
    EXPECT_EQ(c.input.synthetic.circles, 8);
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfigParse, UnknownKeysRejectedWithPath) {
    try {
        run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "train": {"etaa": 1}})"));
        FAIL() << "expected rejection";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("train: unknown key 'etaa'"), std::string::npos);
    }
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "extra": 1})")), InvalidInput);
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"input": {"synthetic": {"radius": 1}}})")), InvalidInput);
    EXPECT_THROW(
        run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "train": {"minibatch": {"kind": "linear", "x": 1}}})")),
        InvalidInput);
}

TEST(RunConfigParse, WrongTypesAndValuesRejected) {
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "train": {"eta": "fast"}})")),
                 InvalidInput);
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "walk": {"walks_per_node": 0}})")),
                 InvalidInput);
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"train": {}})")), InvalidInput);
    EXPECT_THROW(run_config_from_json(Json::parse(R"({"input": {"path": "x.tsv", "format": "yaml"}})")), InvalidInput);
    auto c = run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}, "train": {"eta": -1}})"));
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(RunConfigParse, MissingInputFileRejectedAtValidation) {
    const auto c = run_config_from_json(Json::parse(R"({"input": {"path": "/nonexistent/graph.tsv"}})"));
    EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(RunConfigParse, RelativePathsResolveAgainstConfigDirectory) {
    const auto dir = scratch("rel");
    write_text(dir / "g.tsv", "0\t1\t1.0\n");
    write_text(dir / "run.json", R"({"input": {"path": "g.tsv", "format": "edges"}})");
    const auto c = load_run_config(dir / "run.json");
    EXPECT_EQ(c.input.path, dir / "g.tsv");
    EXPECT_NO_THROW(c.validate());
}

TEST(RunConfigParse, FieldsAndRoundTrip) {
    const auto c = run_config_from_json(Json::parse(R"({
        "input": {"synthetic": {"kind": "torus", "grid_u": 16, "grid_v": 8}},
        "walk": {"length": 3, "walks_per_node": 4, "p": 0.5, "q": 2, "seed": 9},
        "model": {"m": 3, "seed": 11},
        "train": {"eta": 0.01, "eta_decay": 0.001, "lambda0": 0.5, "lambda1": 2, "epochs": 77,
                  "minibatch": {"kind": "linear", "start": 0.25, "end": 1, "ramp_epochs": 50},
                  "convergence": {"window": 5, "threshold": 1e-3}, "checkpoint_every": 10},
        "topo": {"epsilon": 0.02, "dims": [1, 2], "dim_weights": [1, 0.5], "nu": 2, "gamma": 1e-6,
                 "solver_tol": 1e-8, "solver_max_iter": 100},
        "output_dir": "somewhere"
    })"));
    EXPECT_EQ(c.input.synthetic.outer_radius, 2.0);
    EXPECT_EQ(c.train.walk.length, 3);
    EXPECT_EQ(c.train.walk.walks_per_node, 4);
    EXPECT_EQ(c.train.dim, 3);
    EXPECT_EQ(c.train.seed, 11u);
    EXPECT_EQ(c.train.minibatch.kind, MinibatchSchedule::Kind::linear);
    EXPECT_EQ(c.train.minibatch.ramp_epochs, 50);
    EXPECT_EQ(c.checkpoint_every, 10);
    ASSERT_TRUE(c.train.topo.epsilon.has_value());
    EXPECT_EQ(*c.train.topo.epsilon, 0.02);
    EXPECT_EQ(c.train.topo.dims, (std::vector<int>{1, 2}));
    EXPECT_EQ(c.train.topo.filtration.nu, 2.0);
    EXPECT_NO_THROW(c.validate());

    const auto again = run_config_from_json(run_config_to_json(c));
    EXPECT_EQ(run_config_to_json(again), run_config_to_json(c));
}

TEST(RunConfigParse, OverridesApply) {
    auto c = run_config_from_json(Json::parse(R"({"input": {"synthetic": {}}})"));
    cli::TrainOverrides o;
    o.epochs = 5;
    o.eta = 0.2;
    o.lambda1 = 0.0;
    o.seed = 42;
    o.output_dir = "elsewhere";
    cli::apply_overrides(c, o);
    EXPECT_EQ(c.train.epochs, 5);
    EXPECT_EQ(c.train.eta, 0.2);
    EXPECT_EQ(c.train.lambda1, 0.0);
    EXPECT_EQ(c.train.seed, 42u);
    EXPECT_EQ(c.output_dir, "elsewhere");
}

// --- io ---

TEST(MetricsIo, JsonLinesRoundTrip) {
    const auto dir = scratch("m");
    EpochMetrics m;
    m.epoch = 3;
    m.L0 = 1.0 / 3.0;
    m.L1 = 2e-17;
    m.combined = 0.1 + 0.2;
    m.grad_norm_W1 = 4.5;
    m.grad_norm_W2 = 6.25;
    m.batch_fraction = 0.0625;
    m.batch_size = 32;
    m.gp_warnings = 2;
    m.millis = 1.5;
    {
        MetricsWriter w(dir / "metrics.jsonl");
        w.write(m);
        m.epoch = 4;
        w.write(m);
    }
    const auto back = read_metrics(dir / "metrics.jsonl");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].epoch, 4);
    EXPECT_EQ(back[0].L0, m.L0);
    EXPECT_EQ(back[0].L1, m.L1);
    EXPECT_EQ(back[0].combined, m.combined);
    EXPECT_EQ(back[0].batch_size, 32);
}

TEST(CheckpointIo, RoundTripExact) {
    const auto dir = scratch("c");
    const auto p = init_params(7, 3, 5);
    write_checkpoint(dir, "x_", p, 12, 99);
    const auto [q, meta] = read_checkpoint(dir, "x_");
    EXPECT_EQ(q.W1, p.W1);
    EXPECT_EQ(q.W2, p.W2);
    EXPECT_EQ(meta.n, 7);
    EXPECT_EQ(meta.m, 3);
    EXPECT_EQ(meta.epoch, 12);
    EXPECT_EQ(meta.seed, 99u);
}

TEST(ThreadEnv, ParsesAndRejects) {
    ::setenv("TN2V_THREADS", "3", 1);
    EXPECT_EQ(cli::thread_count_from_env(), 3);
    ::setenv("TN2V_THREADS", "zero", 1);
    EXPECT_THROW(cli::thread_count_from_env(), InvalidInput);
    ::unsetenv("TN2V_THREADS");
    EXPECT_EQ(cli::thread_count_from_env(), 1);
}

// --- generate ---

TEST(CmdGenerate, EightCirclesAndTorus) {
    const auto dir = scratch("g");
    write_text(dir / "ec.json", R"({"kind": "eight_circles", "seed": 1})");
    write_text(dir / "t.json", R"({"kind": "torus", "grid_u": 32, "grid_v": 16})");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_generate({dir / "ec.json", dir / "ec"}, out, err), 0) << err.str();
    EXPECT_EQ(count_rows(dir / "ec" / "points.csv"), 128u);
    EXPECT_NE(out.str().find("prominent_H1=9"), std::string::npos);
    ASSERT_EQ(cli::cmd_generate({dir / "t.json", dir / "t"}, out, err), 0) << err.str();
    EXPECT_EQ(count_rows(dir / "t" / "points.csv"), 512u);
    EXPECT_EQ(load_edge_list(dir / "t" / "graph.tsv").size(), 512);
}

TEST(CmdGenerate, DeterministicFiles) {
    const auto dir = scratch("g");
    write_text(dir / "ec.json", R"({"kind": "eight_circles", "seed": 4})");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_generate({dir / "ec.json", dir / "a"}, out, err), 0);
    ASSERT_EQ(cli::cmd_generate({dir / "ec.json", dir / "b"}, out, err), 0);
    EXPECT_EQ(read_text(dir / "a" / "points.csv"), read_text(dir / "b" / "points.csv"));
    EXPECT_EQ(read_text(dir / "a" / "graph.tsv"), read_text(dir / "b" / "graph.tsv"));
}

TEST(CmdGenerate, InvalidSpecExitsWithUsageError) {
    const auto dir = scratch("g");
    write_text(dir / "bad.json", R"({"kind": "torus", "inner_radius": 5})");
    write_text(dir / "junk.json", "{not json");
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_generate({dir / "bad.json", dir / "o"}, out, err), 1);
    EXPECT_EQ(cli::cmd_generate({dir / "junk.json", dir / "o"}, out, err), 1);
    EXPECT_FALSE(err.str().empty());
}

// --- pd ---

TEST(CmdPd, FourCycleGraphHasOneLoop) {
    const auto dir = scratch("pd");
    write_text(dir / "c4.tsv", "0\t1\t1\n1\t2\t1\n2\t3\t1\n3\t0\t1\n");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_pd({dir / "c4.tsv", std::nullopt, 1, {}, dir / "d.csv"}, out, err), 0) << err.str();
    const auto d = read_diagrams(dir / "d.csv");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[1].size(), 1u);
}

TEST(CmdPd, PointCloudMatchesReciprocalGraph) {
    const auto dir = scratch("pd");
    SyntheticSpec s;
    s.kind = SyntheticKind::circle;
    s.points_per_circle = 12;
    const auto pc = generate(s);
    write_point_cloud(dir / "p.csv", pc);
    write_edge_list(dir / "g.tsv", pointcloud_to_graph(pc));
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_pd({dir / "p.csv", std::nullopt, 1, {}, dir / "a.csv"}, out, err), 0);
    ASSERT_EQ(cli::cmd_pd({dir / "g.tsv", InputFormat::edges, 1, {}, dir / "b.csv"}, out, err), 0);
    const auto a = read_diagrams(dir / "a.csv"), b = read_diagrams(dir / "b.csv");
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        ASSERT_EQ(a[k].size(), b[k].size());
        for (std::size_t i = 0; i < a[k].size(); ++i) {
            EXPECT_NEAR(a[k].points[i].birth, b[k].points[i].birth, 1e-6);
            EXPECT_NEAR(a[k].points[i].death, b[k].points[i].death, 1e-6);
        }
    }
}

TEST(CmdPd, MaxDimZeroAndStdout) {
    const auto dir = scratch("pd");
    write_text(dir / "c4.tsv", "0\t1\t1\n1\t2\t1\n2\t3\t1\n3\t0\t1\n");
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_pd({dir / "c4.tsv", std::nullopt, 0, {}, {}}, out, err), 0);
    std::istringstream in(out.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("dim", 0) == 0) continue;
        EXPECT_EQ(line.substr(0, 2), "0,");
        ++rows;
    }
    EXPECT_EQ(rows, 3);
}

TEST(CmdPd, BadInputsExitWithUsageError) {
    const auto dir = scratch("pd");
    write_text(dir / "bad.tsv", "0\t1\t-2\n");
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_pd({dir / "bad.tsv", std::nullopt, 1, {}, {}}, out, err), 1);
    EXPECT_EQ(cli::cmd_pd({dir / "missing.tsv", std::nullopt, 1, {}, {}}, out, err), 1);
    EXPECT_EQ(cli::cmd_pd({dir / "bad.tsv", std::nullopt, 7, {}, {}}, out, err), 1);
}

// --- compare ---

namespace {

void write_single(const fs::path& p, double b, double d) {
    PersistenceDiagram h0, h1;
    h1.dim = 1;
    DiagramPoint x;
    x.dim = 1;
    x.birth = b;
    x.death = d;
    h1.points.push_back(x);
    write_diagrams(p, {h0, h1});
}

} // namespace

TEST(CmdCompare, SelfIsZeroAndSinglePairValue) {
    const auto dir = scratch("cmp");
    write_single(dir / "a.csv", 0.0, 2.0);
    write_single(dir / "b.csv", 0.0, 2.1);
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_compare({dir / "a.csv", dir / "a.csv", 1, 0.01, dir / "self.json"}, out, err), 0);
    const Json self = read_json_file(dir / "self.json");
    EXPECT_NEAR(self["fg_exact"].get<double>(), 0.0, 1e-15);
    EXPECT_NEAR(self["sfg"].get<double>(), 0.0, 1e-12);

    ASSERT_EQ(cli::cmd_compare({dir / "a.csv", dir / "b.csv", 1, 0.01, dir / "ab.json"}, out, err), 0);
    ASSERT_EQ(cli::cmd_compare({dir / "b.csv", dir / "a.csv", 1, 0.01, dir / "ba.json"}, out, err), 0);
    const double ab = read_json_file(dir / "ab.json")["fg_exact"].get<double>();
    const double ba = read_json_file(dir / "ba.json")["fg_exact"].get<double>();
    EXPECT_NEAR(ab, 0.01, 1e-12);
    EXPECT_EQ(ab, ba);
}

TEST(CmdCompare, DefaultEpsilonAndMissingDim) {
    const auto dir = scratch("cmp");
    write_single(dir / "a.csv", 0.0, 2.0);
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_compare({dir / "a.csv", dir / "a.csv", 1, std::nullopt, {}}, out, err), 0);
    EXPECT_GT(Json::parse(out.str())["epsilon"].get<double>(), 0.0);
    EXPECT_EQ(cli::cmd_compare({dir / "a.csv", dir / "a.csv", 2, std::nullopt, {}}, out, err), 1);
}

// --- train ---

TEST(CmdTrain, WritesSelfDescribingRunDirectory) {
    const auto dir = scratch("t");
    write_text(dir / "run.json", small_config(dir / "out", 1.0, 12).dump());
    ASSERT_EQ(run_train(dir / "run.json", {.checkpoint_every = 5}), 0);
    for (const char* f : {"config.json", "metrics.jsonl", "embedding.csv", "diagram.csv", "report.json",
                          "final_W1.csv", "final_W2.csv", "final_meta.json"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    EXPECT_TRUE(fs::exists(dir / "out" / "checkpoints" / "epoch10_W1.csv"));
    EXPECT_EQ(read_metrics(dir / "out" / "metrics.jsonl").size(), 12u);
    // the config copy is itself a valid config reproducing the run
    const auto copy = load_run_config(dir / "out" / "config.json");
    EXPECT_EQ(copy.train.epochs, 12);
    EXPECT_EQ(copy.checkpoint_every, 5);
    const Json report = read_json_file(dir / "out" / "report.json");
    EXPECT_EQ(report["dims"][0]["dim"].get<int>(), 1);
}

TEST(CmdTrain, BaselineHasZeroTopologicalLoss) {
    const auto dir = scratch("t");
    write_text(dir / "run.json", small_config(dir / "out", 0.0).dump());
    ASSERT_EQ(run_train(dir / "run.json"), 0);
    for (const auto& m : read_metrics(dir / "out" / "metrics.jsonl")) EXPECT_EQ(m.L1, 0.0);
}

TEST(CmdTrain, RerunIsBitIdentical) {
    const auto dir = scratch("t");
    write_text(dir / "run.json", small_config(dir / "a").dump());
    ASSERT_EQ(run_train(dir / "run.json"), 0);
    ASSERT_EQ(run_train(dir / "run.json", {.output_dir = dir / "b"}), 0);
    EXPECT_EQ(read_text(dir / "a" / "embedding.csv"), read_text(dir / "b" / "embedding.csv"));
}

TEST(CmdTrain, ExitCodes) {
    const auto dir = scratch("t");
    write_text(dir / "bad.json", R"({"input": {"synthetic": {}}, "train": {"epochs": -1}})");
    EXPECT_EQ(run_train(dir / "bad.json"), 1);
    write_text(dir / "unknown.json", R"({"input": {"synthetic": {}}, "trian": {}})");
    EXPECT_EQ(run_train(dir / "unknown.json"), 1);
    write_text(dir / "run.json", small_config(dir / "boom", 0.0).dump());
    EXPECT_EQ(run_train(dir / "run.json", {.eta = 1e300}), 2);
    // partial artifacts survive an abort
    EXPECT_TRUE(fs::exists(dir / "boom" / "config.json"));
    EXPECT_TRUE(fs::exists(dir / "boom" / "metrics.jsonl"));
}

TEST(CmdTrain, EmbeddingFeedsPdAndEval) {
    const auto dir = scratch("t");
    Json cfg = small_config(dir / "out", 1.0, 10);
    cfg["model"]["m"] = 3;
    write_text(dir / "run.json", cfg.dump());
    ASSERT_EQ(run_train(dir / "run.json"), 0);
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_pd({dir / "out" / "embedding.csv", std::nullopt, 1, {}, dir / "d.csv"}, out, err), 0);
    EXPECT_EQ(cli::cmd_eval({dir / "out" / "embedding.csv", 8, 0.05, dir / "ev"}, out, err), 0) << err.str();
    EXPECT_EQ(count_rows(dir / "ev" / "profile.csv"), 9u); // header + 8
}

// --- eval ---

TEST(CmdEval, IdealTorusAndAngleCount) {
    const auto dir = scratch("e");
    // evenly spread by area so that slab means sit on the tube centre
    std::vector<Eigen::RowVector3d> pts;
    const int rings = 96;
    const double spacing = 2.0 * std::numbers::pi / rings;
    for (int b = 0; b < rings; ++b) {
        const double v = 2.0 * std::numbers::pi * b / rings, rho = 2.0 + std::cos(v);
        const int count = static_cast<int>(std::lround(2.0 * std::numbers::pi * rho / spacing));
        for (int a = 0; a < count; ++a) {
            const double u = 2.0 * std::numbers::pi * (a + 0.5 * b) / count;
            pts.emplace_back(rho * std::cos(u), rho * std::sin(u), std::sin(v));
        }
    }
    Matrix m(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i];
    csv::write_matrix(dir / "torus.csv", m);
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_eval({dir / "torus.csv", 100, 0.05, dir / "a"}, out, err), 0) << err.str();
    const Json s = read_json_file(dir / "a" / "summary.json");
    EXPECT_NEAR(s["mean_radius"].get<double>(), 1.0 / 6.0, 0.1 / 6.0);
    EXPECT_EQ(count_rows(dir / "a" / "pca.csv"), pts.size());
    ASSERT_EQ(cli::cmd_eval({dir / "torus.csv", 4, 0.05, dir / "b"}, out, err), 0);
    EXPECT_EQ(count_rows(dir / "b" / "profile.csv"), 5u);
}

TEST(CmdEval, FlatAnnulusNearZeroAndWrongDimension) {
    const auto dir = scratch("e");
    Matrix m(400, 3);
    for (int k = 0; k < 400; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 100, rho = 1.0 + 0.5 * (k / 100);
        m.row(k) << rho * std::cos(t), rho * std::sin(t), 0.0;
    }
    csv::write_matrix(dir / "flat.csv", m);
    std::ostringstream out, err;
    ASSERT_EQ(cli::cmd_eval({dir / "flat.csv", 100, 0.05, dir / "a"}, out, err), 0);
    EXPECT_LT(read_json_file(dir / "a" / "summary.json")["mean_radius"].get<double>(), 0.02);
    csv::write_matrix(dir / "flat2.csv", Matrix(m.leftCols(2)));
    EXPECT_EQ(cli::cmd_eval({dir / "flat2.csv", 100, 0.05, dir / "b"}, out, err), 1);
}
