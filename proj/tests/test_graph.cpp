#include <tn2v/graph.hpp>
#include <tn2v/rng.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tn2v;

namespace {

WeightedGraph parse(const std::string& text) {
    std::istringstream in(text);
    return parse_edge_list(in);
}

Matrix random_points(int n, int m, std::uint64_t seed) {
    Rng rng(seed);
    Matrix p(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p(i, j) = rng.uniform(-1.0, 1.0);
    return p;
}

} // namespace

TEST(EdgeList, SingleEdge) {
    auto g = parse("0 1 2.0\n");
    ASSERT_EQ(g.size(), 2);
    EXPECT_EQ(g.weight(0, 1), 2.0);
    EXPECT_EQ(g.weight(1, 0), 2.0);
}

TEST(EdgeList, TabsAndComments) {
    auto g = parse("# a comment\n0\t2\t1.5\n\n1\t2\t0.25\n");
    ASSERT_EQ(g.size(), 3);
    EXPECT_EQ(g.weight(2, 0), 1.5);
    EXPECT_EQ(g.weight(1, 2), 0.25);
    EXPECT_EQ(g.weight(0, 1), 0.0);
}

TEST(EdgeList, ConflictingDuplicateRejected) {
    EXPECT_THROW(parse("0 1 1.0\n1 0 3.0\n"), InvalidInput);
}

TEST(EdgeList, ConsistentDuplicateAccepted) {
    auto g = parse("0 1 1.0\n1 0 1.0\n");
    EXPECT_EQ(g.weight(0, 1), 1.0);
}

TEST(EdgeList, HeaderOnly) {
    auto g = parse("# n=3\n");
    ASSERT_EQ(g.size(), 3);
    EXPECT_EQ(g.weights().sum(), 0.0);
    EXPECT_EQ(parse("n=3\n").size(), 3);
}

TEST(EdgeList, Errors) {
    EXPECT_THROW(parse("0 1 -1\n"), InvalidInput);
    EXPECT_THROW(parse("1 1 2\n"), InvalidInput);
    EXPECT_THROW(parse("0 1\n"), InvalidInput);
    EXPECT_THROW(parse("0 x 1\n"), InvalidInput);
    EXPECT_THROW(parse("# n=2\n0 5 1\n"), InvalidInput);
    try {
        parse("0 1 1\n0 2 oops\n");
        FAIL();
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(EdgeList, WriteReadRoundTrip) {
    auto g = parse("0 1 2.5\n1 3 0.125\n");
    auto path = std::filesystem::temp_directory_path() / "tn2v_graph_rt.tsv";
    write_edge_list(path, g);
    auto h = load_edge_list(path);
    std::filesystem::remove(path);
    EXPECT_EQ(g.weights(), h.weights());
}

TEST(WeightedGraphInvariants, Rejections) {
    Matrix asym = Matrix::Zero(2, 2);
    asym(0, 1) = 1.0;
    EXPECT_THROW(WeightedGraph{asym}, InvalidInput);
    Matrix diag = Matrix::Identity(2, 2);
    EXPECT_THROW(WeightedGraph{diag}, InvalidInput);
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 1) = neg(1, 0) = -1.0;
    EXPECT_THROW(WeightedGraph{neg}, InvalidInput);
}

TEST(Filtration, Arithmetic) {
    auto g = parse("0 1 2\n1 2 3\n");
    auto d = graph_filtration_distances(g, {1.0, 1e-300});
    EXPECT_DOUBLE_EQ(d(0, 1), 0.5);
    auto d2 = graph_filtration_distances(g, {2.0, 1.0});
    EXPECT_DOUBLE_EQ(d2(1, 2), 1.0 / 16.0);
    auto d3 = graph_filtration_distances(g, {1.0, 1e-12});
    EXPECT_DOUBLE_EQ(d3(0, 2), 1e12);
    EXPECT_EQ(d3(0, 0), 0.0);
    EXPECT_EQ(d3, d3.transpose());
}

TEST(Filtration, MonotoneInWeight) {
    auto g = parse("0 1 2\n1 2 3\n");
    auto before = graph_filtration_distances(g, {});
    g.set_weight(0, 1, 2.5);
    auto after = graph_filtration_distances(g, {});
    EXPECT_LT(after(0, 1), before(0, 1));
    EXPECT_EQ(after(1, 2), before(1, 2));
}

TEST(Filtration, InvalidParams) {
    auto g = parse("0 1 2\n");
    EXPECT_THROW(graph_filtration_distances(g, {0.0, 1e-9}), InvalidInput);
    EXPECT_THROW(graph_filtration_distances(g, {1.0, 0.0}), InvalidInput);
}

TEST(PointCloudGraph, Reciprocal) {
    PointCloud pc{Matrix(3, 1)};
    pc.points << 0.0, 1.0, 3.0;
    auto g = pointcloud_to_graph(pc);
    EXPECT_DOUBLE_EQ(g.weight(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(g.weight(0, 2), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(g.weight(1, 2), 0.5);
}

TEST(PointCloudGraph, DuplicateRejected) {
    PointCloud pc{Matrix::Zero(2, 2)};
    EXPECT_THROW(pointcloud_to_graph(pc), InvalidInput);
}

TEST(PointCloudGraph, RoundTrip) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PointCloud pc{random_points(12, 3, seed)};
        const Matrix d = pairwise_distances(pc);
        const Matrix back = graph_filtration_distances(pointcloud_to_graph(pc), {1.0, 1e-12});
        double worst = 0.0;
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j)
                if (i != j) worst = std::max(worst, std::abs(back(i, j) - d(i, j)) / d(i, j));
        EXPECT_LT(worst, 1e-9);
    }
}

TEST(PointCloudIo, RoundTripExact) {
    PointCloud pc{random_points(7, 3, 42)};
    auto path = std::filesystem::temp_directory_path() / "tn2v_pc_rt.csv";
    write_point_cloud(path, pc);
    auto back = load_point_cloud(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.points, pc.points);
}
