#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fairim/graph.hpp"
#include "fairim/graph_io.hpp"

using namespace fairim;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p);
    f << content;
}

}  // namespace

TEST_CASE("graph canonicalizes edges") {
    // duplicates and reversed pairs collapse to one canonical edge
    AttributedGraph g(4, {{2, 1}, {1, 2}, {0, 3}, {2, 1}});
    CHECK(g.n() == 4);
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(1, 2));
    CHECK(g.has_edge(2, 1));
    CHECK(g.has_edge(0, 3));
    CHECK_FALSE(g.has_edge(0, 1));
    CHECK(g.degree(2) == 1);
    CHECK(g.neighbors(1) == std::vector<NodeId>{2});
}

TEST_CASE("graph rejects bad edges") {
    CHECK_THROWS_AS(AttributedGraph(3, {{0, 3}}), data_error);
    CHECK_THROWS_AS(AttributedGraph(3, {{1, 1}}), data_error);
}

TEST_CASE("feature matrix is the symmetric adjacency") {
    AttributedGraph g(4, {{0, 1}, {1, 3}});
    const FeatureMatrix x = feature_matrix(g);
    REQUIRE(x.rows() == 4);
    REQUIRE(x.cols() == 4);
    CHECK(x(0, 1) == 1.0);
    CHECK(x(1, 0) == 1.0);
    CHECK(x(1, 3) == 1.0);
    CHECK(x(3, 1) == 1.0);
    CHECK(x(0, 2) == 0.0);
    for (int i = 0; i < 4; ++i) CHECK(x(i, i) == 0.0);
    CHECK((x - x.transpose()).norm() == 0.0);
    CHECK(x.sum() == 2.0 * g.edge_count());
}

TEST_CASE("binarize and partition by attribute") {
    AttributedGraph g(5, {{0, 1}});
    g.set_raw_attribute("age", {"12", "30", "19", "25", "7"});
    binarize_attribute(g, "age", int_le_predicate(18));
    const auto [a, b] = group_nodes(g, "age");
    CHECK(a == std::vector<NodeId>{0, 4});
    CHECK(b == std::vector<NodeId>{1, 2, 3});

    // every node lands in exactly one side
    CHECK(a.size() + b.size() == g.n());
}

TEST_CASE("ab predicate maps letters and rejects junk") {
    AttributedGraph g(3, {});
    g.set_raw_attribute("block", {"A", "B", "A"});
    binarize_attribute(g, "block", ab_predicate());
    CHECK(g.groups("block")[0] == Group::A);
    CHECK(g.groups("block")[1] == Group::B);

    AttributedGraph bad(1, {});
    bad.set_raw_attribute("block", {"C"});
    CHECK_THROWS_AS(binarize_attribute(bad, "block", ab_predicate()), data_error);
}

TEST_CASE("int predicate rejects non-integers") {
    AttributedGraph g(1, {});
    g.set_raw_attribute("age", {"12x"});
    CHECK_THROWS_AS(binarize_attribute(g, "age", int_le_predicate(18)), data_error);
}

TEST_CASE("edge list round-trips through files") {
    AttributedGraph g(6, {{0, 5}, {1, 2}, {3, 4}});
    const auto path = temp_file("fairim_test_edges.txt");
    write_edge_list(g, path.string());
    const AttributedGraph h = load_edge_list(path.string());
    CHECK(h.n() == g.n());
    CHECK(h.edges() == g.edges());
    fs::remove(path);
}

TEST_CASE("edge list honors the node count header") {
    const auto path = temp_file("fairim_test_header.txt");
    write_file(path, "#n 10\n0 1\n2 3\n");
    const AttributedGraph g = load_edge_list(path.string());
    CHECK(g.n() == 10);
    CHECK(g.edge_count() == 2);
    fs::remove(path);
}

TEST_CASE("edge list without header infers n from max id") {
    const auto path = temp_file("fairim_test_noheader.txt");
    write_file(path, "# comment\n0 1\n4 2\n");
    const AttributedGraph g = load_edge_list(path.string());
    CHECK(g.n() == 5);
    CHECK(g.has_edge(2, 4));
    fs::remove(path);
}

TEST_CASE("malformed edge lines are data errors") {
    const auto path = temp_file("fairim_test_badedge.txt");
    write_file(path, "0 one\n");
    CHECK_THROWS_AS(load_edge_list(path.string()), data_error);
    write_file(path, "0\n");
    CHECK_THROWS_AS(load_edge_list(path.string()), data_error);
    fs::remove(path);
}

TEST_CASE("missing edge file is a data error") {
    CHECK_THROWS_AS(load_edge_list("/nonexistent/fairim/edges.txt"), data_error);
}

TEST_CASE("remapped loader compacts sparse ids") {
    const auto path = temp_file("fairim_test_sparse.txt");
    const auto sidecar = temp_file("fairim_test_sparse_map.txt");
    write_file(path, "100 200\n200 300\n");
    const AttributedGraph g = load_edge_list_remapped(path.string(), sidecar.string());
    CHECK(g.n() == 3);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 2));
    CHECK_FALSE(g.has_edge(0, 2));

    std::ifstream side(sidecar);
    std::string header, l1, l2, l3;
    std::getline(side, header);
    std::getline(side, l1);
    std::getline(side, l2);
    std::getline(side, l3);
    CHECK(header == "original_id,dense_id");
    CHECK(l1 == "100,0");
    CHECK(l2 == "200,1");
    CHECK(l3 == "300,2");
    fs::remove(path);
    fs::remove(sidecar);
}

TEST_CASE("attributes round-trip through csv") {
    AttributedGraph g(3, {{0, 1}});
    g.set_raw_attribute("age", {"10", "20", "30"});
    g.set_raw_attribute("region", {"x", "y", "x"});
    const auto path = temp_file("fairim_test_attrs.csv");
    write_attributes(g, path.string());

    AttributedGraph h(3, {{0, 1}});
    load_attributes(path.string(), h);
    CHECK(h.raw_attribute("age") == g.raw_attribute("age"));
    CHECK(h.raw_attribute("region") == g.raw_attribute("region"));
    CHECK(h.raw_attribute_names() == g.raw_attribute_names());
    fs::remove(path);
}

TEST_CASE("attribute csv node mismatch is a data error") {
    const auto path = temp_file("fairim_test_attr_short.csv");
    write_file(path, "node_id,age\n0,10\n1,20\n");
    AttributedGraph g(3, {});
    CHECK_THROWS_AS(load_attributes(path.string(), g), data_error);
    fs::remove(path);
}

TEST_CASE("unknown attribute lookups throw") {
    AttributedGraph g(2, {});
    CHECK_THROWS_AS(g.raw_attribute("nope"), data_error);
    CHECK_THROWS_AS(g.groups("nope"), data_error);
    CHECK_THROWS_AS(group_nodes(g, "nope"), data_error);
}
