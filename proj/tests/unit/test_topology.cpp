#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "cloudsentry/error.hpp"
#include "cloudsentry/textio.hpp"
#include "cloudsentry/topology.hpp"

using namespace cloudsentry;

namespace {

CloudGraph path3() { return CloudGraph::create(3, {{0, 1}, {1, 2}}); }

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("cloudsentry_topology_" + name);
}

}  // namespace

TEST_CASE("uniform-random with p=0 on two vertices is the single spanning edge") {
    TopologySpec spec{2, UniformRandom{0.0}, {}};
    const auto g = generate_topology(spec, 3);
    REQUIRE(g.edges().size() == 1);
    CHECK(g.edges()[0] == Edge(0, 1));
}

TEST_CASE("uniform-random with p=1 is complete") {
    const auto g = generate_topology({4, UniformRandom{1.0}, {}}, 11);
    CHECK(g.edges().size() == 6);
    for (int u = 0; u < 4; ++u)
        for (int v = u + 1; v < 4; ++v) CHECK(g.has_edge(u, v));
}

TEST_CASE("subnet blocks are denser inside than across") {
    const auto g = generate_topology({50, SubnetBlocks{5, 0.5, 0.01}, {}}, 7);
    REQUIRE(g.hyperedges().size() == 5);
    std::vector<int> block(50, -1);
    int b = 0;
    for (const auto& [name, members] : g.hyperedges()) {
        CHECK(members.size() == 10);
        for (int v : members) block[static_cast<std::size_t>(v)] = b;
        ++b;
    }
    int intra = 0, inter = 0;
    for (const Edge& e : g.edges()) (block[static_cast<std::size_t>(e.u)] == block[static_cast<std::size_t>(e.v)] ? intra : inter)++;
    const double intra_pairs = 5 * (10 * 9 / 2);
    const double inter_pairs = 50 * 49 / 2 - intra_pairs;
    CHECK(intra / intra_pairs > inter / inter_pairs);
    CHECK(g.connected());
}

TEST_CASE("invalid topology specs are rejected") {
    CHECK_THROWS_AS(generate_topology({1, UniformRandom{0.1}, {}}, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_topology({5, UniformRandom{1.5}, {}}, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_topology({5, Preferential{0}, {}}, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_topology({5, SubnetBlocks{0, 0.5, 0.1}, {}}, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_topology({5, SubnetBlocks{2, -0.1, 0.1}, {}}, 1), InvalidArgument);
    CHECK_THROWS_AS(CloudGraph::create(1, {}), InvalidArgument);
}

TEST_CASE("generation is deterministic and always connected") {
    const std::vector<TopologyModel> models{UniformRandom{0.05}, Preferential{2}, SubnetBlocks{4, 0.4, 0.02}};
    for (const auto& model : models) {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            TopologySpec spec{40, model, {3, 2, 6}};
            const auto a = generate_topology(spec, seed);
            const auto b = generate_topology(spec, seed);
            CHECK(a == b);
            CHECK(a.connected());
            CHECK(a.hyperedges().size() >= 3);
        }
    }
}

TEST_CASE("normalized adjacency hand values") {
    const auto single = normalized_adjacency(CloudGraph::create(2, {{0, 1}}));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(single(i, j) == doctest::Approx(0.5));
    const auto p = normalized_adjacency(path3());
    CHECK(p(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.40825).epsilon(1e-5));
    CHECK(p(0, 2) == 0.0);
}

TEST_CASE("normalized adjacency matches brute force on every graph with n <= 6") {
    for (int n = 2; n <= 6; ++n) {
        std::vector<Edge> pairs;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
        const unsigned masks = 1u << pairs.size();
        for (unsigned mask = 0; mask < masks; ++mask) {
            std::vector<Edge> edges;
            for (std::size_t k = 0; k < pairs.size(); ++k)
                if (mask & (1u << k)) edges.push_back(pairs[k]);
            const auto g = CloudGraph::create(n, edges);
            const auto an = normalized_adjacency(g);
            std::vector<double> deg(static_cast<std::size_t>(n), 1.0);
            for (const Edge& e : edges) {
                deg[static_cast<std::size_t>(e.u)] += 1;
                deg[static_cast<std::size_t>(e.v)] += 1;
            }
            for (int i = 0; i < n; ++i) {
                double row = 0.0, expected_row = 0.0;
                for (int j = 0; j < n; ++j) {
                    bool linked = i == j;
                    for (const Edge& e : edges) linked = linked || e == Edge(i, j);
                    const double expected = linked ? 1.0 / std::sqrt(deg[static_cast<std::size_t>(i)] * deg[static_cast<std::size_t>(j)]) : 0.0;
                    REQUIRE(std::abs(an(i, j) - expected) < 1e-15);
                    REQUIRE(an(i, j) == an(j, i));
                    REQUIRE(an(i, j) >= 0.0);
                    REQUIRE(an(i, j) <= 1.0);
                    row += an(i, j);
                    expected_row += expected;
                }
                REQUIRE(std::abs(row - expected_row) < 1e-12);
            }
        }
    }
}

TEST_CASE("graph files round-trip") {
    const auto k4 = generate_topology({4, UniformRandom{1.0}, {1, 2, 3}}, 5);
    const auto path = temp_file("k4.json");
    save_graph(k4, path);
    const auto loaded = load_graph(path);
    CHECK(loaded.graph == k4);
    CHECK_FALSE(loaded.disconnected);

    // Canonical form: saving the loaded graph gives the same bytes.
    const auto path2 = temp_file("k4_again.json");
    save_graph(loaded.graph, path2);
    CHECK(read_text_file(path) == read_text_file(path2));

    const auto big = generate_topology({60, SubnetBlocks{3, 0.3, 0.02}, {4, 3, 9}}, 99);
    CHECK(graph_from_json(graph_to_json(big)).graph == big);
}

TEST_CASE("graph file errors") {
    SUBCASE("duplicate edge is named") {
        const std::string text = R"({"n": 3, "edges": [[0,1],[1,2],[1,0]]})";
        try {
            graph_from_json(text);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("{0,1}") != std::string::npos);
        }
    }
    SUBCASE("hyperedge referencing vertex n") {
        const std::string text = R"({"n": 3, "edges": [[0,1],[1,2]], "hyperedges": {"lib": [0, 3]}})";
        try {
            graph_from_json(text);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("lib") != std::string::npos);
            CHECK(std::string(e.what()).find("vertex 3") != std::string::npos);
        }
    }
    SUBCASE("malformed JSON") { CHECK_THROWS_AS(graph_from_json("{\"n\": 3, \"edges\": [[0,1],"), FormatError); }
    SUBCASE("bad edge field") {
        try {
            graph_from_json(R"({"n": 3, "edges": [[0,1],[2]]})");
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("edges[1]") != std::string::npos);
        }
    }
    SUBCASE("disconnected graph loads with a warning flag") {
        const auto loaded = graph_from_json(R"({"n": 4, "edges": [[0,1],[2,3]]})");
        CHECK(loaded.disconnected);
        CHECK(loaded.graph.edges().size() == 2);
    }
}

TEST_CASE("permuting a graph relabels edges, hyperedges and metadata") {
    const auto g = generate_topology({6, UniformRandom{0.3}, {2, 2, 3}}, 4);
    const std::vector<VertexId> perm{3, 5, 0, 1, 4, 2};
    const auto pg = g.permuted(perm);
    for (const Edge& e : g.edges()) CHECK(pg.has_edge(perm[e.u], perm[e.v]));
    CHECK(pg.edges().size() == g.edges().size());
    for (int v = 0; v < 6; ++v) CHECK(pg.vertex_meta()[static_cast<std::size_t>(perm[v])] == g.vertex_meta()[static_cast<std::size_t>(v)]);
}
