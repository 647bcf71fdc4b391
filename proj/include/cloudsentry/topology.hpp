#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace cloudsentry {

using VertexId = int;

/// Undirected edge, always stored with u < v.
struct Edge {
    VertexId u = 0;
    VertexId v = 0;

    Edge() = default;
    Edge(VertexId a, VertexId b) : u(a < b ? a : b), v(a < b ? b : a) {}

    auto operator<=>(const Edge&) const = default;
};

using Hyperedges = std::map<std::string, std::vector<VertexId>>;
using VertexMeta = std::map<std::string, std::string>;
using EdgeAttributes = std::map<Edge, std::vector<double>>;

/// Attributed undirected graph with named hyperedges (subnets, shared
/// libraries). Immutable once built; `create` validates every invariant
/// except connectivity, which is reported by `connected()`.
class CloudGraph {
public:
    static CloudGraph create(int n, std::vector<Edge> edges, Hyperedges hyperedges = {},
                             std::vector<VertexMeta> vertex_meta = {},
                             EdgeAttributes edge_attr = {});

    int size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Hyperedges& hyperedges() const noexcept { return hyperedges_; }
    const std::vector<VertexMeta>& vertex_meta() const noexcept { return meta_; }
    const EdgeAttributes& edge_attr() const noexcept { return edge_attr_; }

    /// Sorted neighbor list of v.
    const std::vector<VertexId>& neighbors(VertexId v) const { return adj_.at(static_cast<std::size_t>(v)); }
    int degree(VertexId v) const { return static_cast<int>(neighbors(v).size()); }
    int max_degree() const noexcept;
    bool has_edge(VertexId a, VertexId b) const;
    bool contains(VertexId v) const noexcept { return v >= 0 && v < n_; }
    bool connected() const;

    /// Dense 0/1 adjacency matrix A (no self loops).
    Eigen::MatrixXd adjacency_matrix() const;

    /// Same graph with vertices relabeled: vertex v becomes perm[v].
    CloudGraph permuted(const std::vector<VertexId>& perm) const;

    bool operator==(const CloudGraph& other) const;

private:
    CloudGraph() = default;

    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<VertexId>> adj_;
    Hyperedges hyperedges_;
    std::vector<VertexMeta> meta_;
    EdgeAttributes edge_attr_;
};

struct UniformRandom {
    double p = 0.0;
};

/// Each vertex attaches m extra edges to earlier vertices, preferring high degree.
struct Preferential {
    int m = 1;
};

/// k equal-sized blocks; each block becomes a "subnet-<i>" hyperedge.
struct SubnetBlocks {
    int k = 1;
    double p_in = 0.5;
    double p_out = 0.01;
};

using TopologyModel = std::variant<UniformRandom, Preferential, SubnetBlocks>;

/// Extra hyperedges ("library-<i>") drawn as random vertex subsets.
struct HyperedgeSpec {
    int count = 0;
    int min_size = 1;
    int max_size = 1;
};

struct TopologySpec {
    int n = 2;
    TopologyModel model = UniformRandom{};
    HyperedgeSpec hyperedges;

    void validate() const;
};

/// Random spanning tree first, then model edges, deduplicated.
CloudGraph generate_topology(const TopologySpec& spec, std::uint64_t seed);

/// D^{-1/2} (A + I) D^{-1/2} with D_ii = sum_j (A + I)_ij.
Eigen::MatrixXd normalized_adjacency(const CloudGraph& g);

struct LoadedGraph {
    CloudGraph graph;
    bool disconnected = false;
};

std::string graph_to_json(const CloudGraph& g);
LoadedGraph graph_from_json(const std::string& text);
void save_graph(const CloudGraph& g, const std::filesystem::path& path);
LoadedGraph load_graph(const std::filesystem::path& path);

}  // namespace cloudsentry
