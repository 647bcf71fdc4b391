#include "cloudsentry/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cloudsentry/error.hpp"

namespace cloudsentry {

namespace {

std::string edge_name(const Edge& e) {
    return "{" + std::to_string(e.u) + "," + std::to_string(e.v) + "}";
}

}  // namespace

CloudGraph CloudGraph::create(int n, std::vector<Edge> edges, Hyperedges hyperedges,
                              std::vector<VertexMeta> vertex_meta, EdgeAttributes edge_attr) {
    if (n < 2) {
        throw InvalidArgument("graph needs at least 2 vertices, got " + std::to_string(n));
    }
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.u < 0 || e.v >= n) {
            throw InvalidArgument("edge " + edge_name(e) + " references a vertex outside [0," +
                                  std::to_string(n) + ")");
        }
        if (e.u == e.v) {
            throw InvalidArgument("self-loop on vertex " + std::to_string(e.u));
        }
        if (i > 0 && edges[i - 1] == e) {
            throw InvalidArgument("duplicate edge " + edge_name(e));
        }
    }
    for (auto& [name, members] : hyperedges) {
        if (members.empty()) {
            throw InvalidArgument("hyperedge '" + name + "' is empty");
        }
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        for (VertexId v : members) {
            if (v < 0 || v >= n) {
                throw InvalidArgument("hyperedge '" + name + "' references vertex " + std::to_string(v) +
                                      " outside [0," + std::to_string(n) + ")");
            }
        }
    }
    if (vertex_meta.empty()) {
        vertex_meta.resize(static_cast<std::size_t>(n));
    } else if (vertex_meta.size() != static_cast<std::size_t>(n)) {
        throw InvalidArgument("vertex_meta has " + std::to_string(vertex_meta.size()) + " entries for " +
                              std::to_string(n) + " vertices");
    }
    for (const auto& [e, attr] : edge_attr) {
        if (!std::binary_search(edges.begin(), edges.end(), e)) {
            throw InvalidArgument("edge_attr for missing edge " + edge_name(e));
        }
    }

    CloudGraph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.adj_.assign(static_cast<std::size_t>(n), {});
    for (const Edge& e : g.edges_) {
        g.adj_[static_cast<std::size_t>(e.u)].push_back(e.v);
        g.adj_[static_cast<std::size_t>(e.v)].push_back(e.u);
    }
    for (auto& nb : g.adj_) std::sort(nb.begin(), nb.end());
    g.hyperedges_ = std::move(hyperedges);
    g.meta_ = std::move(vertex_meta);
    g.edge_attr_ = std::move(edge_attr);
    return g;
}

int CloudGraph::max_degree() const noexcept {
    int best = 0;
    for (const auto& nb : adj_) best = std::max(best, static_cast<int>(nb.size()));
    return best;
}

bool CloudGraph::has_edge(VertexId a, VertexId b) const {
    if (!contains(a) || !contains(b) || a == b) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
}

bool CloudGraph::connected() const {
    std::vector<char> seen(static_cast<std::size_t>(n_), 0);
    std::queue<VertexId> frontier;
    frontier.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        VertexId v = frontier.front();
        frontier.pop();
        for (VertexId w : neighbors(v)) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++reached;
                frontier.push(w);
            }
        }
    }
    return reached == n_;
}

Eigen::MatrixXd CloudGraph::adjacency_matrix() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    for (const Edge& e : edges_) {
        a(e.u, e.v) = 1.0;
        a(e.v, e.u) = 1.0;
    }
    return a;
}

CloudGraph CloudGraph::permuted(const std::vector<VertexId>& perm) const {
    if (perm.size() != static_cast<std::size_t>(n_)) {
        throw InvalidArgument("permutation size does not match vertex count");
    }
    std::vector<Edge> edges;
    edges.reserve(edges_.size());
    for (const Edge& e : edges_) edges.emplace_back(perm[e.u], perm[e.v]);
    Hyperedges hyper;
    for (const auto& [name, members] : hyperedges_) {
        auto& out = hyper[name];
        for (VertexId v : members) out.push_back(perm[v]);
    }
    std::vector<VertexMeta> meta(meta_.size());
    for (std::size_t v = 0; v < meta_.size(); ++v) meta[static_cast<std::size_t>(perm[v])] = meta_[v];
    EdgeAttributes attr;
    for (const auto& [e, values] : edge_attr_) attr[Edge(perm[e.u], perm[e.v])] = values;
    return create(n_, std::move(edges), std::move(hyper), std::move(meta), std::move(attr));
}

bool CloudGraph::operator==(const CloudGraph& other) const {
    return n_ == other.n_ && edges_ == other.edges_ && hyperedges_ == other.hyperedges_ &&
           meta_ == other.meta_ && edge_attr_ == other.edge_attr_;
}

void TopologySpec::validate() const {
    if (n < 2) throw InvalidArgument("topology needs n >= 2, got " + std::to_string(n));
    std::visit(
        [this](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, UniformRandom>) {
                if (!(m.p >= 0.0 && m.p <= 1.0)) throw InvalidArgument("uniform-random p must be in [0,1]");
            } else if constexpr (std::is_same_v<T, Preferential>) {
                if (m.m < 1) throw InvalidArgument("preferential m must be >= 1");
            } else {
                if (m.k < 1) throw InvalidArgument("subnet-blocks k must be >= 1");
                if (m.k > n) throw InvalidArgument("subnet-blocks k must not exceed n");
                if (!(m.p_in >= 0.0 && m.p_in <= 1.0)) throw InvalidArgument("subnet-blocks p_in must be in [0,1]");
                if (!(m.p_out >= 0.0 && m.p_out <= 1.0)) throw InvalidArgument("subnet-blocks p_out must be in [0,1]");
            }
        },
        model);
    if (hyperedges.count < 0) throw InvalidArgument("hyperedge count must be >= 0");
    if (hyperedges.count > 0 &&
        (hyperedges.min_size < 1 || hyperedges.max_size < hyperedges.min_size || hyperedges.min_size > n)) {
        throw InvalidArgument("hyperedge sizes must satisfy 1 <= min_size <= max_size, min_size <= n");
    }
}

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Random recursive tree over `members`: each vertex (in shuffled order)
// attaches to a uniformly chosen earlier one.
void add_spanning_tree(std::vector<VertexId> members, Rng& rng, std::set<Edge>& edges) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 1; i < members.size(); ++i) {
        int parent = uniform_int(rng, 0, static_cast<int>(i) - 1);
        edges.emplace(members[i], members[static_cast<std::size_t>(parent)]);
    }
}

std::vector<VertexId> iota_vec(int lo, int hi) {
    std::vector<VertexId> v(static_cast<std::size_t>(hi - lo));
    std::iota(v.begin(), v.end(), lo);
    return v;
}

}  // namespace

CloudGraph generate_topology(const TopologySpec& spec, std::uint64_t seed) {
    spec.validate();
    const int n = spec.n;
    Rng rng(seed);
    std::set<Edge> edges;
    Hyperedges hyper;

    if (const auto* ur = std::get_if<UniformRandom>(&spec.model)) {
        add_spanning_tree(iota_vec(0, n), rng, edges);
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (coin(rng, ur->p)) edges.emplace(u, v);
    } else if (const auto* pa = std::get_if<Preferential>(&spec.model)) {
        add_spanning_tree(iota_vec(0, n), rng, edges);
        std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
        for (const Edge& e : edges) {
            degree[static_cast<std::size_t>(e.u)] += 1.0;
            degree[static_cast<std::size_t>(e.v)] += 1.0;
        }
        for (int i = 1; i < n; ++i) {
            std::vector<double> weight(degree.begin(), degree.begin() + i);
            for (double& w : weight) w += 1.0;
            const int picks = std::min(pa->m, i);
            for (int k = 0; k < picks; ++k) {
                std::discrete_distribution<int> pick(weight.begin(), weight.end());
                int target = pick(rng);
                weight[static_cast<std::size_t>(target)] = 0.0;
                if (edges.emplace(i, target).second) {
                    degree[static_cast<std::size_t>(i)] += 1.0;
                    degree[static_cast<std::size_t>(target)] += 1.0;
                }
            }
        }
    } else {
        const auto& sb = std::get<SubnetBlocks>(spec.model);
        std::vector<int> block(static_cast<std::size_t>(n));
        for (int b = 0; b < sb.k; ++b) {
            const int lo = static_cast<int>(static_cast<long long>(b) * n / sb.k);
            const int hi = static_cast<int>(static_cast<long long>(b + 1) * n / sb.k);
            auto members = iota_vec(lo, hi);
            for (VertexId v : members) block[static_cast<std::size_t>(v)] = b;
            add_spanning_tree(members, rng, edges);
            if (b > 0) edges.emplace(uniform_int(rng, lo, hi - 1), uniform_int(rng, 0, lo - 1));
            hyper["subnet-" + std::to_string(b)] = std::move(members);
        }
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (coin(rng, block[static_cast<std::size_t>(u)] == block[static_cast<std::size_t>(v)] ? sb.p_in
                                                                                                        : sb.p_out))
                    edges.emplace(u, v);
    }

    for (int h = 0; h < spec.hyperedges.count; ++h) {
        const int size = uniform_int(rng, spec.hyperedges.min_size, std::min(spec.hyperedges.max_size, n));
        auto all = iota_vec(0, n);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(static_cast<std::size_t>(size));
        std::sort(all.begin(), all.end());
        hyper["library-" + std::to_string(h)] = std::move(all);
    }

    static const char* const kOs[] = {"linux", "windows", "bsd"};
    static const char* const kRole[] = {"web", "db", "worker", "gateway"};
    std::vector<VertexMeta> meta(static_cast<std::size_t>(n));
    for (auto& m : meta) {
        m["os"] = kOs[uniform_int(rng, 0, 2)];
        m["role"] = kRole[uniform_int(rng, 0, 3)];
    }
    EdgeAttributes attr;
    for (const Edge& e : edges) {
        const double bandwidth = static_cast<double>(uniform_int(rng, 1, 40)) / 4.0;   // Gbit/s
        const double latency = static_cast<double>(uniform_int(rng, 1, 200)) / 10.0;  // ms
        attr[e] = {bandwidth, latency};
    }
    return CloudGraph::create(n, {edges.begin(), edges.end()}, std::move(hyper), std::move(meta), std::move(attr));
}

Eigen::MatrixXd normalized_adjacency(const CloudGraph& g) {
    const int n = g.size();
    Eigen::VectorXd inv_sqrt_deg(n);
    for (int i = 0; i < n; ++i) inv_sqrt_deg(i) = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
    Eigen::MatrixXd a = g.adjacency_matrix();
    a.diagonal().setOnes();
    return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

std::string graph_to_json(const CloudGraph& g) {
    using nlohmann::json;
    json doc;
    doc["n"] = g.size();
    json edges = json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
    doc["edges"] = std::move(edges);
    json hyper = json::object();
    for (const auto& [name, members] : g.hyperedges()) hyper[name] = members;
    doc["hyperedges"] = std::move(hyper);
    json meta = json::array();
    for (const auto& m : g.vertex_meta()) meta.push_back(json(m));
    doc["vertex_meta"] = std::move(meta);
    json attr = json::array();
    for (const auto& [e, values] : g.edge_attr()) attr.push_back({{"edge", {e.u, e.v}}, {"attr", values}});
    doc["edge_attr"] = std::move(attr);
    return doc.dump(1) + "\n";
}

LoadedGraph graph_from_json(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("graph file is not valid JSON: ") + e.what());
    }
    std::string field = "n";
    try {
        const int n = doc.at("n").get<int>();
        std::vector<Edge> edges;
        field = "edges";
        const auto& jedges = doc.at("edges");
        std::set<Edge> seen;
        for (std::size_t i = 0; i < jedges.size(); ++i) {
            field = "edges[" + std::to_string(i) + "]";
            const auto& pair = jedges.at(i);
            if (!pair.is_array() || pair.size() != 2) throw FormatError(field + ": expected [u, v]");
            Edge e(pair.at(0).get<int>(), pair.at(1).get<int>());
            if (!seen.insert(e).second) throw FormatError(field + ": duplicate edge " + edge_name(e));
            edges.push_back(e);
        }
        Hyperedges hyper;
        if (doc.contains("hyperedges")) {
            for (const auto& [name, members] : doc.at("hyperedges").items()) {
                field = "hyperedges." + name;
                hyper[name] = members.get<std::vector<VertexId>>();
            }
        }
        std::vector<VertexMeta> meta;
        if (doc.contains("vertex_meta")) {
            field = "vertex_meta";
            meta = doc.at("vertex_meta").get<std::vector<VertexMeta>>();
        }
        EdgeAttributes attr;
        if (doc.contains("edge_attr")) {
            const auto& jattr = doc.at("edge_attr");
            for (std::size_t i = 0; i < jattr.size(); ++i) {
                field = "edge_attr[" + std::to_string(i) + "]";
                const auto& rec = jattr.at(i);
                Edge e(rec.at("edge").at(0).get<int>(), rec.at("edge").at(1).get<int>());
                attr[e] = rec.at("attr").get<std::vector<double>>();
            }
        }
        field = "graph";
        auto g = CloudGraph::create(n, std::move(edges), std::move(hyper), std::move(meta), std::move(attr));
        const bool disconnected = !g.connected();
        return LoadedGraph{std::move(g), disconnected};
    } catch (const json::exception& e) {
        throw FormatError("graph file field '" + field + "': " + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError("graph file field '" + field + "': " + e.what());
    }
}

void save_graph(const CloudGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write graph file " + path.string());
    out << graph_to_json(g);
}

LoadedGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read graph file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return graph_from_json(buf.str());
}

}  // namespace cloudsentry
