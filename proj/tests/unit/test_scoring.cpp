#include <cmath>
#include <map>
#include <random>

#include "doctest.h"

#include "cloudsentry/error.hpp"
#include "cloudsentry/scoring.hpp"

using namespace cloudsentry;

namespace {

CloudGraph star(int leaves) {
    std::vector<Edge> edges;
    for (int v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
    return CloudGraph::create(leaves + 1, edges);
}

// Exact distribution of the number of vertices ever infected after `horizon`
// steps, by enumerating every joint outcome of the per-step Bernoulli draws.
// A state is (compartment code, latency timer) per vertex.
struct ExactSpread {
    double mean = 0.0;
    double variance = 0.0;
};

ExactSpread exact_spread(const CloudGraph& g, VertexId seed_vertex, const EpidemicParams& p) {
    const int n = g.size();
    using Key = std::vector<std::pair<int, int>>;  // 0=S 1=D 2=I 3=R
    std::map<Key, double> dist;
    Key start(static_cast<std::size_t>(n), {0, 0});
    start[static_cast<std::size_t>(seed_vertex)] = {2, 0};
    dist[start] = 1.0;

    for (int t = 0; t < p.horizon; ++t) {
        std::map<Key, double> next;
        for (const auto& [state, prob] : dist) {
            // Independent coins: exposure of each S vertex with infective
            // neighbours, recovery of each I vertex.
            std::vector<std::pair<int, double>> coins;  // (vertex, probability of "yes")
            for (int v = 0; v < n; ++v) {
                const auto c = state[static_cast<std::size_t>(v)].first;
                if (c == 0) {
                    int k = 0;
                    for (VertexId u : g.neighbors(v)) k += state[static_cast<std::size_t>(u)].first == 2;
                    if (k > 0) coins.emplace_back(v, 1.0 - std::pow(1.0 - p.beta, k));
                } else if (c == 2) {
                    coins.emplace_back(v, p.gamma);
                }
            }
            const unsigned combos = 1u << coins.size();
            for (unsigned mask = 0; mask < combos; ++mask) {
                double q = prob;
                Key out = state;
                for (std::size_t k = 0; k < coins.size(); ++k) {
                    const bool yes = mask & (1u << k);
                    q *= yes ? coins[k].second : 1.0 - coins[k].second;
                    if (!yes) continue;
                    auto& slot = out[static_cast<std::size_t>(coins[k].first)];
                    if (slot.first == 0) {
                        slot = p.delitescence == 0 ? std::pair{2, 0} : std::pair{1, p.delitescence};
                    } else {
                        slot = {3, 0};
                    }
                }
                // Latency countdown applies to vertices that were D at step start.
                for (int v = 0; v < n; ++v) {
                    if (state[static_cast<std::size_t>(v)].first != 1) continue;
                    auto& slot = out[static_cast<std::size_t>(v)];
                    slot.second -= 1;
                    if (slot.second == 0) slot.first = 2;
                }
                if (q > 0) next[out] += q;
            }
        }
        dist = std::move(next);
    }
    ExactSpread s;
    for (const auto& [state, prob] : dist) {
        int infected = 0;
        for (const auto& slot : state) infected += slot.first != 0;
        s.mean += prob * infected;
        s.variance += prob * infected * infected;
    }
    s.variance -= s.mean * s.mean;
    return s;
}

CloudGraph random_connected(int n, double p, std::mt19937_64& rng) {
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) edges.emplace_back(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
    std::bernoulli_distribution coin(p);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (coin(rng) && std::find(edges.begin(), edges.end(), Edge(u, v)) == edges.end()) edges.emplace_back(u, v);
    return CloudGraph::create(n, edges);
}

}  // namespace

TEST_CASE("exploitability examples") {
    const auto g = star(9);
    CHECK(exploitability(g, 0, 1.0) == 1.0);
    CHECK(exploitability(g, 3, 0.0) == doctest::Approx(0.5 / 9.0));
    CHECK(exploitability(g, 3, 0.0) == doctest::Approx(0.0556).epsilon(1e-3));
    const auto cycle = CloudGraph::create(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    for (int v = 1; v < 4; ++v) CHECK(exploitability(cycle, v, 0.0) == exploitability(cycle, 0, 0.0));
    CHECK_THROWS_AS(exploitability(g, 0, 1.5), InvalidArgument);
}

TEST_CASE("exploitability and risk are monotone in the anomaly score") {
    const auto g = star(5);
    const ScoreWeights w{0.2, 0.3, 0.5};
    for (VertexId v = 0; v < 6; ++v) {
        double prev_e = -1, prev_r = -1;
        for (int k = 0; k <= 20; ++k) {
            const double a = k / 20.0;
            const double e = exploitability(g, v, a);
            const double r = risk(e, 0.4, a, w);
            CHECK(e >= prev_e);
            CHECK(r >= prev_r);
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
            prev_e = e;
            prev_r = r;
        }
    }
}

TEST_CASE("impact examples") {
    const auto g = CloudGraph::create(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    CHECK(impact(g, 2, {0.0, 1, 0.5, 20}, 30, 1) == doctest::Approx(1.0 / 5.0));
    CHECK(impact(g, 0, {1.0, 1, 0.0, 20}, 30, 1) == 1.0);

    auto isolated = EpidemicState::initial(5);
    isolated.severed = {Edge(1, 2), Edge(2, 3)};
    CHECK(impact(g, isolated, 2, {1.0, 0, 0.0, 20}, 30, 1) == doctest::Approx(1.0 / 5.0));
    CHECK_THROWS_AS(impact(g, 0, {}, 0, 1), InvalidArgument);
}

TEST_CASE("beta=1, gamma=0 infects every vertex of any connected graph with n <= 6") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5;
        const auto g = random_connected(n, 0.3, rng);
        for (VertexId v = 0; v < n; ++v) CHECK(impact(g, v, {1.0, trial % 3, 0.0, 30}, 5, 9) == 1.0);
    }
}

TEST_CASE("Monte Carlo impact agrees with the exact expectation within 3 sigma") {
    std::mt19937_64 rng(1);
    const int rollouts = 2000;
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 4 + trial % 3;
        const auto g = random_connected(n, 0.35, rng);
        const EpidemicParams p{0.4, trial % 2, 0.3, 6};
        const VertexId v = trial % n;
        const auto exact = exact_spread(g, v, p);
        const double estimate = impact(g, v, p, rollouts, 100 + static_cast<std::uint64_t>(trial));
        const double sigma = std::sqrt(exact.variance / rollouts) / n;
        CHECK(std::abs(estimate - exact.mean / n) <= 3 * sigma);
    }
}

TEST_CASE("cloud and hyperedge pooling") {
    CHECK(cloud_scores(std::vector<SecurityScores>(3)) == SecurityScores{});
    const std::vector<SecurityScores> one{{0.3, 0.2, 0.1}};
    CHECK(cloud_scores(one) == one[0]);
    const std::vector<SecurityScores> two{{0.2, 0.0, 0.0}, {0.8, 0.0, 0.0}};
    CHECK(cloud_scores(two).risk == doctest::Approx(0.5));
    CHECK_THROWS_AS(cloud_scores(std::vector<SecurityScores>{}), InvalidArgument);

    const std::vector<double> values{0.1, 0.9, 0.4, 0.6};
    const std::vector<VertexId> single{2};
    CHECK(hyperedge_score(single, values, Pooling::Mean) == 0.4);
    const std::vector<VertexId> pair{0, 1};
    CHECK(hyperedge_score(pair, values, Pooling::Max) == 0.9);
    CHECK_THROWS_AS(hyperedge_score(std::vector<VertexId>{}, values, Pooling::Mean), InvalidArgument);
}

TEST_CASE("mean pooling is order-free and matches cloud scores over the members") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<SecurityScores> scores(8);
        std::vector<double> risks(8);
        for (std::size_t v = 0; v < 8; ++v) {
            scores[v] = {u(rng), u(rng), u(rng)};
            risks[v] = scores[v].risk;
        }
        std::vector<VertexId> members{1, 3, 4, 6};
        const double pooled = hyperedge_score(members, risks, Pooling::Mean);
        std::shuffle(members.begin(), members.end(), rng);
        CHECK(hyperedge_score(members, risks, Pooling::Mean) == doctest::Approx(pooled).epsilon(1e-15));
        std::vector<SecurityScores> subset;
        for (VertexId v : members) subset.push_back(scores[static_cast<std::size_t>(v)]);
        CHECK(cloud_scores(subset).risk == doctest::Approx(pooled).epsilon(1e-15));
    }
}

TEST_CASE("vertex scores stay in range and export as CSV") {
    const auto g = generate_topology({12, Preferential{2}, {2, 2, 4}}, 3);
    std::vector<double> anomaly(12);
    for (std::size_t v = 0; v < 12; ++v) anomaly[v] = static_cast<double>(v) / 11.0;
    ScoringConfig cfg;
    cfg.epidemic = {0.3, 1, 0.2, 10};
    cfg.n_rollouts = 10;
    const auto scores = vertex_scores(g, EpidemicState::initial(12), anomaly, cfg, 5);
    for (const auto& s : scores) {
        for (double x : {s.risk, s.exploitability, s.impact}) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
    CHECK(scores == vertex_scores(g, EpidemicState::initial(12), anomaly, cfg, 5));
    const auto csv = scores_csv(scores, anomaly);
    CHECK(csv.rfind("vertex_id,risk,exploitability,impact,anomaly\n0,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
    CHECK(hyperedge_score(g, "library-0", anomaly, Pooling::Max) >= 0.0);
    CHECK_THROWS_AS(hyperedge_score(g, "nope", anomaly, Pooling::Max), NotFound);
    cfg.weights = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(vertex_scores(g, EpidemicState::initial(12), anomaly, cfg, 5), InvalidArgument);
}
