#include <algorithm>
#include <set>

#include "doctest.h"

#include "cloudsentry/epidemic.hpp"
#include "cloudsentry/error.hpp"

using namespace cloudsentry;

namespace {

CloudGraph complete(int n) {
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
    return CloudGraph::create(n, edges);
}

// Two triangles {0,1,2} and {3,4,5} joined by the bridge 2-3.
CloudGraph barbell() {
    return CloudGraph::create(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}});
}

int rank(Compartment c) { return static_cast<int>(c); }

std::set<VertexId> ever_infected(const Trajectory& traj) {
    std::set<VertexId> out;
    for (const auto& s : traj.states)
        for (int v = 0; v < s.size(); ++v)
            if (s.compartment[static_cast<std::size_t>(v)] != Compartment::S) out.insert(v);
    return out;
}

// Step at which each vertex first left S (-1 if never).
std::vector<int> exposure_times(const Trajectory& traj) {
    std::vector<int> out(traj.states.front().compartment.size(), -1);
    for (const auto& s : traj.states)
        for (std::size_t v = 0; v < out.size(); ++v)
            if (out[v] < 0 && s.compartment[v] != Compartment::S) out[v] = s.t;
    return out;
}

}  // namespace

TEST_CASE("seed_infection") {
    const auto s0 = EpidemicState::initial(5);
    CHECK(seed_infection(s0, {}) == s0);
    const auto s1 = seed_infection(s0, {0});
    CHECK(s1.counts() == CompartmentCounts{4, 0, 1, 0});
    auto recovered = s0;
    recovered.compartment[3] = Compartment::R;
    try {
        seed_infection(recovered, {3});
        FAIL("expected error");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("vertex 3") != std::string::npos);
    }
    CHECK_THROWS_AS(seed_infection(s0, {7}), InvalidArgument);
}

TEST_CASE("K10 with beta=1, gamma=0, d_D=1: all D after one step, all I after two") {
    const auto g = complete(10);
    const EpidemicParams params{1.0, 1, 0.0, 10};
    const EpidemicRng rng(42);
    auto state = seed_infection(EpidemicState::initial(10), {0});
    auto r1 = step(g, state, params, rng);
    CHECK(r1.state.counts() == CompartmentCounts{0, 9, 1, 0});
    CHECK(r1.events.size() == 9);
    for (int v = 1; v < 10; ++v) CHECK(r1.state.d_timer[static_cast<std::size_t>(v)] == 1);
    auto r2 = step(g, r1.state, params, rng);
    CHECK(r2.state.counts() == CompartmentCounts{0, 0, 10, 0});
    CHECK(r2.state.t == 2);
}

TEST_CASE("beta=0 never infects anyone beyond the seeds") {
    const auto g = complete(8);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto traj = run(g, {0.0, 2, 0.1, 100}, {1, 4}, seed);
        CHECK(ever_infected(traj) == std::set<VertexId>{1, 4});
        CHECK(traj.events.empty());
        for (std::size_t k = 1; k < traj.states.size(); ++k)
            CHECK(traj.states[k].counts().infected() <= traj.states[k - 1].counts().infected());
    }
}

TEST_CASE("a quarantined seed transmits nothing") {
    const auto g = complete(6);
    auto state = seed_infection(EpidemicState::initial(6), {0});
    state = apply_action(g, state, QuarantineVertex{0, 5});
    const auto r = step(g, state, {1.0, 0, 0.0, 10}, EpidemicRng(1));
    CHECK(r.events.empty());
    CHECK(r.state.counts().s == 5);
}

TEST_CASE("run examples") {
    SUBCASE("certain recovery ends at t=1") {
        const auto traj = run(complete(4), {0.0, 0, 1.0, 20}, {2}, 9);
        REQUIRE(traj.states.size() == 2);
        CHECK(traj.states.back().t == 1);
        CHECK(traj.states.back().compartment[2] == Compartment::R);
    }
    SUBCASE("path graph infects vertex 2 at t=2") {
        const auto g = CloudGraph::create(3, {{0, 1}, {1, 2}});
        const auto traj = run(g, {1.0, 0, 0.0, 5}, {0}, 3);
        CHECK(traj.states[1].compartment[2] == Compartment::S);
        CHECK(traj.states[2].compartment[2] == Compartment::I);
        CHECK(traj.states[2].t == 2);
    }
    SUBCASE("runs are deterministic") {
        const auto g = barbell();
        const EpidemicParams params{0.4, 2, 0.2, 30};
        const auto a = run(g, params, {0}, 77);
        const auto b = run(g, params, {0}, 77);
        CHECK(a.states == b.states);
        CHECK(a.events == b.events);
    }
    SUBCASE("length bounded by horizon") {
        const auto traj = run(complete(7), {0.5, 1, 0.0, 6}, {0}, 1);
        CHECK(traj.states.size() <= 7);
    }
}

TEST_CASE("stepping past the horizon is an error") {
    const auto g = complete(3);
    auto state = seed_infection(EpidemicState::initial(3), {0});
    state.t = 4;
    CHECK_THROWS_AS(step(g, state, {0.5, 0, 0.0, 4}, EpidemicRng(1)), Conflict);
}

TEST_CASE("trajectory invariants over random runs") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const EpidemicParams params{0.35, static_cast<int>(seed % 4), 0.15, 60};
        const auto g = CloudGraph::create(7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {0, 6}, {1, 4}});
        const auto traj = run(g, params, {static_cast<VertexId>(seed % 7)}, seed);
        for (std::size_t k = 0; k < traj.states.size(); ++k) {
            const auto& s = traj.states[k];
            const auto c = s.counts();
            REQUIRE(c.s + c.d + c.i + c.r == 7);
            for (int v = 0; v < 7; ++v) {
                const auto cv = s.compartment[static_cast<std::size_t>(v)];
                const int timer = s.d_timer[static_cast<std::size_t>(v)];
                if (cv == Compartment::D) {
                    REQUIRE(timer >= 1);
                    REQUIRE(timer <= params.delitescence);
                }
                if (k > 0) REQUIRE(rank(cv) >= rank(traj.states[k - 1].compartment[static_cast<std::size_t>(v)]));
            }
        }
    }
}

TEST_CASE("interventions") {
    const auto g = barbell();
    const EpidemicParams params{1.0, 0, 0.0, 20};

    SUBCASE("quarantine then restore behaves like the original") {
        auto base = seed_infection(EpidemicState::initial(6), {0});
        auto modified = apply_action(g, base, QuarantineVertex{2, 10});
        modified = apply_action(g, modified, RestoreVertex{2});
        const auto a = run_from(g, base, params, EpidemicRng(5));
        const auto b = run_from(g, modified, params, EpidemicRng(5));
        CHECK(a.events == b.events);
    }
    SUBCASE("severing the bridge protects the clean side") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            auto state = seed_infection(EpidemicState::initial(6), {0});
            state = apply_action(g, state, SeverEdge{Edge(2, 3)});
            const auto traj = run_from(g, state, {1.0, 1, 0.3, 30}, EpidemicRng(seed));
            const auto infected = ever_infected(traj);
            REQUIRE_FALSE(infected.contains(3));
            REQUIRE_FALSE(infected.contains(4));
            REQUIRE_FALSE(infected.contains(5));
        }
    }
    SUBCASE("zero-length quarantine is a no-op") {
        const auto base = seed_infection(EpidemicState::initial(6), {0});
        CHECK(apply_action(g, base, QuarantineVertex{1, 0}) == base);
    }
    SUBCASE("errors") {
        const auto base = EpidemicState::initial(6);
        CHECK_THROWS_AS(apply_action(g, base, QuarantineVertex{9, 1}), InvalidArgument);
        CHECK_THROWS_AS(apply_action(g, base, SeverEdge{Edge(0, 5)}), InvalidArgument);
        CHECK_THROWS_AS(apply_action(g, base, RestoreVertex{1}), Conflict);
        CHECK_THROWS_AS(apply_action(g, base, RestoreEdge{Edge(2, 3)}), Conflict);
        const auto severed = apply_action(g, base, SeverEdge{Edge(2, 3)});
        CHECK_THROWS_AS(apply_action(g, severed, SeverEdge{Edge(3, 2)}), Conflict);
        CHECK(apply_action(g, severed, RestoreEdge{Edge(3, 2)}).severed.empty());
    }
    SUBCASE("quarantine expires") {
        auto state = seed_infection(EpidemicState::initial(6), {0});
        state = apply_action(g, state, QuarantineVertex{0, 2});
        const auto traj = run_from(g, state, params, EpidemicRng(1));
        // Blocked for steps 0 and 1; transmits at step 2.
        REQUIRE(traj.events.size() >= 2);
        CHECK(traj.events.front().t == 2);
    }
}

TEST_CASE("severing an edge never speeds up or widens an outbreak under shared draws") {
    const auto g = CloudGraph::create(8, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}, {4, 6}, {5, 7}, {6, 7}, {2, 5}});
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const EpidemicParams params{0.45, static_cast<int>(seed % 3), 0.25, 40};
        const auto base = seed_infection(EpidemicState::initial(8), {0});
        const auto& cut = g.edges()[seed % g.edges().size()];
        const auto original = run_from(g, base, params, EpidemicRng(seed));
        const auto modified = run_from(g, apply_action(g, base, SeverEdge{cut}), params, EpidemicRng(seed));
        const auto before = ever_infected(original);
        const auto after = ever_infected(modified);
        REQUIRE(std::includes(before.begin(), before.end(), after.begin(), after.end()));
        const auto t0 = exposure_times(original);
        const auto t1 = exposure_times(modified);
        for (std::size_t v = 0; v < t0.size(); ++v)
            if (t1[v] >= 0) REQUIRE(t1[v] >= t0[v]);
    }
}

TEST_CASE("scenario presets cover the attack taxonomy") {
    CHECK(scenario_presets().size() == 7);
    CHECK(scenario_preset("live-migration").kind == Scenario::LiveMigration);
    CHECK_THROWS_AS(scenario_preset("ransomware"), InvalidArgument);
    const auto p = scenario_preset("ddos").apply({});
    CHECK(p.beta == doctest::Approx(0.30));
}

TEST_CASE("trajectory exports") {
    const auto g = CloudGraph::create(3, {{0, 1}, {1, 2}});
    const auto traj = run(g, {1.0, 0, 0.0, 5}, {0}, 3);
    const auto csv = trajectory_csv(traj);
    CHECK(csv.rfind("t,nS,nD,nI,nR\n0,2,0,1,0\n1,1,0,2,0\n2,0,0,3,0\n", 0) == 0);
    const auto jsonl = trajectory_jsonl(traj);
    CHECK(jsonl.find(R"({"counts":{"D":0,"I":2,"R":0,"S":1},"events":[{"dst":1,"src":0,"t":0}],"t":1})") !=
          std::string::npos);
}
