#include <random>

#include "doctest.h"

#include "cloudsentry/containment.hpp"
#include "cloudsentry/error.hpp"

using namespace cloudsentry;

namespace {

ObjectiveConfig deterministic_config(double beta, double gamma, int horizon) {
    ObjectiveConfig cfg;
    cfg.epidemic = {beta, 0, gamma, 1};
    cfg.horizon = horizon;
    cfg.n_rollouts = 3;
    return cfg;
}

CloudGraph random_connected(int n, std::mt19937_64& rng) {
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) edges.emplace_back(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
    std::bernoulli_distribution coin(0.3);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (coin(rng) && std::find(edges.begin(), edges.end(), Edge(u, v)) == edges.end()) edges.emplace_back(u, v);
    return CloudGraph::create(n, edges);
}

// Two triangles joined by the bridge 2-3.
CloudGraph barbell() { return CloudGraph::create(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}}); }

}  // namespace

TEST_CASE("hand-evaluated objectives") {
    const auto g = CloudGraph::create(3, {{0, 1}, {1, 2}});
    const auto state = seed_infection(EpidemicState::initial(3), {1});
    const int horizon = 7;

    SUBCASE("empty plan with no spread and no recovery") {
        auto cfg = deterministic_config(0.0, 0.0, horizon);
        cfg.lambda = 2.0;
        const auto eval = evaluate_plan(g, state, {}, cfg, 1);
        CHECK(eval.objective == 2.0 * horizon);
        CHECK(eval.report.containment_prob == 1.0);
        CHECK(eval.report.time_to_implement == 0);
    }
    SUBCASE("quarantining the only infected vertex for the whole horizon") {
        auto cfg = deterministic_config(1.0, 0.0, horizon);
        cfg.lambda = 3.0;
        const Plan plan{{QuarantineVertex{1, 100}, 4, 1.0}};
        const auto eval = evaluate_plan(g, state, plan, cfg, 1);
        CHECK(eval.objective == 1.0 + 3.0 * horizon);
        CHECK(eval.report.containment_prob == 1.0);
        CHECK(eval.report.time_to_implement == 4);
        CHECK(eval.report.business_impact == 0.0);
    }
    SUBCASE("business impact counts weighted quarantined steps inside the horizon") {
        auto cfg = deterministic_config(0.0, 0.0, horizon);
        cfg.lambda = 0.0;
        cfg.mu = 0.5;
        cfg.vertex_weight = {1.0, 1.0, 4.0};
        const Plan plan{{QuarantineVertex{2, 3}, 0, 0.0}, {QuarantineVertex{0, 50}, 0, 0.0}};
        CHECK(evaluate_plan(g, state, plan, cfg, 1).report.business_impact == 0.5 * (4.0 * 3 + 1.0 * horizon));
    }
    SUBCASE("unchecked spread on a path") {
        // beta=1, d_D=0: vertices 0 and 2 are infected from step 1 on.
        const auto cfg = deterministic_config(1.0, 0.0, horizon);
        const auto eval = evaluate_plan(g, state, {}, cfg, 1);
        CHECK(eval.objective == 3.0 * horizon);
        CHECK(eval.report.containment_prob == 0.0);
    }
}

TEST_CASE("constraint violations are named") {
    const auto g = barbell();
    const auto state = seed_infection(EpidemicState::initial(6), {0});
    auto cfg = deterministic_config(0.5, 0.1, 5);
    cfg.protected_vertices = {4};
    try {
        evaluate_plan(g, state, {{QuarantineVertex{4, 2}, 0, 1.0}}, cfg, 1);
        FAIL("expected ConstraintError");
    } catch (const ConstraintError& e) {
        CHECK(std::string(e.what()).find("protected") != std::string::npos);
        CHECK(std::string(e.what()).find("quarantine(4, 2)") != std::string::npos);
    }
    cfg.budget = 1;
    CHECK_THROWS_AS(evaluate_plan(g, state, {{SeverEdge{Edge(2, 3)}, 0, 1.0}, {SeverEdge{Edge(0, 1)}, 0, 1.0}}, cfg, 1),
                    ConstraintError);
    CHECK_THROWS_AS(evaluate_plan(g, state, {{SeverEdge{Edge(0, 5)}, 0, 1.0}}, cfg, 1), InvalidArgument);
    CHECK_THROWS_AS(evaluate_plan(g, state, {{QuarantineVertex{1, 0}, 0, 1.0}}, cfg, 1), ConstraintError);
}

TEST_CASE("single-rollout evaluation is reproducible") {
    const auto g = barbell();
    const auto state = seed_infection(EpidemicState::initial(6), {1});
    ObjectiveConfig cfg;
    cfg.epidemic = {0.5, 1, 0.2, 1};
    cfg.n_rollouts = 1;
    const Plan plan{{SeverEdge{Edge(2, 3)}, 1, 0.5}};
    CHECK(evaluate_plan(g, state, plan, cfg, 9).objective == evaluate_plan(g, state, plan, cfg, 9).objective);
    CHECK(evaluate_plan(g, state, plan, cfg, 9).report == evaluate_plan(g, state, plan, cfg, 9).report);
}

TEST_CASE("a no-effect quarantine leaves the infection term alone") {
    const auto g = CloudGraph::create(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    auto state = seed_infection(EpidemicState::initial(5), {0});
    state.compartment[4] = Compartment::R;
    state = apply_action(g, state, SeverEdge{Edge(3, 4)});
    ObjectiveConfig cfg;
    cfg.epidemic = {0.6, 1, 0.2, 1};
    cfg.n_rollouts = 40;
    const auto base = evaluate_plan(g, state, {}, cfg, 3);
    const auto with = evaluate_plan(g, state, {{QuarantineVertex{4, 5}, 0, 0.0}}, cfg, 3);
    CHECK(with.report.expected_infected_steps == base.report.expected_infected_steps);
    CHECK(with.objective == base.objective);
}

TEST_CASE("greedy planner behaviour") {
    SUBCASE("zero budget gives an empty plan") {
        const auto g = barbell();
        const auto state = seed_infection(EpidemicState::initial(6), {0});
        auto cfg = deterministic_config(1.0, 0.0, 5);
        cfg.budget = 0;
        CHECK(greedy_plan(g, state, cfg, default_candidates(g, state, cfg, {}), 1).empty());
    }
    SUBCASE("actions in a clean component are never chosen") {
        // Component {0,1,2} fully infected, component {3,4,5} clean.
        const auto g = CloudGraph::create(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
        const auto state = seed_infection(EpidemicState::initial(6), {0, 1, 2});
        ObjectiveConfig cfg;
        cfg.epidemic = {0.7, 1, 0.3, 1};
        cfg.budget = 3;
        cfg.n_rollouts = 20;
        std::vector<PlannedAction> candidates;
        for (VertexId v = 3; v < 6; ++v) candidates.push_back({QuarantineVertex{v, 10}, 1, 0.5});
        candidates.push_back({SeverEdge{Edge(3, 4)}, 1, 0.1});
        candidates.push_back({SeverEdge{Edge(4, 5)}, 1, 0.1});
        CHECK(greedy_plan(g, state, cfg, candidates, 2).empty());
    }
    SUBCASE("a cheap bridge cut is chosen when infections are expensive") {
        const auto g = barbell();
        const auto state = seed_infection(EpidemicState::initial(6), {0});
        ObjectiveConfig cfg;
        cfg.epidemic = {0.9, 1, 0.05, 1};
        cfg.lambda = 10.0;
        cfg.budget = 1;
        cfg.n_rollouts = 20;
        const std::vector<PlannedAction> candidates{{SeverEdge{Edge(2, 3)}, 1, 0.1}, {SeverEdge{Edge(4, 5)}, 1, 0.1}};
        const auto plan = greedy_plan(g, state, cfg, candidates, 4);
        REQUIRE(plan.size() == 1);
        CHECK(plan[0].action == Intervention{SeverEdge{Edge(2, 3)}});
        CHECK(evaluate_plan(g, state, plan, cfg, 4).objective < evaluate_plan(g, state, {}, cfg, 4).objective);
    }
    SUBCASE("protected vertices are never quarantined") {
        const auto g = barbell();
        const auto state = seed_infection(EpidemicState::initial(6), {2});
        ObjectiveConfig cfg;
        cfg.epidemic = {0.9, 0, 0.0, 1};
        cfg.lambda = 5.0;
        cfg.protected_vertices = {2, 3};
        cfg.n_rollouts = 5;
        const auto candidates = default_candidates(g, state, cfg, {0.1, 0.1, 1, 1});
        for (const auto& c : candidates) {
            if (const auto* q = std::get_if<QuarantineVertex>(&c.action)) CHECK_FALSE(cfg.protected_vertices.contains(q->v));
        }
        const auto plan = greedy_plan(g, state, cfg, candidates, 1);
        CHECK(plan.size() <= 2);
        CHECK_NOTHROW(check_plan(g, plan, cfg));
    }
}

TEST_CASE("default candidates") {
    const auto g = barbell();
    auto state = seed_infection(EpidemicState::initial(6), {3});
    state = apply_action(g, state, SeverEdge{Edge(3, 4)});
    ObjectiveConfig cfg;
    cfg.horizon = 6;
    cfg.protected_vertices = {0};
    const auto c = default_candidates(g, state, cfg, {2.0, 0.5, 3, 1});
    // 5 quarantines (vertex 0 protected), then severs of live edges at 3: 2-3 and 3-5.
    REQUIRE(c.size() == 7);
    CHECK(c[0] == PlannedAction{QuarantineVertex{1, 6}, 3, 2.0});
    CHECK(c[5] == PlannedAction{SeverEdge{Edge(2, 3)}, 1, 0.5});
    CHECK(c[6] == PlannedAction{SeverEdge{Edge(3, 5)}, 1, 0.5});
}

TEST_CASE("exhaustive planner") {
    const auto g = barbell();
    const auto state = seed_infection(EpidemicState::initial(6), {0});
    ObjectiveConfig cfg;
    cfg.epidemic = {0.8, 1, 0.1, 1};
    cfg.n_rollouts = 10;

    SUBCASE("single candidate is taken iff it helps") {
        cfg.budget = 1;
        for (double cost : {0.01, 1000.0}) {
            const std::vector<PlannedAction> one{{SeverEdge{Edge(2, 3)}, 0, cost}};
            const auto plan = exhaustive_plan(g, state, cfg, one, 2);
            const bool helps = evaluate_plan(g, state, one, cfg, 2).objective < evaluate_plan(g, state, {}, cfg, 2).objective;
            CHECK(plan.size() == (helps ? 1u : 0u));
        }
    }
    SUBCASE("free actions and a huge lambda reach the fewest infections") {
        cfg.lambda = 1e6;
        cfg.budget = 10;
        const std::vector<PlannedAction> candidates{{SeverEdge{Edge(0, 1)}, 0, 0.0},
                                                    {SeverEdge{Edge(0, 2)}, 0, 0.0},
                                                    {SeverEdge{Edge(2, 3)}, 0, 0.0}};
        const auto plan = exhaustive_plan(g, state, cfg, candidates, 3);
        const double best = evaluate_plan(g, state, plan, cfg, 3).report.expected_infected_steps;
        CHECK(best == evaluate_plan(g, state, candidates, cfg, 3).report.expected_infected_steps);
        // Cutting vertex 0 off entirely leaves only the seed infected.
        CHECK(plan.size() == 2);
    }
    SUBCASE("search-space guard") {
        cfg.budget = 6;
        std::vector<PlannedAction> many;
        for (int k = 0; k < 40; ++k) many.push_back({QuarantineVertex{k % 6, 1 + k / 6}, 0, 1.0});
        CHECK_THROWS_AS(exhaustive_plan(g, state, cfg, many, 1), ConstraintError);
    }
}

TEST_CASE("exhaustive <= greedy <= empty on small random instances") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + trial % 4;
        const auto g = random_connected(n, rng);
        const auto state = seed_infection(EpidemicState::initial(n), {static_cast<VertexId>(trial % n)});
        ObjectiveConfig cfg;
        cfg.epidemic = {0.6, trial % 2, 0.2, 1};
        cfg.lambda = 1.0 + trial % 3;
        cfg.mu = 0.05;
        cfg.budget = 1 + trial % 2;
        cfg.horizon = 6;
        cfg.n_rollouts = 8;
        if (trial % 3 == 0) cfg.protected_vertices = {static_cast<VertexId>((trial + 1) % n)};
        const auto candidates = default_candidates(g, state, cfg, {1.0, 0.4, 1, 1});
        const auto greedy = greedy_plan(g, state, cfg, candidates, 5);
        const auto exact = exhaustive_plan(g, state, cfg, candidates, 5);
        CHECK_NOTHROW(check_plan(g, greedy, cfg));
        const double je = evaluate_plan(g, state, exact, cfg, 5).objective;
        const double jg = evaluate_plan(g, state, greedy, cfg, 5).objective;
        const double j0 = evaluate_plan(g, state, {}, cfg, 5).objective;
        CHECK(je <= jg);
        CHECK(jg <= j0);
    }
}

TEST_CASE("actions round-trip through JSON") {
    const std::vector<PlannedAction> actions{{QuarantineVertex{3, 4}, 2, 1.5},
                                             {SeverEdge{Edge(5, 1)}, 1, 0.25},
                                             {RestoreVertex{2}, 0, 0.0},
                                             {RestoreEdge{Edge(0, 4)}, 0, 0.0}};
    for (const auto& a : actions) CHECK(action_from_json(action_to_json(a)) == a);
    CHECK(action_to_json(actions[1]).at("edge") == nlohmann::json::array({1, 5}));
    CHECK_THROWS_AS(intervention_from_json(nlohmann::json{{"kind", "reboot"}}), FormatError);
    CHECK_THROWS_AS(intervention_from_json(nlohmann::json{{"kind", "quarantine"}, {"vertex", 1}}), FormatError);
    CHECK_THROWS_AS(intervention_from_json(nlohmann::json{{"kind", "sever"}, {"edge", {1}}}), FormatError);

    PlanEvaluation eval{12.5, {3, 0.5, 0.75, 10.0}};
    const auto text = plan_file({actions[0]}, eval);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("actions").size() == 1);
    CHECK(j.at("objective") == 12.5);
    CHECK(report_csv(eval) ==
          "objective,time_to_implement,business_impact,containment_prob,expected_infected_steps\n12.5,3,0.5,0.75,10.0\n");
}
