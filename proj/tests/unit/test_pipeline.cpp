#include "doctest.h"

#include "cloudsentry/error.hpp"
#include "cloudsentry/pipeline.hpp"

using namespace cloudsentry;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.topology.n = 16;
    cfg.topology.model = SubnetBlocks{2, 0.4, 0.05};
    cfg.topology.hyperedges = {1, 2, 4};
    cfg.epidemic.horizon = 6;
    cfg.embed.dim = 6;
    cfg.embed.epochs = 1;
    cfg.train.hidden = 6;
    cfg.train.embedding = 3;
    cfg.train.epochs = 20;
    cfg.federate.clients = 2;
    cfg.federate.client_vertices = 10;
    cfg.federate.federation.rounds = 3;
    cfg.audit.audit.trials = 500;
    return cfg;
}

}  // namespace

TEST_CASE("stages are deterministic and consistent") {
    const auto cfg = small_config();
    const auto g = build_graph(cfg);
    CHECK(g == build_graph(cfg));
    CHECK(g.size() == 16);
    const auto traj = simulate(cfg, g);
    CHECK(traj.states.front().compartment[0] != Compartment::S);
    const auto logs = synthesize_logs(cfg, g, traj);
    CHECK(logs.corpus == synthesize_logs(cfg, g, traj).corpus);
    const auto table = embed_logs(cfg, logs.corpus);
    CHECK(table.dim() == 6);
    const auto d1 = detect(cfg, g, logs.corpus, table);
    const auto d2 = detect(cfg, g, logs.corpus, table);
    CHECK(heatmap_csv(d1.ranking) == heatmap_csv(d2.ranking));
    CHECK(d1.scores.size() == 16);

    ExperimentConfig other = cfg;
    other.seed = 8;
    CHECK_FALSE(build_graph(other) == g);
}

TEST_CASE("corpus_until keeps only past entries") {
    LogCorpus c(2);
    c.entries[0] = {{0, {"a"}}, {1, {"b"}}, {2, {"c"}}};
    c.entries[1] = {{2, {"d"}}};
    const auto cut = corpus_until(c, 1);
    CHECK(cut.entries[0].size() == 2);
    CHECK(cut.entries[1].empty());
    CHECK(corpus_until(c, 5) == c);
}

TEST_CASE("embedding trajectory and forecast") {
    auto cfg = small_config();
    cfg.epidemic.gamma = 0.0;  // keep the run alive for the whole horizon
    const auto g = build_graph(cfg);
    const auto traj = simulate(cfg, g);
    const auto logs = synthesize_logs(cfg, g, traj);
    const auto table = embed_logs(cfg, logs.corpus);
    const auto det = detect(cfg, g, logs.corpus, table);
    const int last = traj.states.back().t;
    const auto z = embedding_trajectory(g, logs.corpus, table, det.training.params, last);
    REQUIRE(z.size() == static_cast<std::size_t>(last + 1));
    // The last frame matches encoding the full corpus.
    const auto full = encode(normalized_adjacency(g), featurize_all(logs.corpus, table), det.training.params);
    CHECK((z.back() - full).norm() == 0.0);

    const auto run = forecast_run(cfg, g, traj, logs.corpus, table, det.training.params);
    CHECK(run.first_step == last + 1);
    REQUIRE(run.colors.size() == 3);
    for (const auto& c : run.colors) {
        CHECK(c.size() == 16);
        CHECK(c.minCoeff() >= 0.0);
        CHECK(c.maxCoeff() <= 1.0);
    }
}

TEST_CASE("plan run respects the configuration") {
    auto cfg = small_config();
    cfg.plan.objective.budget = 1;
    cfg.plan.objective.n_rollouts = 10;
    cfg.plan.objective.protected_vertices = {1};
    const auto g = build_graph(cfg);
    const auto traj = simulate(cfg, g);
    const auto greedy = plan_run(cfg, g, traj);
    CHECK(greedy.plan.size() <= 1);
    CHECK_NOTHROW(check_plan(g, greedy.plan, cfg.plan.objective));
    cfg.plan.method = PlanMethod::Exhaustive;
    const auto best = plan_run(cfg, g, traj);
    CHECK(best.evaluation.objective <= greedy.evaluation.objective);
}

TEST_CASE("federated clients and audit") {
    const auto cfg = small_config();
    const auto g = build_graph(cfg);
    const auto logs = synthesize_logs(cfg, g, simulate(cfg, g));
    const auto table = embed_logs(cfg, logs.corpus);
    const auto a = federate_run(cfg, table);
    const auto b = federate_run(cfg, table);
    CHECK(a.rounds.size() == 3);
    CHECK(round_log_csv(a.rounds) == round_log_csv(b.rounds));
    CHECK(a.model == b.model);
    const auto audit = audit_run(cfg, table);
    CHECK(audit.epsilon == doctest::Approx(account_privacy({}, 2.0, cfg.audit.audit.delta).epsilon));
}

TEST_CASE("benchmark construction") {
    BenchmarkConfig cfg;
    cfg.n = 40;
    cfg.subnets = 4;
    cfg.anomalies = 4;
    cfg.steps = 2;
    const auto b = anomaly_benchmark(cfg, 3);
    int positives = 0;
    for (int v = 0; v < 40; ++v) {
        positives += b.labels[static_cast<std::size_t>(v)];
        if (b.labels[static_cast<std::size_t>(v)]) CHECK(b.graph.degree(v) >= 5);
    }
    CHECK(positives == 4);
    CHECK(b.features.rows() == 40);
    CHECK(anomaly_benchmark(cfg, 3).features == b.features);
    cfg.anomalies = 0;
    CHECK_THROWS_AS(anomaly_benchmark(cfg, 3), InvalidArgument);
}
