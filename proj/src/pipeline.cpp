#include "cloudsentry/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"

namespace cloudsentry {

ModuleSeeds ModuleSeeds::derive(std::uint64_t global) {
    ModuleSeeds s;
    s.topology = derive_seed(global, "topology");
    s.epidemic = derive_seed(global, "epidemic");
    s.logs = derive_seed(global, "logs");
    s.embed = derive_seed(global, "embed");
    s.train = derive_seed(global, "train");
    s.scoring = derive_seed(global, "scoring");
    s.forecast = derive_seed(global, "forecast");
    s.plan = derive_seed(global, "plan");
    s.federate = derive_seed(global, "federate");
    s.audit = derive_seed(global, "audit");
    return s;
}

ExperimentConfig::ExperimentConfig() {
    topology.n = 50;
    topology.model = SubnetBlocks{5, 0.3, 0.02};
    topology.hyperedges = {2, 3, 8};
    epidemic.horizon = 20;
    epidemic = scenario_preset(preset).apply(epidemic);
    embed.dim = 16;
    embed.epochs = 3;
    train.epochs = 200;
    train.learning_rate = 1e-2;
    federate.federation.rounds = 10;
    federate.federation.local = {5, 1e-2, train.alpha};
    scoring.epidemic = epidemic;
    plan.objective.epidemic = epidemic;
}

void ExperimentConfig::validate() const {
    if (graph_file.empty()) topology.validate();
    scenario_preset(preset);
    epidemic.validate();
    if (initial_infected.empty()) throw InvalidArgument("initial_infected must name at least one vertex");
    if (logs.rate < 1) throw InvalidArgument("logs.rate must be >= 1");
    if (!(logs.mix >= 0.0 && logs.mix <= 1.0)) throw InvalidArgument("logs.mix must be in [0,1]");
    embed.validate();
    train.validate();
    scoring.weights.validate();
    if (scoring.n_rollouts < 1) throw InvalidArgument("scoring.n_rollouts must be >= 1");
    if (forecast.order < 1) throw InvalidArgument("forecast.order must be >= 1");
    if (!(forecast.ridge > 0.0)) throw InvalidArgument("forecast.ridge must be > 0");
    if (forecast.steps < 0) throw InvalidArgument("forecast.steps must be >= 0");
    if (plan.at_step < 0) throw InvalidArgument("plan.at_step must be >= 0");
    if (federate.clients < 1) throw InvalidArgument("federate.clients must be >= 1");
    if (federate.client_vertices < 2) throw InvalidArgument("federate.client_vertices must be >= 2");
    federate.federation.validate(federate.clients);
    if (feature_window < 1) throw InvalidArgument("detect.window must be >= 1");
    if (serve.port < 0 || serve.port > 65535) throw InvalidArgument("serve.port must be in [0, 65535]");
    if (serve.event_queue < 1) throw InvalidArgument("serve.event_queue must be >= 1");
    if (audit.audit.trials < 1 || audit.audit.bins < 1) throw InvalidArgument("audit trials and bins must be >= 1");
    if (!(audit.noise >= 0.0)) throw InvalidArgument("audit.noise must be >= 0");
    if (!(audit.clip > 0.0)) throw InvalidArgument("audit.clip must be > 0");
}

CloudGraph build_graph(const ExperimentConfig& cfg) {
    if (!cfg.graph_file.empty()) return load_graph(cfg.graph_file).graph;
    return generate_topology(cfg.topology, cfg.seeds().topology);
}

Trajectory simulate(const ExperimentConfig& cfg, const CloudGraph& g) {
    return run(g, cfg.epidemic, cfg.initial_infected, cfg.seeds().epidemic);
}

GeneratedLogs synthesize_logs(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj) {
    return generate_logs(g, traj, scenario_preset(cfg.preset), cfg.logs, cfg.seeds().logs);
}

EmbeddingTable embed_logs(const ExperimentConfig& cfg, const LogCorpus& corpus) {
    SkipGramConfig sg = cfg.embed;
    sg.seed = cfg.seeds().embed;
    return train_embeddings(corpus, sg).table;
}

LogCorpus corpus_until(const LogCorpus& corpus, int t) {
    LogCorpus out(corpus.size());
    for (std::size_t v = 0; v < corpus.entries.size(); ++v) {
        for (const auto& e : corpus.entries[v])
            if (e.step <= t) out.entries[v].push_back(e);
    }
    return out;
}

namespace {

Detection detect_features(const CloudGraph& g, Eigen::MatrixXd features, GcnTrainConfig train_cfg) {
    Detection d;
    d.features = std::move(features);
    d.training = train(g, d.features, train_cfg);
    const auto data = GraphData::from(g, d.features);
    const auto f = forward(data.normalized, data.features, d.training.params);
    d.scores = anomaly_scores(data.adjacency, f.a_hat, data.features, f.r_hat, train_cfg.alpha);
    d.ranking = rank_anomalies(d.scores);
    return d;
}

}  // namespace

Detection detect(const ExperimentConfig& cfg, const CloudGraph& g, const LogCorpus& corpus,
                 const EmbeddingTable& table) {
    if (corpus.size() != g.size()) throw InvalidArgument("log corpus does not cover the graph");
    GcnTrainConfig t = cfg.train;
    t.seed = cfg.seeds().train;
    return detect_features(g, featurize_all(corpus, table, cfg.feature_window), t);
}

EmbeddingTrajectory embedding_trajectory(const CloudGraph& g, const LogCorpus& corpus, const EmbeddingTable& table,
                                         const GcnParams& params, int last_step, int window) {
    const Eigen::MatrixXd norm = normalized_adjacency(g);
    EmbeddingTrajectory z;
    for (int t = 0; t <= last_step; ++t) z.push_back(encode(norm, featurize_all(corpus_until(corpus, t), table, window), params));
    return z;
}

SupervisedHead fit_infection_head(const EmbeddingTrajectory& z, const Trajectory& traj) {
    if (z.empty() || z.size() > traj.states.size()) throw InvalidArgument("embedding trajectory and states disagree");
    const Eigen::Index n = z.front().rows();
    Eigen::MatrixXd x(n * static_cast<Eigen::Index>(z.size()), z.front().cols());
    Eigen::VectorXd y(x.rows());
    for (std::size_t t = 0; t < z.size(); ++t) {
        const auto& state = traj.states[t];
        x.middleRows(static_cast<Eigen::Index>(t) * n, n) = z[t];
        for (Eigen::Index v = 0; v < n; ++v) {
            const Compartment c = state.compartment[static_cast<std::size_t>(v)];
            y(static_cast<Eigen::Index>(t) * n + v) = (c == Compartment::D || c == Compartment::I) ? 1.0 : 0.0;
        }
    }
    return fit_supervised(x, y, HeadTask::InfectedIndicator);
}

ForecastRun forecast_run(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj,
                         const LogCorpus& corpus, const EmbeddingTable& table, const GcnParams& params) {
    const int last = traj.states.back().t;
    const auto z = embedding_trajectory(g, corpus, table, params, last, cfg.feature_window);
    ForecastRun out;
    out.params = fit_forecaster({z}, cfg.forecast.order, cfg.forecast.ridge);
    out.head = fit_infection_head(z, traj);
    out.colors = color_forecast(out.params, z, out.head, cfg.forecast.steps);
    out.first_step = last + 1;
    return out;
}

PlanRun plan_run(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj) {
    const auto t0 = std::min<std::size_t>(static_cast<std::size_t>(cfg.plan.at_step), traj.states.size() - 1);
    ObjectiveConfig objective = cfg.plan.objective;
    objective.epidemic = cfg.epidemic;
    const std::uint64_t seed = cfg.seeds().plan;
    PlanRun out;
    out.start = traj.states[t0];
    auto candidates = default_candidates(g, out.start, objective, cfg.plan.costs);
    out.plan = cfg.plan.method == PlanMethod::Greedy ? greedy_plan(g, out.start, objective, candidates, seed)
                                                     : exhaustive_plan(g, out.start, objective, candidates, seed);
    out.evaluation = evaluate_plan(g, out.start, out.plan, objective, seed);
    return out;
}

std::vector<CloudClient> federated_clients(const ExperimentConfig& cfg, const EmbeddingTable& table) {
    std::vector<CloudClient> clients;
    const std::uint64_t base = cfg.seeds().federate;
    for (int c = 0; c < cfg.federate.clients; ++c) {
        const std::uint64_t seed = derive_seed(base, static_cast<std::uint64_t>(c));
        TopologySpec spec = cfg.topology;
        spec.n = cfg.federate.client_vertices;
        if (auto* sb = std::get_if<SubnetBlocks>(&spec.model)) sb->k = std::min(sb->k, spec.n);
        if (auto* pa = std::get_if<Preferential>(&spec.model)) pa->m = std::min(pa->m, spec.n - 1);
        spec.hyperedges.max_size = std::min(spec.hyperedges.max_size, spec.n);
        spec.hyperedges.min_size = std::min(spec.hyperedges.min_size, spec.hyperedges.max_size);
        const auto g = generate_topology(spec, derive_seed(seed, "topology"));
        const auto traj = run(g, cfg.epidemic, {0}, derive_seed(seed, "epidemic"));
        const auto logs = generate_logs(g, traj, scenario_preset(cfg.preset), cfg.logs, derive_seed(seed, "logs"));
        clients.emplace_back(c, GraphData::from(g, featurize_all(logs.corpus, table, cfg.feature_window)), cfg.federate.federation.local);
    }
    return clients;
}

FederationResult federate_run(const ExperimentConfig& cfg, const EmbeddingTable& table) {
    GcnTrainConfig t = cfg.train;
    t.seed = cfg.seeds().train;
    FederationConfig fed = cfg.federate.federation;
    fed.seed = cfg.seeds().federate;
    return run_federation(federated_clients(cfg, table), init_params(table.dim(), t), fed);
}

AuditRun audit_run(const ExperimentConfig& cfg, const EmbeddingTable& table) {
    ExperimentConfig one = cfg;
    one.federate.clients = 1;
    const auto clients = federated_clients(one, table);
    GcnTrainConfig t = cfg.train;
    t.seed = cfg.seeds().train;
    AuditRun out;
    DpAuditConfig audit = cfg.audit.audit;
    audit.seed = cfg.seeds().audit;
    audit.epsilon = cfg.audit.epsilon.value_or(account_privacy({}, cfg.audit.noise, audit.delta).epsilon);
    out.epsilon = audit.epsilon;
    out.result = audit_aggregation(clients.front(), init_params(table.dim(), t), cfg.audit.noise, cfg.audit.clip, audit);
    return out;
}

BenchmarkConfig::BenchmarkConfig() {
    embed.dim = 16;
    embed.epochs = 3;
    train.epochs = 300;
    train.learning_rate = 1e-2;
}

Benchmark anomaly_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed) {
    if (cfg.anomalies < 1 || cfg.anomalies > cfg.n) throw InvalidArgument("benchmark anomalies must be in [1, n]");
    if (cfg.steps < 1) throw InvalidArgument("benchmark steps must be >= 1");
    TopologySpec spec;
    spec.n = cfg.n;
    spec.model = SubnetBlocks{cfg.subnets, cfg.p_in, cfg.p_out};
    const auto base = generate_topology(spec, derive_seed(seed, "topology"));

    std::mt19937_64 rng(derive_seed(seed, "anomalies"));
    std::vector<VertexId> order(static_cast<std::size_t>(cfg.n));
    for (VertexId v = 0; v < cfg.n; ++v) order[static_cast<std::size_t>(v)] = v;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<VertexId> injected(order.begin(), order.begin() + cfg.anomalies);
    std::sort(injected.begin(), injected.end());

    std::vector<int> block(static_cast<std::size_t>(cfg.n));
    for (int b = 0; b < cfg.subnets; ++b)
        for (VertexId v : base.hyperedges().at("subnet-" + std::to_string(b))) block[static_cast<std::size_t>(v)] = b;

    std::set<Edge> edges(base.edges().begin(), base.edges().end());
    std::uniform_int_distribution<VertexId> any(0, cfg.n - 1);
    for (VertexId v : injected) {
        int added = 0;
        for (int attempt = 0; added < cfg.extra_edges && attempt < 100 * cfg.extra_edges; ++attempt) {
            const VertexId u = any(rng);
            if (block[static_cast<std::size_t>(u)] == block[static_cast<std::size_t>(v)]) continue;
            added += edges.emplace(u, v).second ? 1 : 0;
        }
    }
    Benchmark out{CloudGraph::create(cfg.n, {edges.begin(), edges.end()}, base.hyperedges(), base.vertex_meta()),
                  Eigen::MatrixXd(), std::vector<int>(static_cast<std::size_t>(cfg.n), 0)};
    for (VertexId v : injected) out.labels[static_cast<std::size_t>(v)] = 1;

    // Injected vertices stay infective for the whole window so that every
    // one of their entries is drawn with the anomalous mix.
    Trajectory traj;
    for (int t = 0; t < cfg.steps; ++t) {
        auto state = EpidemicState::initial(cfg.n);
        state.t = t;
        for (VertexId v : injected) state.compartment[static_cast<std::size_t>(v)] = Compartment::I;
        traj.states.push_back(std::move(state));
    }
    const auto logs = generate_logs(out.graph, traj, scenario_preset(Scenario::Ddos), cfg.logs,
                                    derive_seed(seed, "logs"));
    SkipGramConfig sg = cfg.embed;
    sg.seed = derive_seed(seed, "embed");
    out.features = featurize_all(logs.corpus, train_embeddings(logs.corpus, sg).table);
    return out;
}

double benchmark_auc(const BenchmarkConfig& cfg, std::uint64_t seed) {
    const auto bench = anomaly_benchmark(cfg, seed);
    GcnTrainConfig t = cfg.train;
    t.seed = derive_seed(seed, "train");
    const auto detection = detect_features(bench.graph, bench.features, t);
    return roc_auc(detection.scores, bench.labels);
}

}  // namespace cloudsentry
