#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cloudsentry/containment.hpp"
#include "cloudsentry/epidemic.hpp"
#include "cloudsentry/federated.hpp"
#include "cloudsentry/forecast.hpp"
#include "cloudsentry/gnn.hpp"
#include "cloudsentry/logfeat.hpp"
#include "cloudsentry/logsynth.hpp"
#include "cloudsentry/scoring.hpp"
#include "cloudsentry/topology.hpp"

namespace cloudsentry {

/// Per-module seeds derived from one global seed by label, so any stage can
/// be rerun on its own.
struct ModuleSeeds {
    std::uint64_t topology = 0;
    std::uint64_t epidemic = 0;
    std::uint64_t logs = 0;
    std::uint64_t embed = 0;
    std::uint64_t train = 0;
    std::uint64_t scoring = 0;
    std::uint64_t forecast = 0;
    std::uint64_t plan = 0;
    std::uint64_t federate = 0;
    std::uint64_t audit = 0;

    static ModuleSeeds derive(std::uint64_t global);
};

struct ForecastSettings {
    int order = 2;
    double ridge = 1e-3;
    int steps = 3;  // k
};

enum class PlanMethod { Greedy, Exhaustive };

struct PlanSettings {
    ObjectiveConfig objective;
    ActionCosts costs;
    PlanMethod method = PlanMethod::Greedy;
    int at_step = 2;  // plan from the simulated state at this step
};

struct FederateSettings {
    FederationConfig federation;
    int clients = 3;
    int client_vertices = 30;
};

struct AuditSettings {
    DpAuditConfig audit;             // audit.epsilon is replaced, see below
    std::optional<double> epsilon;   // unset: the accountant's epsilon for one round
    double noise = 2.0;
    double clip = 1.0;
};

struct ServeSettings {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string snapshot_dir;  // state written here after every step when set
    int event_queue = 1024;    // per subscriber; overflow disconnects
};

struct ExperimentConfig {
    std::uint64_t seed = 7;
    TopologySpec topology;
    std::string graph_file;  // loaded instead of generated when set
    std::string preset = "ddos";
    EpidemicParams epidemic;  // preset rates already applied
    std::vector<VertexId> initial_infected{0};
    LogGenConfig logs;
    SkipGramConfig embed;
    int feature_window = kDefaultFeatureWindow;
    GcnTrainConfig train;
    ScoringConfig scoring;
    ForecastSettings forecast;
    PlanSettings plan;
    FederateSettings federate;
    AuditSettings audit;
    ServeSettings serve;

    ExperimentConfig();
    void validate() const;
    ModuleSeeds seeds() const { return ModuleSeeds::derive(seed); }
};

CloudGraph build_graph(const ExperimentConfig& cfg);
Trajectory simulate(const ExperimentConfig& cfg, const CloudGraph& g);
GeneratedLogs synthesize_logs(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj);
EmbeddingTable embed_logs(const ExperimentConfig& cfg, const LogCorpus& corpus);

/// Entries with step <= t.
LogCorpus corpus_until(const LogCorpus& corpus, int t);

struct Detection {
    Eigen::MatrixXd features;
    TrainResult training;
    Eigen::VectorXd scores;
    AnomalyRanking ranking;
};

/// Trains the autoencoder on the features of `corpus` and ranks vertices.
Detection detect(const ExperimentConfig& cfg, const CloudGraph& g, const LogCorpus& corpus,
                 const EmbeddingTable& table);

/// Z_t for t = 0..T, with logs up to step t featurized by the frozen table
/// and encoded by the frozen parameters.
EmbeddingTrajectory embedding_trajectory(const CloudGraph& g, const LogCorpus& corpus, const EmbeddingTable& table,
                                         const GcnParams& params, int last_step,
                                         int window = kDefaultFeatureWindow);

/// Infected-indicator head fitted on every (Z_t, state_t) pair.
SupervisedHead fit_infection_head(const EmbeddingTrajectory& z, const Trajectory& traj);

struct ForecastRun {
    ForecastParams params;
    SupervisedHead head;
    std::vector<Eigen::VectorXd> colors;  // steps T+1..T+k
    int first_step = 0;
};

ForecastRun forecast_run(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj,
                         const LogCorpus& corpus, const EmbeddingTable& table, const GcnParams& params);

struct PlanRun {
    EpidemicState start;
    Plan plan;
    PlanEvaluation evaluation;
};

PlanRun plan_run(const ExperimentConfig& cfg, const CloudGraph& g, const Trajectory& traj);

/// Clients hold their own generated graph, trajectory and logs; features use
/// the shared token embedding table.
std::vector<CloudClient> federated_clients(const ExperimentConfig& cfg, const EmbeddingTable& table);
FederationResult federate_run(const ExperimentConfig& cfg, const EmbeddingTable& table);

struct AuditRun {
    double epsilon = 0.0;
    DpAuditResult result;
};

AuditRun audit_run(const ExperimentConfig& cfg, const EmbeddingTable& table);

/// Constructed detection benchmark: a subnet-block graph where a few vertices
/// emit anomalous templates and gain extra cross-subnet edges.
struct BenchmarkConfig {
    int n = 200;
    int subnets = 8;
    double p_in = 0.15;
    double p_out = 0.002;
    int anomalies = 10;
    int extra_edges = 5;
    int steps = 10;
    LogGenConfig logs{4, 1.0};
    SkipGramConfig embed;
    GcnTrainConfig train;

    BenchmarkConfig();
};

struct Benchmark {
    CloudGraph graph;
    Eigen::MatrixXd features;
    std::vector<int> labels;  // 1 for injected vertices
};

Benchmark anomaly_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed);
double benchmark_auc(const BenchmarkConfig& cfg, std::uint64_t seed);

}  // namespace cloudsentry
