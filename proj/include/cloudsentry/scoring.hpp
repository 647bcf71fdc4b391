#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cloudsentry/epidemic.hpp"
#include "cloudsentry/topology.hpp"

namespace cloudsentry {

struct SecurityScores {
    double risk = 0.0;
    double exploitability = 0.0;
    double impact = 0.0;

    bool operator==(const SecurityScores&) const = default;
};

/// Nonnegative blend weights for risk; must sum to 1.
struct ScoreWeights {
    double exploitability = 1.0 / 3.0;
    double impact = 1.0 / 3.0;
    double anomaly = 1.0 / 3.0;

    void validate() const;
};

/// 0.5 * deg(v) / max_deg + 0.5 * anomaly_norm, clamped to [0,1].
double exploitability(const CloudGraph& g, VertexId v, double anomaly_norm);

/// Expected fraction of the graph ever infected when only v is seeded,
/// estimated from n_rollouts runs over `horizon` steps. Only the severed
/// edges and quarantines of `base` are used; its compartments are ignored.
double impact(const CloudGraph& g, const EpidemicState& base, VertexId v, const EpidemicParams& params,
              int n_rollouts, std::uint64_t seed);
double impact(const CloudGraph& g, VertexId v, const EpidemicParams& params, int n_rollouts, std::uint64_t seed);

double risk(double exploitability, double impact, double anomaly_norm, const ScoreWeights& weights);

struct ScoringConfig {
    EpidemicParams epidemic;
    ScoreWeights weights;
    int n_rollouts = 50;
};

/// Scores for every vertex; rollout seeds derive from `seed` and the vertex id.
std::vector<SecurityScores> vertex_scores(const CloudGraph& g, const EpidemicState& base,
                                          const std::vector<double>& anomaly_norm, const ScoringConfig& config,
                                          std::uint64_t seed);

/// Component-wise mean.
SecurityScores cloud_scores(std::span<const SecurityScores> scores);

enum class Pooling { Mean, Max };

double hyperedge_score(std::span<const VertexId> members, std::span<const double> vertex_values, Pooling mode);
double hyperedge_score(const CloudGraph& g, const std::string& hyperedge, std::span<const double> vertex_values,
                       Pooling mode);

/// vertex_id,risk,exploitability,impact,anomaly
std::string scores_csv(const std::vector<SecurityScores>& scores, const std::vector<double>& anomaly_norm);

}  // namespace cloudsentry
