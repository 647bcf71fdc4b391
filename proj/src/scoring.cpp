#include "cloudsentry/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void require_unit(double x, const char* what) {
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0,1]");
}

}  // namespace

void ScoreWeights::validate() const {
    if (exploitability < 0 || impact < 0 || anomaly < 0) throw InvalidArgument("score weights must be nonnegative");
    if (std::abs(exploitability + impact + anomaly - 1.0) > 1e-9) throw InvalidArgument("score weights must sum to 1");
}

double exploitability(const CloudGraph& g, VertexId v, double anomaly_norm) {
    if (!g.contains(v)) throw InvalidArgument("unknown vertex " + std::to_string(v));
    require_unit(anomaly_norm, "anomaly_norm");
    const int max_deg = g.max_degree();
    const double centrality = max_deg == 0 ? 0.0 : static_cast<double>(g.degree(v)) / max_deg;
    return clamp01(0.5 * centrality + 0.5 * anomaly_norm);
}

double impact(const CloudGraph& g, const EpidemicState& base, VertexId v, const EpidemicParams& params,
              int n_rollouts, std::uint64_t seed) {
    if (n_rollouts < 1) throw InvalidArgument("n_rollouts must be >= 1");
    params.validate();
    if (base.size() != g.size()) throw InvalidArgument("state size does not match graph");
    // Only the containment status of `base` matters: everyone starts susceptible.
    auto clean = EpidemicState::initial(g.size());
    clean.t = base.t;
    clean.severed = base.severed;
    clean.quarantined_until = base.quarantined_until;
    const auto seeded = seed_infection(clean, {v});
    EpidemicParams rollout = params;
    rollout.horizon = base.t + params.horizon;

    long long total = 0;
    for (int r = 0; r < n_rollouts; ++r) {
        const auto traj = run_from(g, seeded, rollout, EpidemicRng(derive_seed(seed, static_cast<std::uint64_t>(r))));
        const auto counts = traj.states.back().counts();
        total += counts.d + counts.i + counts.r;
    }
    return static_cast<double>(total) / (static_cast<double>(n_rollouts) * g.size());
}

double impact(const CloudGraph& g, VertexId v, const EpidemicParams& params, int n_rollouts, std::uint64_t seed) {
    return impact(g, EpidemicState::initial(g.size()), v, params, n_rollouts, seed);
}

double risk(double exploitability, double impact, double anomaly_norm, const ScoreWeights& weights) {
    weights.validate();
    return clamp01(weights.exploitability * exploitability + weights.impact * impact + weights.anomaly * anomaly_norm);
}

std::vector<SecurityScores> vertex_scores(const CloudGraph& g, const EpidemicState& base,
                                          const std::vector<double>& anomaly_norm, const ScoringConfig& config,
                                          std::uint64_t seed) {
    if (anomaly_norm.size() != static_cast<std::size_t>(g.size())) {
        throw InvalidArgument("anomaly vector has " + std::to_string(anomaly_norm.size()) + " entries for " +
                              std::to_string(g.size()) + " vertices");
    }
    config.weights.validate();
    std::vector<SecurityScores> out(anomaly_norm.size());
    for (VertexId v = 0; v < g.size(); ++v) {
        auto& s = out[static_cast<std::size_t>(v)];
        const double a = anomaly_norm[static_cast<std::size_t>(v)];
        s.exploitability = exploitability(g, v, a);
        s.impact = impact(g, base, v, config.epidemic, config.n_rollouts, derive_seed(seed, static_cast<std::uint64_t>(v)));
        s.risk = risk(s.exploitability, s.impact, a, config.weights);
    }
    return out;
}

SecurityScores cloud_scores(std::span<const SecurityScores> scores) {
    if (scores.empty()) throw InvalidArgument("cloud_scores needs at least one vertex");
    SecurityScores sum;
    for (const auto& s : scores) {
        sum.risk += s.risk;
        sum.exploitability += s.exploitability;
        sum.impact += s.impact;
    }
    const double n = static_cast<double>(scores.size());
    return {sum.risk / n, sum.exploitability / n, sum.impact / n};
}

double hyperedge_score(std::span<const VertexId> members, std::span<const double> vertex_values, Pooling mode) {
    if (members.empty()) throw InvalidArgument("hyperedge has no members");
    double acc = mode == Pooling::Max ? -std::numeric_limits<double>::infinity() : 0.0;
    for (VertexId v : members) {
        if (v < 0 || static_cast<std::size_t>(v) >= vertex_values.size()) {
            throw InvalidArgument("hyperedge member " + std::to_string(v) + " has no score");
        }
        const double x = vertex_values[static_cast<std::size_t>(v)];
        acc = mode == Pooling::Max ? std::max(acc, x) : acc + x;
    }
    return mode == Pooling::Max ? acc : acc / static_cast<double>(members.size());
}

double hyperedge_score(const CloudGraph& g, const std::string& hyperedge, std::span<const double> vertex_values,
                       Pooling mode) {
    const auto it = g.hyperedges().find(hyperedge);
    if (it == g.hyperedges().end()) throw NotFound("unknown hyperedge '" + hyperedge + "'");
    return hyperedge_score(it->second, vertex_values, mode);
}

std::string scores_csv(const std::vector<SecurityScores>& scores, const std::vector<double>& anomaly_norm) {
    if (scores.size() != anomaly_norm.size()) throw InvalidArgument("scores and anomaly vectors differ in length");
    std::string out = "vertex_id,risk,exploitability,impact,anomaly\n";
    for (std::size_t v = 0; v < scores.size(); ++v) {
        out += std::to_string(v) + "," + format_double(scores[v].risk) + "," + format_double(scores[v].exploitability) +
               "," + format_double(scores[v].impact) + "," + format_double(anomaly_norm[v]) + "\n";
    }
    return out;
}

}  // namespace cloudsentry
