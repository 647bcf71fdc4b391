#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cloudsentry/epidemic.hpp"

namespace cloudsentry {

struct PlannedAction {
    Intervention action;
    int implement_time = 0;  // steps; reported, actions take effect at plan start
    double cost = 0.0;

    bool operator==(const PlannedAction&) const = default;
};

using Plan = std::vector<PlannedAction>;

struct ObjectiveConfig {
    EpidemicParams epidemic;            // horizon is ignored; `horizon` below applies
    double lambda = 1.0;                // per infected vertex-step
    double mu = 0.0;                    // per weighted quarantined vertex-step
    std::vector<double> vertex_weight;  // empty means 1 for every vertex
    std::set<VertexId> protected_vertices;
    int budget = 2;
    int horizon = 10;
    int n_rollouts = 50;

    void validate(int n) const;
    double weight(VertexId v) const;
};

struct EffectivenessReport {
    int time_to_implement = 0;
    double business_impact = 0.0;
    double containment_prob = 0.0;  // rollouts with no transmission after the plan
    double expected_infected_steps = 0.0;

    bool operator==(const EffectivenessReport&) const = default;
};

struct PlanEvaluation {
    double objective = 0.0;
    EffectivenessReport report;
};

/// Throws ConstraintError naming the offending action.
void check_plan(const CloudGraph& g, const Plan& plan, const ObjectiveConfig& config);

/// The plan applied to `state`, in order.
EpidemicState apply_plan(const CloudGraph& g, const EpidemicState& state, const Plan& plan);

/// J = sum of costs + lambda * E[infected vertex-steps over the horizon]
///     + mu * sum_v w_v * (quarantined steps of v).
/// Rollout r uses the same draws for every plan (common random numbers).
PlanEvaluation evaluate_plan(const CloudGraph& g, const EpidemicState& state, const Plan& plan,
                             const ObjectiveConfig& config, std::uint64_t seed);

struct ActionCosts {
    double quarantine = 1.0;
    double sever = 0.5;
    int quarantine_time = 1;
    int sever_time = 1;
};

/// Quarantine of each unprotected vertex for the full horizon, and severing
/// of each live edge touching a D or I vertex, in canonical order.
std::vector<PlannedAction> default_candidates(const CloudGraph& g, const EpidemicState& state,
                                              const ObjectiveConfig& config, const ActionCosts& costs);

/// Canonical order: action kind, then target.
bool canonical_less(const PlannedAction& a, const PlannedAction& b);

Plan greedy_plan(const CloudGraph& g, const EpidemicState& state, const ObjectiveConfig& config,
                 std::vector<PlannedAction> candidates, std::uint64_t seed);

constexpr long long kExhaustiveLimit = 100000;

Plan exhaustive_plan(const CloudGraph& g, const EpidemicState& state, const ObjectiveConfig& config,
                     std::vector<PlannedAction> candidates, std::uint64_t seed);

nlohmann::json action_to_json(const PlannedAction& action);
PlannedAction action_from_json(const nlohmann::json& j);
nlohmann::json intervention_to_json(const Intervention& action);
Intervention intervention_from_json(const nlohmann::json& j);

/// Plan file: actions in application order plus the evaluation.
std::string plan_file(const Plan& plan, const PlanEvaluation& evaluation);
/// objective,time_to_implement,business_impact,containment_prob,expected_infected_steps
std::string report_csv(const PlanEvaluation& evaluation);

}  // namespace cloudsentry
