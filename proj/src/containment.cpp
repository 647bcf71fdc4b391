#include "cloudsentry/containment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"

namespace cloudsentry {

void ObjectiveConfig::validate(int n) const {
    epidemic.validate();
    if (!(lambda >= 0.0) || !(mu >= 0.0)) throw InvalidArgument("lambda and mu must be >= 0");
    if (budget < 0) throw InvalidArgument("budget must be >= 0");
    if (horizon < 1) throw InvalidArgument("planning horizon must be >= 1");
    if (n_rollouts < 1) throw InvalidArgument("n_rollouts must be >= 1");
    if (!vertex_weight.empty() && vertex_weight.size() != static_cast<std::size_t>(n)) {
        throw InvalidArgument("vertex_weight has " + std::to_string(vertex_weight.size()) + " entries for " +
                              std::to_string(n) + " vertices");
    }
    for (double w : vertex_weight) {
        if (!(w >= 0.0)) throw InvalidArgument("vertex weights must be >= 0");
    }
    for (VertexId v : protected_vertices) {
        if (v < 0 || v >= n) throw InvalidArgument("protected vertex " + std::to_string(v) + " is not in the graph");
    }
}

double ObjectiveConfig::weight(VertexId v) const {
    return vertex_weight.empty() ? 1.0 : vertex_weight[static_cast<std::size_t>(v)];
}

void check_plan(const CloudGraph& g, const Plan& plan, const ObjectiveConfig& config) {
    if (static_cast<int>(plan.size()) > config.budget) {
        throw ConstraintError("plan has " + std::to_string(plan.size()) + " actions, budget is " +
                              std::to_string(config.budget));
    }
    for (const auto& a : plan) {
        if (!(a.cost >= 0.0)) throw ConstraintError(describe(a.action) + ": cost must be >= 0");
        if (a.implement_time < 0) throw ConstraintError(describe(a.action) + ": implement_time must be >= 0");
        if (const auto* q = std::get_if<QuarantineVertex>(&a.action)) {
            if (q->duration < 1) throw ConstraintError(describe(a.action) + ": quarantine duration must be >= 1");
            if (config.protected_vertices.contains(q->v)) {
                throw ConstraintError(describe(a.action) + ": vertex " + std::to_string(q->v) + " is protected");
            }
            if (!g.contains(q->v)) throw InvalidArgument(describe(a.action) + ": unknown vertex " + std::to_string(q->v));
        }
    }
}

EpidemicState apply_plan(const CloudGraph& g, const EpidemicState& state, const Plan& plan) {
    EpidemicState out = state;
    for (const auto& a : plan) out = apply_action(g, std::move(out), a.action);
    return out;
}

PlanEvaluation evaluate_plan(const CloudGraph& g, const EpidemicState& state, const Plan& plan,
                             const ObjectiveConfig& config, std::uint64_t seed) {
    config.validate(g.size());
    check_plan(g, plan, config);
    const EpidemicState after = apply_plan(g, state, plan);
    const int t0 = state.t;
    const int horizon = config.horizon;

    EpidemicParams params = config.epidemic;
    params.horizon = t0 + horizon;

    long long infected_steps = 0;
    int contained = 0;
    for (int r = 0; r < config.n_rollouts; ++r) {
        const auto traj = run_from(g, after, params, EpidemicRng(derive_seed(seed, static_cast<std::uint64_t>(r))));
        // states[k] is the state after step t0+k; once extinct nothing is infected.
        for (std::size_t k = 1; k < traj.states.size(); ++k) infected_steps += traj.states[k].counts().infected();
        contained += traj.events.empty();
    }

    PlanEvaluation eval;
    auto& report = eval.report;
    report.expected_infected_steps = static_cast<double>(infected_steps) / config.n_rollouts;
    report.containment_prob = static_cast<double>(contained) / config.n_rollouts;

    double downtime = 0.0;
    for (VertexId v = 0; v < g.size(); ++v) {
        const auto& until = after.quarantined_until[static_cast<std::size_t>(v)];
        if (!until) continue;
        downtime += config.weight(v) * std::clamp(*until - t0, 0, horizon);
    }
    report.business_impact = config.mu * downtime;

    // Summing sorted costs makes J a function of the action set alone.
    std::vector<double> costs;
    for (const auto& a : plan) {
        costs.push_back(a.cost);
        report.time_to_implement += a.implement_time;
    }
    std::sort(costs.begin(), costs.end());
    double cost = 0.0;
    for (double c : costs) cost += c;

    eval.objective = cost + config.lambda * report.expected_infected_steps + report.business_impact;
    return eval;
}

std::vector<PlannedAction> default_candidates(const CloudGraph& g, const EpidemicState& state,
                                              const ObjectiveConfig& config, const ActionCosts& costs) {
    std::vector<PlannedAction> out;
    for (VertexId v = 0; v < g.size(); ++v) {
        if (config.protected_vertices.contains(v)) continue;
        out.push_back({QuarantineVertex{v, config.horizon}, costs.quarantine_time, costs.quarantine});
    }
    auto infected = [&](VertexId v) {
        const auto c = state.compartment[static_cast<std::size_t>(v)];
        return c == Compartment::D || c == Compartment::I;
    };
    for (const Edge& e : g.edges()) {
        if (!state.edge_live(e)) continue;
        if (infected(e.u) || infected(e.v)) out.push_back({SeverEdge{e}, costs.sever_time, costs.sever});
    }
    std::sort(out.begin(), out.end(), canonical_less);
    return out;
}

bool canonical_less(const PlannedAction& a, const PlannedAction& b) {
    if (a.action != b.action) return a.action < b.action;
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.implement_time < b.implement_time;
}

namespace {

// Evaluates `plan`, or returns nullopt if its actions cannot be applied together.
std::optional<PlanEvaluation> try_evaluate(const CloudGraph& g, const EpidemicState& state, const Plan& plan,
                                           const ObjectiveConfig& config, std::uint64_t seed) {
    try {
        return evaluate_plan(g, state, plan, config, seed);
    } catch (const Conflict&) {
        return std::nullopt;
    } catch (const ConstraintError&) {
        return std::nullopt;
    }
}

}  // namespace

Plan greedy_plan(const CloudGraph& g, const EpidemicState& state, const ObjectiveConfig& config,
                 std::vector<PlannedAction> candidates, std::uint64_t seed) {
    std::sort(candidates.begin(), candidates.end(), canonical_less);
    Plan plan;
    double current = evaluate_plan(g, state, plan, config, seed).objective;
    std::vector<char> used(candidates.size(), 0);
    while (static_cast<int>(plan.size()) < config.budget) {
        std::optional<std::size_t> best;
        double best_j = current;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (used[k]) continue;
            Plan trial = plan;
            trial.push_back(candidates[k]);
            const auto eval = try_evaluate(g, state, trial, config, seed);
            if (eval && eval->objective < best_j) {
                best_j = eval->objective;
                best = k;
            }
        }
        if (!best) break;
        used[*best] = 1;
        plan.push_back(candidates[*best]);
        current = best_j;
    }
    return plan;
}

Plan exhaustive_plan(const CloudGraph& g, const EpidemicState& state, const ObjectiveConfig& config,
                     std::vector<PlannedAction> candidates, std::uint64_t seed) {
    std::sort(candidates.begin(), candidates.end(), canonical_less);
    const long long n = static_cast<long long>(candidates.size());
    const long long max_size = std::min<long long>(config.budget, n);

    long long total = 0, binom = 1;
    for (long long k = 0; k <= max_size; ++k) {
        if (k > 0) binom = binom * (n - k + 1) / k;
        total += binom;
        if (total > kExhaustiveLimit) {
            throw ConstraintError("exhaustive search over " + std::to_string(n) + " candidates with budget " +
                                  std::to_string(config.budget) + " exceeds " + std::to_string(kExhaustiveLimit) +
                                  " plans");
        }
    }

    // Depth-first enumeration visits plans in lexicographic order, so a strict
    // improvement test keeps the lexicographically first optimum.
    Plan best_plan;
    double best_j = evaluate_plan(g, state, best_plan, config, seed).objective;
    Plan current;
    std::function<void(std::size_t)> visit = [&](std::size_t start) {
        for (std::size_t k = start; k < candidates.size(); ++k) {
            current.push_back(candidates[k]);
            const auto eval = try_evaluate(g, state, current, config, seed);
            if (eval && eval->objective < best_j) {
                best_j = eval->objective;
                best_plan = current;
            }
            if (static_cast<long long>(current.size()) < max_size) visit(k + 1);
            current.pop_back();
        }
    };
    if (max_size > 0) visit(0);
    return best_plan;
}

nlohmann::json intervention_to_json(const Intervention& action) {
    return std::visit(
        [](const auto& a) -> nlohmann::json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, QuarantineVertex>) {
                return {{"kind", "quarantine"}, {"vertex", a.v}, {"duration", a.duration}};
            } else if constexpr (std::is_same_v<T, SeverEdge>) {
                return {{"kind", "sever"}, {"edge", {a.edge.u, a.edge.v}}};
            } else if constexpr (std::is_same_v<T, RestoreVertex>) {
                return {{"kind", "restore"}, {"vertex", a.v}};
            } else {
                return {{"kind", "restore"}, {"edge", {a.edge.u, a.edge.v}}};
            }
        },
        action);
}

namespace {

int int_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw FormatError(std::string("action field '") + key + "' must be an integer");
    }
    return j.at(key).get<int>();
}

Edge edge_field(const nlohmann::json& j) {
    const auto& e = j.at("edge");
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
        throw FormatError("action field 'edge' must be a pair of vertex ids");
    }
    if (e[0].get<int>() == e[1].get<int>()) throw FormatError("action edge is a self-loop");
    return Edge(e[0].get<int>(), e[1].get<int>());
}

}  // namespace

Intervention intervention_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw FormatError("action must be an object with a 'kind'");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "quarantine") return QuarantineVertex{int_field(j, "vertex"), int_field(j, "duration")};
    if (kind == "sever") {
        if (!j.contains("edge")) throw FormatError("sever action needs an 'edge'");
        return SeverEdge{edge_field(j)};
    }
    if (kind == "restore") {
        if (j.contains("edge")) return RestoreEdge{edge_field(j)};
        return RestoreVertex{int_field(j, "vertex")};
    }
    throw FormatError("unknown action kind '" + kind + "'");
}

nlohmann::json action_to_json(const PlannedAction& action) {
    auto j = intervention_to_json(action.action);
    j["cost"] = action.cost;
    j["implement_time"] = action.implement_time;
    return j;
}

PlannedAction action_from_json(const nlohmann::json& j) {
    PlannedAction a{intervention_from_json(j), 0, 0.0};
    if (j.contains("cost")) {
        if (!j.at("cost").is_number()) throw FormatError("action field 'cost' must be a number");
        a.cost = j.at("cost").get<double>();
    }
    if (j.contains("implement_time")) a.implement_time = int_field(j, "implement_time");
    return a;
}

std::string plan_file(const Plan& plan, const PlanEvaluation& evaluation) {
    nlohmann::json j;
    j["actions"] = nlohmann::json::array();
    for (const auto& a : plan) j["actions"].push_back(action_to_json(a));
    j["objective"] = evaluation.objective;
    const auto& r = evaluation.report;
    j["report"] = {{"time_to_implement", r.time_to_implement},
                   {"business_impact", r.business_impact},
                   {"containment_prob", r.containment_prob},
                   {"expected_infected_steps", r.expected_infected_steps}};
    return j.dump(1) + "\n";
}

std::string report_csv(const PlanEvaluation& evaluation) {
    const auto& r = evaluation.report;
    nlohmann::json row = {evaluation.objective, r.time_to_implement, r.business_impact, r.containment_prob,
                          r.expected_infected_steps};
    std::string out = "objective,time_to_implement,business_impact,containment_prob,expected_infected_steps\n";
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + row[k].dump();
    return out + "\n";
}

}  // namespace cloudsentry
