#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cloudsentry/topology.hpp"

namespace cloudsentry {

enum class Compartment : std::uint8_t { S, D, I, R };

char compartment_code(Compartment c) noexcept;

struct EpidemicParams {
    double beta = 0.1;      // per live edge, per step transmission probability
    int delitescence = 1;   // steps a newly exposed vertex stays D
    double gamma = 0.05;    // per step recovery probability of an I vertex
    int horizon = 50;

    void validate() const;
};

struct CompartmentCounts {
    int s = 0, d = 0, i = 0, r = 0;
    int infected() const noexcept { return d + i; }
    bool operator==(const CompartmentCounts&) const = default;
};

struct EpidemicState {
    std::vector<Compartment> compartment;
    std::vector<int> d_timer;           // in [1, delitescence] iff D, else 0
    std::vector<int> infectious_age;    // steps spent in I so far; keys the draws
    std::vector<std::optional<int>> quarantined_until;
    std::set<Edge> severed;
    int t = 0;

    static EpidemicState initial(int n);

    int size() const noexcept { return static_cast<int>(compartment.size()); }
    bool quarantined(VertexId v) const;
    bool edge_live(const Edge& e) const;
    bool active() const;  // any D or I left
    CompartmentCounts counts() const;

    bool operator==(const EpidemicState&) const = default;
};

struct TransmissionEvent {
    VertexId src = 0;
    VertexId dst = 0;
    int t = 0;  // step index at which the transmission was drawn

    bool operator==(const TransmissionEvent&) const = default;
};

/// Counter-based randomness for the step rule. Every draw is a pure function
/// of (seed, kind, vertices, infectious age), so each (source, target) pair
/// gets an independent Bernoulli per step the source is infective, and two
/// runs that differ only by interventions share all their draws.
class EpidemicRng {
public:
    explicit EpidemicRng(std::uint64_t seed) : seed_(seed) {}

    double transmission(VertexId src, VertexId dst, int age) const noexcept;
    double recovery(VertexId v, int age) const noexcept;
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

EpidemicState seed_infection(EpidemicState state, const std::vector<VertexId>& vertices);

struct StepResult {
    EpidemicState state;
    std::vector<TransmissionEvent> events;
};

StepResult step(const CloudGraph& g, const EpidemicState& state, const EpidemicParams& params,
                const EpidemicRng& rng);

struct Trajectory {
    std::vector<EpidemicState> states;  // states[0] is the seeded state
    std::vector<TransmissionEvent> events;

    /// Events drawn during the step that produced states[k] (k >= 1).
    std::vector<TransmissionEvent> events_at(int t) const;
};

Trajectory run(const CloudGraph& g, const EpidemicParams& params, const std::vector<VertexId>& seeds,
               std::uint64_t seed);

/// Continues from an arbitrary state until the horizon or extinction.
Trajectory run_from(const CloudGraph& g, EpidemicState state, const EpidemicParams& params,
                    const EpidemicRng& rng);

// Interventions.
struct QuarantineVertex {
    VertexId v = 0;
    int duration = 1;
    auto operator<=>(const QuarantineVertex&) const = default;
};
struct SeverEdge {
    Edge edge;
    auto operator<=>(const SeverEdge&) const = default;
};
struct RestoreVertex {
    VertexId v = 0;
    auto operator<=>(const RestoreVertex&) const = default;
};
struct RestoreEdge {
    Edge edge;
    auto operator<=>(const RestoreEdge&) const = default;
};

using Intervention = std::variant<QuarantineVertex, SeverEdge, RestoreVertex, RestoreEdge>;

std::string describe(const Intervention& action);

EpidemicState apply_action(const CloudGraph& g, EpidemicState state, const Intervention& action);

// Attack taxonomy presets.
enum class Scenario : std::uint8_t { Ddos, Hypercall, HypervisorDos, Mitm, Hyperjacking, CoLocation, LiveMigration };

struct ScenarioPreset {
    Scenario kind = Scenario::Ddos;
    std::string name;
    std::optional<double> beta;
    std::optional<int> delitescence;
    std::optional<double> gamma;

    EpidemicParams apply(EpidemicParams base) const;
};

const std::array<ScenarioPreset, 7>& scenario_presets();
const ScenarioPreset& scenario_preset(std::string_view name);
const ScenarioPreset& scenario_preset(Scenario kind);

// Export: JSON lines {t, counts, events} and CSV t,nS,nD,nI,nR.
std::string trajectory_jsonl(const Trajectory& traj);
std::string trajectory_csv(const Trajectory& traj);

}  // namespace cloudsentry
