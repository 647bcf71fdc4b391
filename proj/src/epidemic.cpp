#include "cloudsentry/epidemic.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"

namespace cloudsentry {

char compartment_code(Compartment c) noexcept {
    switch (c) {
        case Compartment::S: return 'S';
        case Compartment::D: return 'D';
        case Compartment::I: return 'I';
        case Compartment::R: return 'R';
    }
    return '?';
}

void EpidemicParams::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("beta must be in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must be in [0,1]");
    if (delitescence < 0) throw InvalidArgument("delitescence must be >= 0");
    if (horizon < 0) throw InvalidArgument("horizon must be >= 0");
}

EpidemicState EpidemicState::initial(int n) {
    EpidemicState s;
    const auto size = static_cast<std::size_t>(n);
    s.compartment.assign(size, Compartment::S);
    s.d_timer.assign(size, 0);
    s.infectious_age.assign(size, 0);
    s.quarantined_until.assign(size, std::nullopt);
    return s;
}

bool EpidemicState::quarantined(VertexId v) const {
    const auto& until = quarantined_until.at(static_cast<std::size_t>(v));
    return until.has_value() && t < *until;
}

bool EpidemicState::edge_live(const Edge& e) const {
    return !severed.contains(e) && !quarantined(e.u) && !quarantined(e.v);
}

bool EpidemicState::active() const {
    return std::any_of(compartment.begin(), compartment.end(),
                       [](Compartment c) { return c == Compartment::D || c == Compartment::I; });
}

CompartmentCounts EpidemicState::counts() const {
    CompartmentCounts c;
    for (Compartment x : compartment) {
        switch (x) {
            case Compartment::S: ++c.s; break;
            case Compartment::D: ++c.d; break;
            case Compartment::I: ++c.i; break;
            case Compartment::R: ++c.r; break;
        }
    }
    return c;
}

namespace {
constexpr std::uint64_t kTransmitTag = 0x7472616e736d6974ULL;
constexpr std::uint64_t kRecoverTag = 0x7265636f76657279ULL;
}  // namespace

double EpidemicRng::transmission(VertexId src, VertexId dst, int age) const noexcept {
    std::uint64_t h = mix64(seed_ ^ kTransmitTag);
    h = mix64(h ^ static_cast<std::uint64_t>(src));
    h = mix64(h ^ static_cast<std::uint64_t>(dst));
    h = mix64(h ^ static_cast<std::uint64_t>(age));
    return unit_interval(h);
}

double EpidemicRng::recovery(VertexId v, int age) const noexcept {
    std::uint64_t h = mix64(seed_ ^ kRecoverTag);
    h = mix64(h ^ static_cast<std::uint64_t>(v));
    h = mix64(h ^ static_cast<std::uint64_t>(age));
    return unit_interval(h);
}

EpidemicState seed_infection(EpidemicState state, const std::vector<VertexId>& vertices) {
    for (VertexId v : vertices) {
        if (v < 0 || v >= state.size()) {
            throw InvalidArgument("cannot seed vertex " + std::to_string(v) + ": not in graph");
        }
        const Compartment c = state.compartment[static_cast<std::size_t>(v)];
        if (c != Compartment::S) {
            throw InvalidArgument("cannot seed vertex " + std::to_string(v) + ": it is in compartment " +
                                  std::string(1, compartment_code(c)) + ", not S");
        }
    }
    for (VertexId v : vertices) {
        state.compartment[static_cast<std::size_t>(v)] = Compartment::I;
        state.infectious_age[static_cast<std::size_t>(v)] = 0;
    }
    return state;
}

StepResult step(const CloudGraph& g, const EpidemicState& state, const EpidemicParams& params,
                const EpidemicRng& rng) {
    if (state.t >= params.horizon) {
        throw Conflict("epidemic horizon " + std::to_string(params.horizon) + " reached at t=" +
                       std::to_string(state.t));
    }
    if (state.size() != g.size()) throw InvalidArgument("state size does not match graph");

    const auto n = static_cast<std::size_t>(g.size());
    StepResult out{state, {}};
    EpidemicState& next = out.state;
    std::vector<char> exposed(n, 0);

    // (1) transmissions, judged entirely on the step-start state.
    for (VertexId u = 0; u < g.size(); ++u) {
        if (state.compartment[static_cast<std::size_t>(u)] != Compartment::I || state.quarantined(u)) continue;
        const int age = state.infectious_age[static_cast<std::size_t>(u)];
        for (VertexId v : g.neighbors(u)) {
            if (state.compartment[static_cast<std::size_t>(v)] != Compartment::S) continue;
            if (!state.edge_live(Edge(u, v))) continue;
            if (rng.transmission(u, v, age) < params.beta) {
                out.events.push_back({u, v, state.t});
                exposed[static_cast<std::size_t>(v)] = 1;
            }
        }
    }

    for (std::size_t v = 0; v < n; ++v) {
        switch (state.compartment[v]) {
            case Compartment::D:  // (2) latency countdown
                if (--next.d_timer[v] == 0) {
                    next.compartment[v] = Compartment::I;
                    next.infectious_age[v] = 0;
                }
                break;
            case Compartment::I:  // (3) recovery, immune afterwards
                if (rng.recovery(static_cast<VertexId>(v), state.infectious_age[v]) < params.gamma) {
                    next.compartment[v] = Compartment::R;
                } else {
                    ++next.infectious_age[v];
                }
                break;
            case Compartment::S:
                if (exposed[v]) {
                    if (params.delitescence == 0) {
                        next.compartment[v] = Compartment::I;
                        next.infectious_age[v] = 0;
                    } else {
                        next.compartment[v] = Compartment::D;
                        next.d_timer[v] = params.delitescence;
                    }
                }
                break;
            case Compartment::R:
                break;
        }
    }
    ++next.t;
    return out;
}

std::vector<TransmissionEvent> Trajectory::events_at(int t) const {
    std::vector<TransmissionEvent> out;
    for (const auto& e : events)
        if (e.t + 1 == t) out.push_back(e);
    return out;
}

Trajectory run_from(const CloudGraph& g, EpidemicState state, const EpidemicParams& params,
                    const EpidemicRng& rng) {
    params.validate();
    Trajectory traj;
    traj.states.push_back(state);
    while (state.t < params.horizon && state.active()) {
        auto result = step(g, state, params, rng);
        state = std::move(result.state);
        traj.events.insert(traj.events.end(), result.events.begin(), result.events.end());
        traj.states.push_back(state);
    }
    return traj;
}

Trajectory run(const CloudGraph& g, const EpidemicParams& params, const std::vector<VertexId>& seeds,
               std::uint64_t seed) {
    params.validate();
    auto state = seed_infection(EpidemicState::initial(g.size()), seeds);
    return run_from(g, std::move(state), params, EpidemicRng(seed));
}

std::string describe(const Intervention& action) {
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, QuarantineVertex>) {
                return "quarantine(" + std::to_string(a.v) + ", " + std::to_string(a.duration) + ")";
            } else if constexpr (std::is_same_v<T, SeverEdge>) {
                return "sever(" + std::to_string(a.edge.u) + "-" + std::to_string(a.edge.v) + ")";
            } else if constexpr (std::is_same_v<T, RestoreVertex>) {
                return "restore(" + std::to_string(a.v) + ")";
            } else {
                return "restore(" + std::to_string(a.edge.u) + "-" + std::to_string(a.edge.v) + ")";
            }
        },
        action);
}

EpidemicState apply_action(const CloudGraph& g, EpidemicState state, const Intervention& action) {
    auto require_vertex = [&](VertexId v) {
        if (!g.contains(v)) throw InvalidArgument("unknown vertex " + std::to_string(v));
    };
    auto require_edge = [&](const Edge& e) {
        if (!g.has_edge(e.u, e.v)) {
            throw InvalidArgument("unknown edge " + std::to_string(e.u) + "-" + std::to_string(e.v));
        }
    };
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, QuarantineVertex>) {
                require_vertex(a.v);
                if (a.duration < 0) throw InvalidArgument("quarantine duration must be >= 0");
                if (a.duration == 0) return;
                auto& until = state.quarantined_until[static_cast<std::size_t>(a.v)];
                const int end = state.t + a.duration;
                until = until && state.t < *until ? std::max(*until, end) : end;
            } else if constexpr (std::is_same_v<T, SeverEdge>) {
                require_edge(a.edge);
                if (!state.severed.insert(a.edge).second) {
                    throw Conflict("edge " + std::to_string(a.edge.u) + "-" + std::to_string(a.edge.v) +
                                   " is already severed");
                }
            } else if constexpr (std::is_same_v<T, RestoreVertex>) {
                require_vertex(a.v);
                if (!state.quarantined(a.v)) {
                    throw Conflict("vertex " + std::to_string(a.v) + " is not quarantined; nothing to restore");
                }
                state.quarantined_until[static_cast<std::size_t>(a.v)].reset();
            } else {
                require_edge(a.edge);
                if (state.severed.erase(a.edge) == 0) {
                    throw Conflict("edge " + std::to_string(a.edge.u) + "-" + std::to_string(a.edge.v) +
                                   " is not severed; nothing to restore");
                }
            }
        },
        action);
    return state;
}

EpidemicParams ScenarioPreset::apply(EpidemicParams base) const {
    if (beta) base.beta = *beta;
    if (delitescence) base.delitescence = *delitescence;
    if (gamma) base.gamma = *gamma;
    return base;
}

const std::array<ScenarioPreset, 7>& scenario_presets() {
    // Overrides: botnet-style attacks spread fast with short latency,
    // hypervisor-level attacks lie dormant longer and persist.
    static const std::array<ScenarioPreset, 7> presets{{
        {Scenario::Ddos, "ddos", 0.30, 1, 0.05},
        {Scenario::Hypercall, "hypercall", 0.15, 2, 0.04},
        {Scenario::HypervisorDos, "hypervisor-dos", 0.20, 0, 0.10},
        {Scenario::Mitm, "mitm", 0.10, 3, 0.05},
        {Scenario::Hyperjacking, "hyperjacking", 0.25, 4, 0.02},
        {Scenario::CoLocation, "co-location", 0.12, 2, 0.05},
        {Scenario::LiveMigration, "live-migration", 0.18, 1, 0.06},
    }};
    return presets;
}

const ScenarioPreset& scenario_preset(std::string_view name) {
    for (const auto& p : scenario_presets())
        if (p.name == name) return p;
    throw InvalidArgument("unknown scenario preset '" + std::string(name) + "'");
}

const ScenarioPreset& scenario_preset(Scenario kind) {
    return scenario_presets()[static_cast<std::size_t>(kind)];
}

std::string trajectory_jsonl(const Trajectory& traj) {
    std::ostringstream out;
    for (const auto& s : traj.states) {
        const auto c = s.counts();
        nlohmann::json rec;
        rec["t"] = s.t;
        rec["counts"] = {{"S", c.s}, {"D", c.d}, {"I", c.i}, {"R", c.r}};
        auto events = nlohmann::json::array();
        for (const auto& e : traj.events_at(s.t)) events.push_back({{"src", e.src}, {"dst", e.dst}, {"t", e.t}});
        rec["events"] = std::move(events);
        out << rec.dump() << '\n';
    }
    return out.str();
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "t,nS,nD,nI,nR\n";
    for (const auto& s : traj.states) {
        const auto c = s.counts();
        out << s.t << ',' << c.s << ',' << c.d << ',' << c.i << ',' << c.r << '\n';
    }
    return out.str();
}

}  // namespace cloudsentry
