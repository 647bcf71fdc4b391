#include "cloudsentry/service.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <thread>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

using nlohmann::json;

namespace {

constexpr std::size_t kReplayEvents = 4096;

json with_schema(json body) {
    body["schema_version"] = kSchemaVersion;
    return body;
}

Response ok(json body, int status = 200) { return {status, with_schema(std::move(body))}; }

Response failure(int status, const std::string& kind, const std::string& message) {
    return {status, with_schema({{"error", kind}, {"message", message}})};
}

json parse_body(const std::string& text) {
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    json body;
    try {
        body = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("request body is not JSON: ") + e.what());
    }
    if (!body.is_object()) throw FormatError("request body must be a JSON object");
    return body;
}

void only_keys(const json& body, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : body.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
            throw FormatError("unknown field '" + key + "' in " + where);
        }
    }
}

template <class T>
void take(const json& body, const char* key, T& field) {
    if (body.contains(key)) field = body.at(key).get<T>();
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::stringstream in(path);
    for (std::string part; std::getline(in, part, '/');)
        if (!part.empty()) out.push_back(part);
    return out;
}

std::string compartment_string(const EpidemicState& s) {
    std::string out;
    out.reserve(s.compartment.size());
    for (auto c : s.compartment) out.push_back(compartment_code(c));
    return out;
}

json counts_json(const CompartmentCounts& c) { return {{"S", c.s}, {"D", c.d}, {"I", c.i}, {"R", c.r}}; }

json containment_json(const EpidemicState& s) {
    json quarantined = json::array();
    for (std::size_t v = 0; v < s.quarantined_until.size(); ++v) {
        if (s.quarantined(static_cast<VertexId>(v))) {
            quarantined.push_back({{"vertex", v}, {"until", *s.quarantined_until[v]}});
        }
    }
    json severed = json::array();
    for (const Edge& e : s.severed) severed.push_back({e.u, e.v});
    return {{"quarantined", quarantined}, {"severed", severed}};
}

int query_int(const Request& r, const std::string& key, int fallback) {
    const auto it = r.query.find(key);
    if (it == r.query.end()) return fallback;
    int out = 0;
    auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), out);
    if (ec != std::errc{} || ptr != it->second.data() + it->second.size()) {
        throw FormatError("query parameter '" + key + "' must be an integer");
    }
    return out;
}

}  // namespace

std::optional<Event> Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    Event e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

bool Subscription::overflowed() const {
    std::lock_guard lock(mutex_);
    return overflowed_;
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    ready_.notify_all();
}

bool Subscription::offer(const Event& event) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return false;
        if (queue_.size() >= capacity_) {
            overflowed_ = true;
            closed_ = true;
        } else {
            queue_.push_back(event);
        }
    }
    ready_.notify_all();
    return !overflowed();
}

struct Service::Scenario {
    Scenario(std::string id_, ExperimentConfig cfg_, CloudGraph g)
        : id(std::move(id_)), cfg(std::move(cfg_)), graph(std::move(g)), rng(cfg.seeds().epidemic),
          state(EpidemicState::initial(graph.size())), logs(graph.size()) {}

    std::string id;
    ExperimentConfig cfg;
    CloudGraph graph;
    EpidemicRng rng;
    EpidemicState state;

    Eigen::MatrixXd normalized;
    Eigen::MatrixXd adjacency;
    EmbeddingTable table;
    GcnParams params;
    std::optional<ForecastParams> forecaster;
    std::string forecaster_error;
    SupervisedHead head;

    LogCorpus logs;
    EmbeddingTrajectory z;  // z[t] for every observed step

    std::uint64_t seq = 0;
    std::deque<Event> replay;
    std::vector<std::shared_ptr<Subscription>> subscribers;
    std::optional<std::pair<std::uint64_t, json>> cached_state;
    std::mutex mutex;

    bool finished() const { return state.t >= cfg.epidemic.horizon || !state.active(); }

    Eigen::MatrixXd features() const { return featurize_all(logs, table, cfg.feature_window); }

    void observe() {
        Trajectory now;
        now.states.push_back(state);
        const auto fresh = generate_logs(graph, now, scenario_preset(cfg.preset), cfg.logs,
                                         derive_seed(cfg.seeds().logs, static_cast<std::uint64_t>(state.t)));
        for (std::size_t v = 0; v < logs.entries.size(); ++v) {
            auto& dst = logs.entries[v];
            const auto& src = fresh.corpus.entries[v];
            dst.insert(dst.end(), src.begin(), src.end());
        }
        z.push_back(encode(normalized, features(), params));
    }

    json record(const std::string& type) const {
        json r = {{"scenario", id},
                  {"t", state.t},
                  {"seq", seq},
                  {"type", type},
                  {"finished", finished()},
                  {"counts", counts_json(state.counts())},
                  {"compartments", compartment_string(state)}};
        r.update(containment_json(state));
        return r;
    }

    void publish(json r) {
        ++seq;
        r["seq"] = seq;
        Event e{id, state.t, seq, with_schema(std::move(r))};
        replay.push_back(e);
        if (replay.size() > kReplayEvents) replay.pop_front();
        std::erase_if(subscribers, [&](const std::shared_ptr<Subscription>& s) { return !s->offer(e); });
        if (!cfg.serve.snapshot_dir.empty()) {
            write_text_file(std::filesystem::path(cfg.serve.snapshot_dir) / (id + ".json"), e.record.dump());
        }
    }
};

struct Service::Job {
    std::string id;
    FederateSettings settings;
    std::mutex mutex;
    std::string status = "running";
    std::string error;
    std::optional<FederationResult> result;
    std::thread worker;
};

Service::Service(ExperimentConfig defaults) : defaults_(std::move(defaults)) { defaults_.validate(); }

Service::~Service() {
    std::vector<std::shared_ptr<Job>> jobs;
    std::vector<std::shared_ptr<Scenario>> scenarios;
    {
        std::lock_guard lock(registry_mutex_);
        for (auto& [id, job] : jobs_) jobs.push_back(job);
        for (auto& [id, s] : scenarios_) scenarios.push_back(s);
    }
    for (auto& job : jobs)
        if (job->worker.joinable()) job->worker.join();
    for (auto& s : scenarios) {
        std::lock_guard lock(s->mutex);
        for (auto& sub : s->subscribers) sub->close();
    }
}

std::shared_ptr<Service::Scenario> Service::find(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = scenarios_.find(id);
    if (it == scenarios_.end()) throw NotFound("no scenario '" + id + "'");
    return it->second;
}

std::shared_ptr<Service::Job> Service::find_job(const std::string& id) const {
    std::lock_guard lock(registry_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFound("no federation job '" + id + "'");
    return it->second;
}

Response Service::dispatch(const Request& request) {
    try {
        const auto parts = split_path(request.path);
        const bool get = request.method == "GET", post = request.method == "POST";
        auto method_not_allowed = [&] { return failure(405, "method_not_allowed", request.method + " " + request.path); };

        if (parts.size() == 1 && parts[0] == "scenarios") {
            if (get) return list_scenarios();
            if (post) return create_scenario(parse_body(request.body));
            return method_not_allowed();
        }
        if (parts.size() == 3 && parts[0] == "scenarios") {
            const auto s = find(parts[1]);
            const auto& what = parts[2];
            if (what == "state") return get ? get_state(*s) : method_not_allowed();
            if (what == "steps") return post ? post_steps(*s, parse_body(request.body)) : method_not_allowed();
            if (what == "actions") return post ? post_actions(*s, parse_body(request.body)) : method_not_allowed();
            if (what == "forecast") return get ? get_forecast(*s, request) : method_not_allowed();
            if (what == "plan") {
                if (get) return post_plan(*s, json::object());
                return post ? post_plan(*s, parse_body(request.body)) : method_not_allowed();
            }
            if (what == "events") {
                // Polling fallback: the replay buffer after `since`.
                if (!get) return method_not_allowed();
                const auto since = static_cast<std::uint64_t>(std::max(0, query_int(request, "since", 0)));
                std::lock_guard lock(s->mutex);
                json events = json::array();
                for (const auto& e : s->replay)
                    if (e.seq > since) events.push_back(e.record);
                return ok({{"scenario", s->id}, {"seq", s->seq}, {"events", events}});
            }
        }
        if (parts.size() == 2 && parts[0] == "federation" && parts[1] == "jobs") {
            if (get) return list_jobs();
            if (post) return create_job(parse_body(request.body));
            return method_not_allowed();
        }
        if (parts.size() == 3 && parts[0] == "federation" && parts[1] == "jobs") {
            return get ? get_job(*find_job(parts[2])) : method_not_allowed();
        }
        return failure(404, "not_found", "no route for " + request.path);
    } catch (const NotFound& e) {
        return failure(404, "not_found", e.what());
    } catch (const Conflict& e) {
        return failure(409, "conflict", e.what());
    } catch (const ConstraintError& e) {
        return failure(422, "validation", e.what());
    } catch (const InvalidArgument& e) {
        return failure(422, "validation", e.what());
    } catch (const FormatError& e) {
        return failure(400, "bad_request", e.what());
    } catch (const json::exception& e) {
        return failure(400, "bad_request", e.what());
    } catch (const std::exception& e) {
        return failure(500, "internal", e.what());
    }
}

std::shared_ptr<Subscription> Service::subscribe(const std::string& scenario_id, std::uint64_t since) {
    const auto s = find(scenario_id);
    auto sub = std::make_shared<Subscription>(static_cast<std::size_t>(s->cfg.serve.event_queue));
    std::lock_guard lock(s->mutex);
    for (const auto& e : s->replay)
        if (e.seq > since && !sub->offer(e)) return sub;
    s->subscribers.push_back(sub);
    return sub;
}

Response Service::create_scenario(const json& body) {
    only_keys(body, {"seed", "preset", "epidemic", "topology", "graph", "initial_infected", "protected"}, "scenario");
    ExperimentConfig cfg = defaults_;
    take(body, "seed", cfg.seed);
    if (body.contains("preset")) {
        cfg.preset = body.at("preset").get<std::string>();
        cfg.epidemic = scenario_preset(cfg.preset).apply(cfg.epidemic);
    }
    if (body.contains("epidemic")) {
        const auto& e = body.at("epidemic");
        only_keys(e, {"beta", "delitescence", "gamma", "horizon"}, "epidemic");
        take(e, "beta", cfg.epidemic.beta);
        take(e, "delitescence", cfg.epidemic.delitescence);
        take(e, "gamma", cfg.epidemic.gamma);
        take(e, "horizon", cfg.epidemic.horizon);
    }
    if (body.contains("topology")) {
        const auto& t = body.at("topology");
        only_keys(t, {"n", "model", "p", "m", "k", "p_in", "p_out", "hyperedges"}, "topology");
        take(t, "n", cfg.topology.n);
        const auto model = t.value("model", std::string("subnet"));
        if (model == "uniform") {
            cfg.topology.model = UniformRandom{t.value("p", 0.1)};
        } else if (model == "preferential") {
            cfg.topology.model = Preferential{t.value("m", 2)};
        } else if (model == "subnet") {
            SubnetBlocks sb = std::holds_alternative<SubnetBlocks>(cfg.topology.model)
                                  ? std::get<SubnetBlocks>(cfg.topology.model)
                                  : SubnetBlocks{};
            take(t, "k", sb.k);
            take(t, "p_in", sb.p_in);
            take(t, "p_out", sb.p_out);
            cfg.topology.model = sb;
        } else {
            throw InvalidArgument("unknown topology model '" + model + "'");
        }
        take(t, "hyperedges", cfg.topology.hyperedges.count);
        cfg.topology.hyperedges.max_size = std::min(cfg.topology.hyperedges.max_size, cfg.topology.n);
        cfg.topology.hyperedges.min_size = std::min(cfg.topology.hyperedges.min_size, cfg.topology.hyperedges.max_size);
    }
    take(body, "initial_infected", cfg.initial_infected);
    if (body.contains("protected")) {
        const auto ids = body.at("protected").get<std::vector<int>>();
        cfg.plan.objective.protected_vertices = {ids.begin(), ids.end()};
    }
    cfg.graph_file.clear();
    cfg.scoring.epidemic = cfg.epidemic;
    cfg.plan.objective.epidemic = cfg.epidemic;
    cfg.validate();

    CloudGraph graph = body.contains("graph") ? graph_from_json(body.at("graph").dump()).graph
                                              : generate_topology(cfg.topology, cfg.seeds().topology);
    for (VertexId v : cfg.initial_infected)
        if (!graph.contains(v)) throw InvalidArgument("initial infected vertex " + std::to_string(v) + " is not in the graph");
    cfg.plan.objective.validate(graph.size());

    std::string id;
    {
        std::lock_guard lock(registry_mutex_);
        id = "scn-" + std::to_string(next_scenario_++);
    }
    auto s = std::make_shared<Scenario>(id, cfg, std::move(graph));
    s->normalized = normalized_adjacency(s->graph);
    s->adjacency = s->graph.adjacency_matrix();

    // The detector and forecaster are fitted on a reference run of the same
    // scenario under an independent stream, standing in for history.
    const auto ref = run(s->graph, cfg.epidemic, cfg.initial_infected, derive_seed(cfg.seed, "reference"));
    const auto ref_logs = generate_logs(s->graph, ref, scenario_preset(cfg.preset), cfg.logs,
                                        derive_seed(cfg.seed, "reference-logs"));
    s->table = embed_logs(cfg, ref_logs.corpus);
    s->params = detect(cfg, s->graph, ref_logs.corpus, s->table).training.params;
    const auto ref_z = embedding_trajectory(s->graph, ref_logs.corpus, s->table, s->params, ref.states.back().t,
                                            cfg.feature_window);
    s->head = fit_infection_head(ref_z, ref);
    try {
        s->forecaster = fit_forecaster({ref_z}, cfg.forecast.order, cfg.forecast.ridge);
    } catch (const Error& e) {
        s->forecaster_error = e.what();
    }

    s->state = seed_infection(EpidemicState::initial(s->graph.size()), cfg.initial_infected);
    s->observe();
    s->publish(s->record("created"));
    {
        std::lock_guard lock(registry_mutex_);
        scenarios_[id] = s;
    }
    return ok({{"id", id}, {"n", s->graph.size()}, {"t", s->state.t}, {"seq", s->seq}}, 201);
}

Response Service::list_scenarios() const {
    std::lock_guard lock(registry_mutex_);
    json ids = json::array();
    for (const auto& [id, s] : scenarios_) ids.push_back(id);
    return ok({{"scenarios", ids}});
}

Response Service::get_state(Scenario& s) {
    std::lock_guard lock(s.mutex);
    if (!s.cached_state || s.cached_state->first != s.seq) {
        const Eigen::MatrixXd r = s.features();
        const auto f = forward(s.normalized, r, s.params);
        const auto ranking = rank_anomalies(anomaly_scores(s.adjacency, f.a_hat, r, f.r_hat, s.cfg.train.alpha));
        const std::vector<double> anomaly(ranking.normalized.data(), ranking.normalized.data() + ranking.normalized.size());
        const auto scores = vertex_scores(s.graph, s.state, anomaly, s.cfg.scoring,
                                          derive_seed(s.cfg.seeds().scoring, static_cast<std::uint64_t>(s.state.t)));
        json per_vertex = json::array();
        for (std::size_t v = 0; v < scores.size(); ++v) {
            per_vertex.push_back({{"vertex", v},
                                  {"risk", scores[v].risk},
                                  {"exploitability", scores[v].exploitability},
                                  {"impact", scores[v].impact},
                                  {"anomaly", anomaly[v]}});
        }
        const auto cloud = cloud_scores(scores);
        json body = s.record("state");
        body.erase("type");
        body["id"] = s.id;
        body["scores"] = per_vertex;
        body["cloud"] = {{"risk", cloud.risk}, {"exploitability", cloud.exploitability}, {"impact", cloud.impact}};
        body["heatmap"] = heatmap_csv(ranking);
        s.cached_state.emplace(s.seq, with_schema(std::move(body)));
    }
    return {200, s.cached_state->second};
}

Response Service::post_steps(Scenario& s, const json& body) {
    only_keys(body, {"n"}, "steps request");
    const int n = body.value("n", 1);
    if (n < 1) throw InvalidArgument("n must be >= 1");
    std::lock_guard lock(s.mutex);
    if (s.finished()) throw Conflict("scenario " + s.id + " is finished at t=" + std::to_string(s.state.t));
    int taken = 0;
    for (; taken < n && !s.finished(); ++taken) {
        auto result = step(s.graph, s.state, s.cfg.epidemic, s.rng);
        s.state = std::move(result.state);
        s.observe();
        json r = s.record("step");
        json transmissions = json::array();
        for (const auto& e : result.events) transmissions.push_back({e.src, e.dst});
        r["transmissions"] = transmissions;
        s.publish(std::move(r));
    }
    return ok({{"id", s.id}, {"t", s.state.t}, {"seq", s.seq}, {"steps", taken}, {"finished", s.finished()}});
}

Response Service::post_actions(Scenario& s, const json& body) {
    only_keys(body, {"actions"}, "actions request");
    if (!body.contains("actions") || !body.at("actions").is_array() || body.at("actions").empty()) {
        throw FormatError("'actions' must be a non-empty array");
    }
    Plan plan;
    for (const auto& a : body.at("actions")) {
        PlannedAction pa{intervention_from_json(a), 0, 0.0};
        if (std::holds_alternative<QuarantineVertex>(pa.action)) {
            pa.cost = s.cfg.plan.costs.quarantine;
            pa.implement_time = s.cfg.plan.costs.quarantine_time;
        } else if (std::holds_alternative<SeverEdge>(pa.action)) {
            pa.cost = s.cfg.plan.costs.sever;
            pa.implement_time = s.cfg.plan.costs.sever_time;
        }
        plan.push_back(std::move(pa));
    }
    std::lock_guard lock(s.mutex);
    check_plan(s.graph, plan, s.cfg.plan.objective);
    EpidemicState next = apply_plan(s.graph, s.state, plan);
    s.state = std::move(next);
    json r = s.record("action");
    json applied = json::array();
    for (const auto& a : plan) applied.push_back(intervention_to_json(a.action));
    r["actions"] = applied;
    s.publish(std::move(r));
    json out = s.record("action");
    out.erase("type");
    out["id"] = s.id;
    return ok(std::move(out));
}

Response Service::get_forecast(Scenario& s, const Request& request) {
    std::lock_guard lock(s.mutex);
    const int k = query_int(request, "k", s.cfg.forecast.steps);
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (!s.forecaster) throw Conflict("no forecaster for scenario " + s.id + ": " + s.forecaster_error);
    if (static_cast<int>(s.z.size()) < s.forecaster->order()) {
        throw Conflict("forecast needs " + std::to_string(s.forecaster->order()) + " observed steps, have " +
                       std::to_string(s.z.size()));
    }
    const auto colors = color_forecast(*s.forecaster, s.z, s.head, k);
    json frames = json::array();
    for (std::size_t j = 0; j < colors.size(); ++j) {
        frames.push_back({{"t", s.state.t + 1 + static_cast<int>(j)},
                          {"predicted", std::vector<double>(colors[j].data(), colors[j].data() + colors[j].size())}});
    }
    return ok({{"id", s.id}, {"t", s.state.t}, {"k", k}, {"frames", frames}, {"csv", forecast_csv(colors, s.state.t + 1)}});
}

Response Service::post_plan(Scenario& s, const json& body) {
    only_keys(body, {"budget", "horizon", "n_rollouts", "lambda", "mu", "method"}, "plan request");
    std::lock_guard lock(s.mutex);
    ObjectiveConfig objective = s.cfg.plan.objective;
    take(body, "budget", objective.budget);
    take(body, "horizon", objective.horizon);
    take(body, "n_rollouts", objective.n_rollouts);
    take(body, "lambda", objective.lambda);
    take(body, "mu", objective.mu);
    const auto method = body.value("method", std::string("greedy"));
    if (method != "greedy" && method != "exhaustive") throw InvalidArgument("method must be greedy or exhaustive");
    objective.validate(s.graph.size());
    const std::uint64_t seed = derive_seed(s.cfg.seeds().plan, static_cast<std::uint64_t>(s.state.t));
    auto candidates = default_candidates(s.graph, s.state, objective, s.cfg.plan.costs);
    const Plan plan = method == "greedy" ? greedy_plan(s.graph, s.state, objective, candidates, seed)
                                         : exhaustive_plan(s.graph, s.state, objective, candidates, seed);
    const auto evaluation = evaluate_plan(s.graph, s.state, plan, objective, seed);
    json out = json::parse(plan_file(plan, evaluation));
    out["id"] = s.id;
    out["t"] = s.state.t;
    out["method"] = method;
    return ok(std::move(out));
}

Response Service::create_job(const json& body) {
    only_keys(body,
              {"clients", "client_vertices", "rounds", "clients_per_round", "clip", "noise", "delta", "epsilon_stop",
               "local_epochs", "seed"},
              "federation job");
    ExperimentConfig cfg = defaults_;
    auto& f = cfg.federate;
    take(body, "clients", f.clients);
    take(body, "client_vertices", f.client_vertices);
    take(body, "rounds", f.federation.rounds);
    take(body, "clients_per_round", f.federation.clients_per_round);
    take(body, "clip", f.federation.clip);
    take(body, "noise", f.federation.noise);
    take(body, "delta", f.federation.delta);
    take(body, "epsilon_stop", f.federation.epsilon_stop);
    take(body, "local_epochs", f.federation.local.epochs);
    take(body, "seed", cfg.seed);
    cfg.validate();

    auto job = std::make_shared<Job>();
    job->settings = f;
    {
        std::lock_guard lock(registry_mutex_);
        job->id = "job-" + std::to_string(next_job_++);
        jobs_[job->id] = job;
    }
    job->worker = std::thread([job, cfg] {
        try {
            const auto g = build_graph(cfg);
            const auto logs = synthesize_logs(cfg, g, simulate(cfg, g));
            auto result = federate_run(cfg, embed_logs(cfg, logs.corpus));
            std::lock_guard lock(job->mutex);
            job->result = std::move(result);
            job->status = "done";
        } catch (const std::exception& e) {
            std::lock_guard lock(job->mutex);
            job->status = "failed";
            job->error = e.what();
        }
    });
    return ok({{"job", job->id}, {"status", "running"}}, 202);
}

Response Service::get_job(Job& job) const {
    std::lock_guard lock(job.mutex);
    json out = {{"job", job.id},
                {"status", job.status},
                {"clients", job.settings.clients},
                {"rounds_requested", job.settings.federation.rounds}};
    if (!job.error.empty()) out["message"] = job.error;
    if (job.result) {
        json rounds = json::array();
        for (const auto& r : job.result->rounds) {
            rounds.push_back({{"round", r.round},
                              {"m", r.m},
                              {"epsilon", r.epsilon},
                              {"rho", r.rho},
                              {"mean_update_norm", r.mean_update_norm},
                              {"loss_global", r.loss_global}});
        }
        out["rounds"] = rounds;
        out["round_log"] = round_log_csv(job.result->rounds);
        out["epsilon"] = job.result->ledger.epsilon;
        out["stopped_early"] = job.result->stopped_early;
    }
    return ok(std::move(out));
}

Response Service::list_jobs() const {
    std::vector<std::shared_ptr<Job>> jobs;
    {
        std::lock_guard lock(registry_mutex_);
        for (const auto& [id, job] : jobs_) jobs.push_back(job);
    }
    json out = json::array();
    for (const auto& job : jobs) {
        std::lock_guard lock(job->mutex);
        out.push_back({{"job", job->id}, {"status", job->status}});
    }
    return ok({{"jobs", out}});
}

}  // namespace cloudsentry
