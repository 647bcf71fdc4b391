#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cloudsentry/pipeline.hpp"

namespace cloudsentry {

inline constexpr int kSchemaVersion = 1;

struct Request {
    std::string method;  // GET, POST
    std::string path;    // without query string
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    nlohmann::json body;  // always carries schema_version
};

/// One state change of one scenario. seq increases by one per event within
/// a scenario.
struct Event {
    std::string scenario;
    int t = 0;
    std::uint64_t seq = 0;
    nlohmann::json record;  // the NDJSON line
};

/// Bounded per-subscriber queue. A publisher that finds it full closes it
/// instead of dropping events, so a subscriber sees either every event in
/// order or a disconnect.
class Subscription {
public:
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}

    /// Waits up to `timeout`; nullopt on timeout or once closed and drained.
    std::optional<Event> next(std::chrono::milliseconds timeout);
    bool closed() const;
    bool overflowed() const;
    void close();

    bool offer(const Event& event);  // false when the queue overflowed

private:
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Event> queue_;
    std::size_t capacity_;
    bool closed_ = false;
    bool overflowed_ = false;
};

class Service {
public:
    explicit Service(ExperimentConfig defaults);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Routes one request. Module errors map to 404 (not found), 409
    /// (conflict), 422 (validation) and 400 (malformed body).
    Response dispatch(const Request& request);

    /// Subscribes to a scenario. Events with seq > since that are still in
    /// the replay buffer are queued first.
    std::shared_ptr<Subscription> subscribe(const std::string& scenario_id, std::uint64_t since = 0);

    const ExperimentConfig& defaults() const noexcept { return defaults_; }

private:
    struct Scenario;
    struct Job;

    std::shared_ptr<Scenario> find(const std::string& id) const;
    std::shared_ptr<Job> find_job(const std::string& id) const;

    Response create_scenario(const nlohmann::json& body);
    Response list_scenarios() const;
    Response get_state(Scenario& s);
    Response post_steps(Scenario& s, const nlohmann::json& body);
    Response post_actions(Scenario& s, const nlohmann::json& body);
    Response get_forecast(Scenario& s, const Request& request);
    Response post_plan(Scenario& s, const nlohmann::json& body);
    Response create_job(const nlohmann::json& body);
    Response get_job(Job& job) const;
    Response list_jobs() const;

    ExperimentConfig defaults_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Scenario>> scenarios_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    int next_scenario_ = 1;
    int next_job_ = 1;
};

/// HTTP front end over Service::dispatch plus the NDJSON event stream at
/// GET /scenarios/{id}/events[?since=seq].
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cloudsentry
