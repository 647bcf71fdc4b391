#include "cloudsentry/service.hpp"

#include <atomic>
#include <thread>

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

#include "cloudsentry/error.hpp"

namespace cloudsentry {

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {}

    Service& service;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> stopping{false};

    static void reply(httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    void handle(const httplib::Request& req, httplib::Response& res) {
        Request r{req.method, req.path, {}, req.body};
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        reply(res, service.dispatch(r));
    }

    void stream_events(const httplib::Request& req, httplib::Response& res) {
        if (req.has_param("mode") && req.get_param_value("mode") == "poll") return handle(req, res);
        std::uint64_t since = 0;
        if (req.has_param("since")) {
            try {
                since = std::stoull(req.get_param_value("since"));
            } catch (const std::exception&) {
                return reply(res, {400, {{"schema_version", kSchemaVersion}, {"error", "bad_request"},
                                         {"message", "query parameter 'since' must be an integer"}}});
            }
        }
        std::shared_ptr<Subscription> sub;
        try {
            sub = service.subscribe(req.matches[1], since);
        } catch (const NotFound& e) {
            return reply(res, {404, {{"schema_version", kSchemaVersion}, {"error", "not_found"}, {"message", e.what()}}});
        }
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [this, sub](std::size_t, httplib::DataSink& sink) {
                while (!stopping) {
                    if (auto e = sub->next(std::chrono::milliseconds(200))) {
                        const std::string line = e->record.dump() + "\n";
                        if (!sink.write(line.data(), line.size())) {
                            sub->close();
                            return false;
                        }
                        return true;
                    }
                    if (sub->closed()) break;
                    if (!sink.is_writable()) {
                        sub->close();
                        return false;
                    }
                }
                sink.done();
                return true;
            },
            [sub](bool) { sub->close(); });
    }

    void install() {
        server.Get(R"(/scenarios/([^/]+)/events)",
                   [this](const httplib::Request& q, httplib::Response& r) { stream_events(q, r); });
        auto generic = [this](const httplib::Request& q, httplib::Response& r) { handle(q, r); };
        server.Get(".*", generic);
        server.Post(".*", generic);
        server.Put(".*", generic);
        server.Delete(".*", generic);
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->install(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : impl_->server.bind_to_port(host, port) ? port : -1;
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
    impl_->stopping = true;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cloudsentry
