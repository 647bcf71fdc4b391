#include "cloudsentry/service.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>

#include "doctest.h"

using namespace cloudsentry;
using nlohmann::json;

namespace {

ExperimentConfig small_defaults() {
    ExperimentConfig cfg;
    cfg.topology.n = 12;
    cfg.topology.model = SubnetBlocks{2, 0.5, 0.05};
    cfg.topology.hyperedges = {0, 1, 1};
    cfg.epidemic.horizon = 10;
    cfg.epidemic.gamma = 0.0;
    cfg.embed.dim = 4;
    cfg.embed.epochs = 1;
    cfg.train.hidden = 4;
    cfg.train.embedding = 2;
    cfg.train.epochs = 10;
    cfg.scoring.n_rollouts = 3;
    return cfg;
}

}  // namespace

TEST_CASE("HTTP endpoints and NDJSON event stream") {
    Service service(small_defaults());
    HttpServer server(service);
    const int port = server.start("127.0.0.1", 0);
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);
    const auto created = client.Post("/scenarios", R"({"seed": 7})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto id = json::parse(created->body).at("id").get<std::string>();

    const auto state = client.Get("/scenarios/" + id + "/state");
    REQUIRE(state);
    CHECK(state->status == 200);
    CHECK(state->get_header_value("Content-Type") == "application/json");
    CHECK(json::parse(state->body).at("schema_version") == kSchemaVersion);
    const auto missing = client.Get("/scenarios/nope/state");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    // Stream from seq 1 and stop after three step events.
    std::vector<json> lines;
    std::thread reader([&] {
        httplib::Client stream("127.0.0.1", port);
        std::string buffer;
        stream.Get("/scenarios/" + id + "/events?since=1", [&](const char* data, std::size_t len) {
            buffer.append(data, len);
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                lines.push_back(json::parse(buffer.substr(0, nl)));
                buffer.erase(0, nl + 1);
            }
            return lines.size() < 3;
        });
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    const auto stepped = client.Post("/scenarios/" + id + "/steps", R"({"n": 3})", "application/json");
    REQUIRE(stepped);
    CHECK(stepped->status == 200);
    reader.join();
    REQUIRE(lines.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(lines[k].at("seq") == 2 + k);
        CHECK(lines[k].at("t") == k + 1);
        CHECK(lines[k].at("scenario") == id);
    }

    const auto poll = client.Get("/scenarios/" + id + "/events?mode=poll&since=2");
    REQUIRE(poll);
    CHECK(json::parse(poll->body).at("events").size() == 2);
    const auto unknown = client.Get("/scenarios/nope/events");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);

    server.stop();
}
