// Batch runner: every subcommand rebuilds its inputs from the config and
// seed, so any stage can be rerun alone.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cloudsentry/config.hpp"
#include "cloudsentry/error.hpp"
#include "cloudsentry/service.hpp"
#include "cloudsentry/textio.hpp"

namespace fs = std::filesystem;
using namespace cloudsentry;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

using Artifacts = std::map<std::string, std::string>;  // file name -> content

struct Inputs {
    ExperimentConfig cfg;
    std::optional<CloudGraph> graph;
    std::optional<Trajectory> traj;
    std::optional<GeneratedLogs> logs;
    std::optional<EmbeddingTable> table;

    const CloudGraph& g() {
        if (!graph) graph = build_graph(cfg);
        return *graph;
    }
    const Trajectory& trajectory() {
        if (!traj) traj = simulate(cfg, g());
        return *traj;
    }
    const LogCorpus& corpus() {
        if (!logs) logs = synthesize_logs(cfg, g(), trajectory());
        return logs->corpus;
    }
    const EmbeddingTable& embeddings() {
        if (!table) table = embed_logs(cfg, corpus());
        return *table;
    }
};

std::string loss_csv(const std::vector<double>& losses) {
    std::string out = "epoch,loss\n";
    for (std::size_t k = 0; k < losses.size(); ++k) out += std::to_string(k) + "," + format_double(losses[k]) + "\n";
    return out;
}

Artifacts produce(const std::string& command, Inputs& in) {
    const auto& cfg = in.cfg;
    Artifacts out;
    if (command == "generate") {
        out["graph.json"] = graph_to_json(in.g());
    } else if (command == "simulate") {
        out["graph.json"] = graph_to_json(in.g());
        out["trajectory.csv"] = trajectory_csv(in.trajectory());
        out["trajectory.jsonl"] = trajectory_jsonl(in.trajectory());
    } else if (command == "logs") {
        out["logs.txt"] = format_logs(in.corpus());
    } else if (command == "embed") {
        out["embeddings.txt"] = format_embeddings(in.embeddings());
    } else if (command == "train" || command == "detect") {
        const auto det = detect(cfg, in.g(), in.corpus(), in.embeddings());
        if (command == "train") {
            out["params.txt"] = format_params(det.training.params);
            out["loss.csv"] = loss_csv(det.training.loss_log);
        } else {
            out["heatmap.csv"] = heatmap_csv(det.ranking);
            const auto& norm = det.ranking.normalized;
            const std::vector<double> anomaly(norm.data(), norm.data() + norm.size());
            const auto scores = vertex_scores(in.g(), in.trajectory().states.back(), anomaly, cfg.scoring,
                                              cfg.seeds().scoring);
            out["scores.csv"] = scores_csv(scores, anomaly);
        }
    } else if (command == "forecast") {
        const auto det = detect(cfg, in.g(), in.corpus(), in.embeddings());
        const auto run = forecast_run(cfg, in.g(), in.trajectory(), in.corpus(), in.embeddings(), det.training.params);
        out["forecast.csv"] = forecast_csv(run.colors, run.first_step);
    } else if (command == "plan") {
        const auto run = plan_run(cfg, in.g(), in.trajectory());
        out["plan.json"] = plan_file(run.plan, run.evaluation);
        out["plan_report.csv"] = report_csv(run.evaluation);
    } else if (command == "federate") {
        const auto result = federate_run(cfg, in.embeddings());
        out["round_log.csv"] = round_log_csv(result.rounds);
        out["message_trace.csv"] = message_trace_csv(result.trace);
        out["federated_params.txt"] = format_params(result.model);
    } else if (command == "audit-dp") {
        const auto run = audit_run(cfg, in.embeddings());
        nlohmann::json j = {{"epsilon", run.epsilon},
                            {"delta", cfg.audit.audit.delta},
                            {"noise", cfg.audit.noise},
                            {"clip", cfg.audit.clip},
                            {"trials", cfg.audit.audit.trials},
                            {"passed", run.result.passed},
                            {"worst_excess", run.result.worst_excess},
                            {"worst_bin", run.result.worst_bin}};
        out["audit.json"] = j.dump(1) + "\n";
    }
    return out;
}

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int execute(const std::string& command, const Common& common, std::optional<int> port) {
    std::vector<fs::path> written;
    bool created_out = false;
    try {
        ExperimentConfig cfg = common.config.empty() ? parse_config("") : load_config(common.config);
        if (common.seed) cfg.seed = *common.seed;
        if (port) cfg.serve.port = *port;
        cfg.validate();

        Inputs inputs{cfg, {}, {}, {}, {}};
        Artifacts artifacts = produce(command, inputs);
        artifacts["resolved_config.ini"] = format_config(cfg);
        nlohmann::json meta = {{"command", command}, {"version", kVersion}, {"seed", cfg.seed},
                               {"started_at", timestamp()}};
        meta["artifacts"] = nlohmann::json::array();
        for (const auto& [name, content] : artifacts) meta["artifacts"].push_back(name);
        artifacts["run_meta.json"] = meta.dump(1) + "\n";

        created_out = fs::create_directories(common.out);
        for (const auto& [name, content] : artifacts) {
            const fs::path path = fs::path(common.out) / name;
            written.push_back(path);
            write_text_file(path, content);
        }

        if (command == "serve") {
            Service service(cfg);
            HttpServer server(service);
            std::cout << "listening on " << cfg.serve.host << ":" << cfg.serve.port << std::endl;
            server.run(cfg.serve.host, cfg.serve.port);
        }
        return 0;
    } catch (const std::exception& e) {
        std::error_code ignored;
        for (const auto& path : written) fs::remove(path, ignored);
        if (created_out) fs::remove(common.out, ignored);  // only succeeds when empty
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multicloud malware spread simulation, detection and containment"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"generate", "generate a topology and write graph.json"},
        {"simulate", "run the epidemic and write the trajectory"},
        {"logs", "synthesize per-vertex logs"},
        {"embed", "train token embeddings on the logs"},
        {"train", "train the graph autoencoder"},
        {"detect", "rank anomalous vertices and score risk"},
        {"forecast", "forecast per-vertex infection scores"},
        {"plan", "search for a containment plan"},
        {"federate", "run federated training with differential privacy"},
        {"audit-dp", "empirically audit one aggregation round"},
        {"serve", "run the HTTP service"},
    };
    Common common;
    std::optional<int> port;
    std::string chosen;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", common.config, "INI config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "global seed, overrides [global] seed");
        sub->add_option("--out", common.out, "output directory")->capture_default_str();
        if (name == "serve") sub->add_option("--port", port, "listen port, overrides [serve] port");
        sub->callback([&chosen, name = name] { chosen = name; });
    }
    CLI11_PARSE(app, argc, argv);
    return execute(chosen, common, port);
}
