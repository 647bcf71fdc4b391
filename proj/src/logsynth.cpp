#include "cloudsentry/logsynth.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"

namespace cloudsentry {

std::vector<std::string> LogCorpus::tokens(VertexId v) const {
    std::vector<std::string> out;
    for (const auto& e : entries.at(static_cast<std::size_t>(v))) out.insert(out.end(), e.tokens.begin(), e.tokens.end());
    return out;
}

std::size_t LogCorpus::entry_count() const {
    std::size_t total = 0;
    for (const auto& v : entries) total += v.size();
    return total;
}

namespace {

const std::map<std::string, std::vector<std::string>>& slot_values() {
    static const std::map<std::string, std::vector<std::string>> values{
        {"<user>", {"user_alice", "user_bob", "user_carol", "user_dave", "user_svc"}},
        {"<port>", {"port_22", "port_80", "port_443", "port_5432", "port_8080"}},
        {"<svc>", {"svc_nginx", "svc_sshd", "svc_cron", "svc_postgres", "svc_agent"}},
        {"<peer>", {"peer_a", "peer_b", "peer_c", "peer_d"}},
    };
    return values;
}

std::vector<LogTemplate> build_templates() {
    using P = std::vector<std::string>;
    std::vector<LogTemplate> out;
    auto add = [&](P pattern, std::optional<Scenario> kind) {
        out.push_back({static_cast<int>(out.size()), std::move(pattern), kind});
    };
    const std::optional<Scenario> normal;
    add({"sshd", "accepted", "login", "<user>"}, normal);
    add({"cron", "job", "<svc>", "completed", "ok"}, normal);
    add({"http", "get", "status", "200", "<port>"}, normal);
    add({"disk", "usage", "check", "ok"}, normal);
    add({"service", "<svc>", "heartbeat", "ok"}, normal);
    add({"session", "closed", "<user>"}, normal);
    add({"backup", "snapshot", "completed", "ok"}, normal);
    add({"kernel", "timer", "tick", "normal"}, normal);
    add({"db", "query", "latency", "normal"}, normal);
    add({"net", "link", "up", "<port>"}, normal);

    add({"syn", "flood", "detected", "<port>"}, Scenario::Ddos);
    add({"conn", "rate", "exceeded", "botnet", "<peer>"}, Scenario::Ddos);
    add({"packet", "drop", "burst", "ingress"}, Scenario::Ddos);
    add({"bot", "beacon", "c2", "heartbeat"}, Scenario::Ddos);

    add({"hypercall", "invalid", "opcode", "trap"}, Scenario::Hypercall);
    add({"vmexit", "storm", "guest"}, Scenario::Hypercall);
    add({"hypercall", "privilege", "escalation", "attempt"}, Scenario::Hypercall);
    add({"guest", "mmio", "probe", "anomaly"}, Scenario::Hypercall);

    add({"hypervisor", "cpu", "starvation"}, Scenario::HypervisorDos);
    add({"vcpu", "scheduler", "stall"}, Scenario::HypervisorDos);
    add({"balloon", "memory", "exhaustion"}, Scenario::HypervisorDos);
    add({"host", "watchdog", "timeout"}, Scenario::HypervisorDos);

    add({"arp", "spoof", "gateway", "mismatch"}, Scenario::Mitm);
    add({"tls", "cert", "mismatch", "<peer>"}, Scenario::Mitm);
    add({"dns", "response", "forged"}, Scenario::Mitm);
    add({"session", "token", "replay", "<user>"}, Scenario::Mitm);

    add({"rootkit", "hypervisor", "shim", "loaded"}, Scenario::Hyperjacking);
    add({"vmcs", "tamper", "detected"}, Scenario::Hyperjacking);
    add({"nested", "virtualization", "unexpected"}, Scenario::Hyperjacking);
    add({"boot", "measurement", "mismatch"}, Scenario::Hyperjacking);

    add({"cache", "timing", "probe", "<peer>"}, Scenario::CoLocation);
    add({"cross", "vm", "side", "channel"}, Scenario::CoLocation);
    add({"shared", "page", "dedup", "probe"}, Scenario::CoLocation);
    add({"llc", "contention", "spike"}, Scenario::CoLocation);

    add({"migration", "stream", "tampered"}, Scenario::LiveMigration);
    add({"memory", "page", "injection", "migration"}, Scenario::LiveMigration);
    add({"migration", "auth", "failure", "<peer>"}, Scenario::LiveMigration);
    add({"dirty", "page", "anomaly", "migration"}, Scenario::LiveMigration);
    return out;
}

void instantiate(const LogTemplate& tpl, std::mt19937_64& rng, std::vector<std::string>& out) {
    for (const auto& tok : tpl.pattern) {
        auto it = slot_values().find(tok);
        if (it == slot_values().end()) {
            out.push_back(tok);
        } else {
            const auto& values = it->second;
            out.push_back(values[std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng)]);
        }
    }
}

}  // namespace

const std::vector<LogTemplate>& log_templates() {
    static const std::vector<LogTemplate> templates = build_templates();
    return templates;
}

const LogTemplate& log_template(int id) {
    return log_templates().at(static_cast<std::size_t>(id));
}

std::vector<int> normal_template_ids() {
    std::vector<int> ids;
    for (const auto& t : log_templates())
        if (!t.anomalous()) ids.push_back(t.id);
    return ids;
}

std::vector<int> anomalous_template_ids(Scenario scenario) {
    std::vector<int> ids;
    for (const auto& t : log_templates())
        if (t.anomalous_for == scenario) ids.push_back(t.id);
    return ids;
}

GeneratedLogs generate_logs(const CloudGraph& g, const Trajectory& trajectory, const ScenarioPreset& preset,
                            const LogGenConfig& config, std::uint64_t seed) {
    if (config.rate < 1) throw InvalidArgument("log rate must be >= 1");
    if (!(config.mix >= 0.0 && config.mix <= 1.0)) throw InvalidArgument("log mix must be in [0,1]");
    if (trajectory.states.empty()) throw InvalidArgument("trajectory has no states");
    const auto normal = normal_template_ids();
    const auto anomalous = anomalous_template_ids(preset.kind);
    if (anomalous.empty()) throw InvalidArgument("preset '" + preset.name + "' has no anomalous templates");

    const int n = g.size();
    GeneratedLogs out{LogCorpus(n), std::vector<std::vector<int>>(static_cast<std::size_t>(n))};
    for (VertexId v = 0; v < n; ++v) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(v)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick_normal(0, normal.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_anomalous(0, anomalous.size() - 1);
        auto& entries = out.corpus.entries[static_cast<std::size_t>(v)];
        auto& ids = out.template_ids[static_cast<std::size_t>(v)];
        for (const auto& state : trajectory.states) {
            if (state.size() != n) throw InvalidArgument("trajectory state size does not match graph");
            const Compartment c = state.compartment[static_cast<std::size_t>(v)];
            const bool infected = c == Compartment::D || c == Compartment::I;
            for (int k = 0; k < config.rate; ++k) {
                const bool draw_anomalous = infected && unit(rng) < config.mix;
                const int id = draw_anomalous ? anomalous[pick_anomalous(rng)] : normal[pick_normal(rng)];
                LogEntry entry{state.t, {}};
                instantiate(log_template(id), rng, entry.tokens);
                entries.push_back(std::move(entry));
                ids.push_back(id);
            }
        }
    }
    return out;
}

LogCorpus parse_logs(const std::string& text, int n) {
    if (n < 1) throw InvalidArgument("log ingestion needs a positive vertex count");
    LogCorpus corpus(n);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool any = false;
    auto parse_int = [&](const std::string& field, const char* what) {
        int value = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw FormatError("log line " + std::to_string(line_no) + ": " + what + " '" + field +
                              "' is not an integer");
        }
        return value;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string f; fields >> f;) parts.push_back(std::move(f));
        if (parts.size() < 3) {
            throw FormatError("log line " + std::to_string(line_no) + ": expected '<vertex_id> <step> <token>...'");
        }
        const int v = parse_int(parts[0], "vertex id");
        const int t = parse_int(parts[1], "step");
        if (v < 0 || v >= n) {
            throw FormatError("log line " + std::to_string(line_no) + ": unknown vertex " + std::to_string(v));
        }
        if (t < 0) throw FormatError("log line " + std::to_string(line_no) + ": negative step");
        corpus.entries[static_cast<std::size_t>(v)].push_back({t, {parts.begin() + 2, parts.end()}});
        any = true;
    }
    if (!any) throw FormatError("log file is empty");
    return corpus;
}

LogCorpus ingest_logs(const std::filesystem::path& path, int n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read log file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_logs(buf.str(), n);
}

std::string format_logs(const LogCorpus& corpus) {
    std::ostringstream out;
    for (VertexId v = 0; v < corpus.size(); ++v) {
        for (const auto& e : corpus.entries[static_cast<std::size_t>(v)]) {
            out << v << ' ' << e.step;
            for (const auto& tok : e.tokens) out << ' ' << tok;
            out << '\n';
        }
    }
    return out.str();
}

void export_logs(const LogCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write log file " + path.string());
    out << format_logs(corpus);
}

}  // namespace cloudsentry
