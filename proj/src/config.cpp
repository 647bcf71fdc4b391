#include "cloudsentry/config.hpp"

#include <charconv>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cloudsentry/error.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

namespace {

struct Key {
    std::string section;
    std::string name;
    std::function<void(const std::string&)> set;
    std::function<std::optional<std::string>()> get;  // nullopt: not written
};

std::string qualified(const std::string& section, const std::string& name) { return section + "." + name; }

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw InvalidArgument("config key '" + key + "': '" + value + "' is not " + expected);
}

long long to_integer(const std::string& key, const std::string& text) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) bad_value(key, text, "an integer");
    return out;
}

int to_int(const std::string& key, const std::string& text) {
    const long long v = to_integer(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad_value(key, text, "an int");
    return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc{} || ptr != text.data() + text.size()) bad_value(key, text, "an unsigned integer");
    return out;
}

double to_real(const std::string& key, const std::string& text) {
    double out = 0.0;
    if (!parse_double(text, out)) bad_value(key, text, "a number");
    return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) continue;
        out.push_back(to_int(key, item.substr(first, last - first + 1)));
    }
    return out;
}

std::string join(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t k = 0; k < xs.size(); ++k) out += (k ? "," : "") + std::to_string(xs[k]);
    return out;
}

class Registry {
public:
    explicit Registry(ExperimentConfig& cfg) : cfg_(cfg) { build(); }

    const std::vector<Key>& keys() const { return keys_; }
    const Key* find(const std::string& section, const std::string& name) const {
        for (const auto& k : keys_)
            if (k.section == section && k.name == name) return &k;
        return nullptr;
    }

private:
    void add(std::string section, std::string name, std::function<void(const std::string&)> set,
             std::function<std::optional<std::string>()> get) {
        keys_.push_back({std::move(section), std::move(name), std::move(set), std::move(get)});
    }

    void integer(const std::string& s, const std::string& n, int& field) {
        const auto key = qualified(s, n);
        add(s, n, [&field, key](const std::string& v) { field = to_int(key, v); },
            [&field] { return std::to_string(field); });
    }

    void real(const std::string& s, const std::string& n, double& field) {
        const auto key = qualified(s, n);
        add(s, n, [&field, key](const std::string& v) { field = to_real(key, v); },
            [&field] { return format_double(field); });
    }

    void text(const std::string& s, const std::string& n, std::string& field) {
        add(s, n, [&field](const std::string& v) { field = v; }, [&field] { return field; });
    }

    template <class Model, class Field>
    void model_param(const std::string& n, Field Model::*member, const char* model_name) {
        const auto key = qualified("topology", n);
        add(
            "topology", n,
            [this, member, key, model_name](const std::string& v) {
                auto* m = std::get_if<Model>(&cfg_.topology.model);
                if (!m) throw InvalidArgument("config key '" + key + "' applies only to model = " + model_name);
                if constexpr (std::is_same_v<Field, int>) {
                    m->*member = to_int(key, v);
                } else {
                    m->*member = to_real(key, v);
                }
            },
            [this, member]() -> std::optional<std::string> {
                const auto* m = std::get_if<Model>(&cfg_.topology.model);
                if (!m) return std::nullopt;
                if constexpr (std::is_same_v<Field, int>) {
                    return std::to_string(m->*member);
                } else {
                    return format_double(m->*member);
                }
            });
    }

    void build() {
        auto& c = cfg_;
        add("global", "seed", [&c](const std::string& v) { c.seed = to_u64("global.seed", v); },
            [&c] { return std::to_string(c.seed); });

        text("topology", "graph_file", c.graph_file);
        integer("topology", "n", c.topology.n);
        add(
            "topology", "model",
            [&c](const std::string& v) {
                // Switching model resets its parameters; naming the current one keeps them.
                auto& m = c.topology.model;
                if (v == "uniform") {
                    if (!std::holds_alternative<UniformRandom>(m)) m = UniformRandom{};
                } else if (v == "preferential") {
                    if (!std::holds_alternative<Preferential>(m)) m = Preferential{};
                } else if (v == "subnet") {
                    if (!std::holds_alternative<SubnetBlocks>(m)) m = SubnetBlocks{};
                } else {
                    bad_value("topology.model", v, "one of uniform, preferential, subnet");
                }
            },
            [&c]() -> std::optional<std::string> {
                if (std::holds_alternative<UniformRandom>(c.topology.model)) return "uniform";
                if (std::holds_alternative<Preferential>(c.topology.model)) return "preferential";
                return "subnet";
            });
        model_param("p", &UniformRandom::p, "uniform");
        model_param("m", &Preferential::m, "preferential");
        model_param("k", &SubnetBlocks::k, "subnet");
        model_param("p_in", &SubnetBlocks::p_in, "subnet");
        model_param("p_out", &SubnetBlocks::p_out, "subnet");
        integer("topology", "hyperedges", c.topology.hyperedges.count);
        integer("topology", "hyperedge_min", c.topology.hyperedges.min_size);
        integer("topology", "hyperedge_max", c.topology.hyperedges.max_size);

        add(
            "epidemic", "preset",
            [&c](const std::string& v) {
                c.preset = v;
                c.epidemic = scenario_preset(v).apply(c.epidemic);
            },
            [&c] { return c.preset; });
        real("epidemic", "beta", c.epidemic.beta);
        integer("epidemic", "delitescence", c.epidemic.delitescence);
        real("epidemic", "gamma", c.epidemic.gamma);
        integer("epidemic", "horizon", c.epidemic.horizon);
        add("epidemic", "initial_infected",
            [&c](const std::string& v) { c.initial_infected = to_int_list("epidemic.initial_infected", v); },
            [&c] { return join(c.initial_infected); });

        integer("logs", "rate", c.logs.rate);
        real("logs", "mix", c.logs.mix);

        integer("embed", "dim", c.embed.dim);
        integer("embed", "window", c.embed.window);
        integer("embed", "negatives", c.embed.negatives);
        real("embed", "learning_rate", c.embed.learning_rate);
        integer("embed", "epochs", c.embed.epochs);
        integer("embed", "min_count", c.embed.min_count);

        integer("train", "hidden", c.train.hidden);
        integer("train", "embedding", c.train.embedding);
        real("train", "learning_rate", c.train.learning_rate);
        integer("train", "epochs", c.train.epochs);
        real("train", "alpha", c.train.alpha);

        integer("detect", "window", c.feature_window);

        integer("scoring", "n_rollouts", c.scoring.n_rollouts);
        real("scoring", "w_exploitability", c.scoring.weights.exploitability);
        real("scoring", "w_impact", c.scoring.weights.impact);
        real("scoring", "w_anomaly", c.scoring.weights.anomaly);

        integer("forecast", "order", c.forecast.order);
        real("forecast", "ridge", c.forecast.ridge);
        integer("forecast", "steps", c.forecast.steps);

        add(
            "plan", "method",
            [&c](const std::string& v) {
                if (v == "greedy") c.plan.method = PlanMethod::Greedy;
                else if (v == "exhaustive") c.plan.method = PlanMethod::Exhaustive;
                else bad_value("plan.method", v, "one of greedy, exhaustive");
            },
            [&c]() -> std::optional<std::string> {
                return c.plan.method == PlanMethod::Greedy ? "greedy" : "exhaustive";
            });
        integer("plan", "at_step", c.plan.at_step);
        integer("plan", "budget", c.plan.objective.budget);
        integer("plan", "horizon", c.plan.objective.horizon);
        integer("plan", "n_rollouts", c.plan.objective.n_rollouts);
        real("plan", "lambda", c.plan.objective.lambda);
        real("plan", "mu", c.plan.objective.mu);
        add(
            "plan", "protected",
            [&c](const std::string& v) {
                const auto ids = to_int_list("plan.protected", v);
                c.plan.objective.protected_vertices = {ids.begin(), ids.end()};
            },
            [&c] {
                return join({c.plan.objective.protected_vertices.begin(), c.plan.objective.protected_vertices.end()});
            });
        real("plan", "quarantine_cost", c.plan.costs.quarantine);
        real("plan", "sever_cost", c.plan.costs.sever);
        integer("plan", "quarantine_time", c.plan.costs.quarantine_time);
        integer("plan", "sever_time", c.plan.costs.sever_time);

        auto& fed = c.federate.federation;
        integer("federate", "clients", c.federate.clients);
        integer("federate", "client_vertices", c.federate.client_vertices);
        integer("federate", "rounds", fed.rounds);
        integer("federate", "clients_per_round", fed.clients_per_round);
        real("federate", "clip", fed.clip);
        real("federate", "noise", fed.noise);
        real("federate", "delta", fed.delta);
        real("federate", "epsilon_stop", fed.epsilon_stop);
        integer("federate", "local_epochs", fed.local.epochs);
        real("federate", "local_learning_rate", fed.local.learning_rate);

        integer("audit", "trials", c.audit.audit.trials);
        integer("audit", "bins", c.audit.audit.bins);
        real("audit", "delta", c.audit.audit.delta);
        real("audit", "noise", c.audit.noise);
        real("audit", "clip", c.audit.clip);
        add("audit", "epsilon", [&c](const std::string& v) { c.audit.epsilon = to_real("audit.epsilon", v); },
            [&c]() -> std::optional<std::string> {
                if (!c.audit.epsilon) return std::nullopt;
                return format_double(*c.audit.epsilon);
            });

        text("serve", "host", c.serve.host);
        integer("serve", "port", c.serve.port);
        text("serve", "snapshot_dir", c.serve.snapshot_dir);
        integer("serve", "event_queue", c.serve.event_queue);
    }

    ExperimentConfig& cfg_;
    std::vector<Key> keys_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& ini_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(ini_text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw FormatError("config line " + std::to_string(e.line()) + ": " + e.message());
    }

    ExperimentConfig cfg;
    Registry registry(cfg);
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw InvalidArgument("config key '" + section + "' is outside any section");
        for (const auto& [name, value] : body) {
            if (!registry.find(section, name)) throw InvalidArgument("unknown config key '" + qualified(section, name) + "'");
        }
    }
    // Registry order, not file order: model before its parameters and the
    // preset before explicit rates.
    for (const auto& key : registry.keys()) {
        if (auto value = tree.get_optional<std::string>(pt::ptree::path_type(key.section + "/" + key.name, '/'))) {
            key.set(*value);
        }
    }
    cfg.scoring.epidemic = cfg.epidemic;
    cfg.plan.objective.epidemic = cfg.epidemic;
    cfg.federate.federation.local.alpha = cfg.train.alpha;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    ExperimentConfig cfg = parse_config(read_text_file(path));
    // Relative graph paths are taken from the config file's directory.
    if (!cfg.graph_file.empty() && std::filesystem::path(cfg.graph_file).is_relative()) {
        cfg.graph_file = std::filesystem::absolute(path.parent_path() / cfg.graph_file).lexically_normal().string();
    }
    return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
    ExperimentConfig copy = cfg;
    Registry registry(copy);
    std::string out, section;
    for (const auto& key : registry.keys()) {
        const auto value = key.get();
        if (!value) continue;
        if (key.section != section) {
            out += (section.empty() ? "[" : "\n[") + key.section + "]\n";
            section = key.section;
        }
        out += key.name + " = " + *value + "\n";
    }
    return out;
}

}  // namespace cloudsentry
