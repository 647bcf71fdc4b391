#include "cloudsentry/federated.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <variant>

#include "cloudsentry/error.hpp"
#include "cloudsentry/seeding.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

namespace {

// Unbounded MPSC queue between the server and the client actors.
template <typename T>
class Channel {
public:
    void send(T value) {
        {
            std::lock_guard lock(mutex_);
            queue_.push_back(std::move(value));
        }
        ready_.notify_one();
    }

    T receive() {
        std::unique_lock lock(mutex_);
        ready_.wait(lock, [&] { return !queue_.empty(); });
        T value = std::move(queue_.front());
        queue_.pop_front();
        return value;
    }

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<T> queue_;
};

struct ModelMessage {
    int round = 0;
    GcnParams model;
};
struct StopMessage {};
using ServerMessage = std::variant<ModelMessage, StopMessage>;

struct ClientReply {
    int client_id = 0;
    std::optional<ClientUpdate> update;
    std::exception_ptr error;
};

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
}

void check_compatible(const GcnParams& model, const GraphData& data) {
    if (model.feature_dim() != data.features.cols()) {
        throw InvalidArgument("model expects " + std::to_string(model.feature_dim()) + " features, client has " +
                              std::to_string(data.features.cols()));
    }
}

}  // namespace

CloudClient::CloudClient(int id, std::optional<GraphData> data, LocalTrainConfig config)
    : id_(id), data_(std::move(data)), config_(config) {
    if (config_.epochs < 0) throw InvalidArgument("local epochs must be >= 0");
    if (data_ && data_->size() == 0) data_.reset();
}

ClientUpdate CloudClient::local_update(const GcnParams& model, int round) const {
    model.check_shapes();
    ClientUpdate out;
    out.client_id = id_;
    out.round = round;
    const Eigen::VectorXd base = model.flatten();
    if (!data_) {
        out.hi = Eigen::VectorXd::Zero(base.size());
        out.lo = Eigen::VectorXd::Zero(base.size());
        out.empty = true;
        return out;
    }
    check_compatible(model, *data_);
    const auto result = train_from(*data_, model, config_.alpha, config_.learning_rate, config_.epochs);
    out.loss = result.loss_log.empty() ? loss_gradient(*data_, model, config_.alpha).loss : result.loss_log.front();
    exact_difference(result.params.flatten(), base, out.hi, out.lo);
    return out;
}

void exact_difference(const Eigen::VectorXd& b, const Eigen::VectorXd& a, Eigen::VectorXd& hi, Eigen::VectorXd& lo) {
    if (a.size() != b.size()) throw InvalidArgument("parameter vectors differ in length");
    hi.resize(a.size());
    lo.resize(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) two_sum(b(k), -a(k), hi(k), lo(k));
}

Eigen::VectorXd compensated_add(const Eigen::VectorXd& a, const Eigen::VectorXd& hi, const Eigen::VectorXd& lo) {
    if (a.size() != hi.size() || a.size() != lo.size()) throw InvalidArgument("parameter vectors differ in length");
    Eigen::VectorXd out(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        double s, e;
        two_sum(a(k), hi(k), s, e);
        out(k) = s + (e + lo(k));
    }
    return out;
}

Eigen::VectorXd clip_update(const Eigen::VectorXd& delta, double clip) {
    if (!(clip > 0.0)) throw InvalidArgument("clip bound must be > 0");
    const double factor = std::max(1.0, delta.norm() / clip);
    return factor > 1.0 ? Eigen::VectorXd(delta / factor) : delta;
}

ClientUpdate clip_update(ClientUpdate update, double clip) {
    if (!(clip > 0.0)) throw InvalidArgument("clip bound must be > 0");
    const double factor = std::max(1.0, update.hi.norm() / clip);
    if (factor > 1.0) {
        update.hi /= factor;
        update.lo /= factor;
    }
    return update;
}

GcnParams aggregate(const GcnParams& model, std::vector<ClientUpdate> updates, double noise, double clip,
                    std::mt19937_64& rng) {
    if (updates.empty()) throw InvalidArgument("aggregate needs at least one update");
    if (noise < 0.0) throw InvalidArgument("noise multiplier must be >= 0");
    const Eigen::VectorXd base = model.flatten();
    std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
    for (const auto& u : updates) {
        if (u.hi.size() != base.size() || u.lo.size() != base.size()) {
            throw InvalidArgument("update from client " + std::to_string(u.client_id) + " has " +
                                  std::to_string(u.hi.size()) + " parameters, model has " + std::to_string(base.size()));
        }
    }

    // Start from the first update rather than zero so a lone update passes
    // through untouched (0 + -0 would flip the sign of zero).
    Eigen::VectorXd hi = updates.front().hi;
    Eigen::VectorXd lo = updates.front().lo;
    for (std::size_t k = 1; k < updates.size(); ++k) {
        hi += updates[k].hi;
        lo += updates[k].lo;
    }
    if (noise > 0.0) {
        if (!std::isfinite(clip)) throw InvalidArgument("noise requires a finite clip bound");
        std::normal_distribution<double> gauss(0.0, noise * clip);
        for (Eigen::Index k = 0; k < hi.size(); ++k) hi(k) += gauss(rng);
    }
    if (updates.size() > 1) {
        const double m = static_cast<double>(updates.size());
        hi /= m;
        lo /= m;
    }
    return GcnParams::unflatten(compensated_add(base, hi, lo), model.feature_dim(), model.hidden_dim(),
                                model.embedding_dim());
}

double epsilon_from_rho(double rho, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    if (!std::isfinite(rho)) return std::numeric_limits<double>::infinity();
    return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

PrivacyLedger account_privacy(PrivacyLedger ledger, double noise, double delta) {
    if (noise < 0.0) throw InvalidArgument("noise multiplier must be >= 0");
    ledger.rounds += 1;
    ledger.rho += noise == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (2.0 * noise * noise);
    ledger.epsilon = epsilon_from_rho(ledger.rho, delta);
    return ledger;
}

void FederationConfig::validate(int n_clients) const {
    if (n_clients < 1) throw InvalidArgument("federation needs at least one client");
    if (rounds < 0) throw InvalidArgument("rounds must be >= 0");
    if (clients_per_round < 0 || clients_per_round > n_clients) {
        throw InvalidArgument("clients_per_round must lie in [0, " + std::to_string(n_clients) + "]");
    }
    if (!(clip > 0.0)) throw InvalidArgument("clip bound must be > 0");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise multiplier must be finite and >= 0");
    if (noise > 0.0 && !std::isfinite(clip)) throw InvalidArgument("noise requires a finite clip bound");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    if (local.epochs < 0) throw InvalidArgument("local epochs must be >= 0");
}

FederationResult run_federation(std::vector<CloudClient> clients, const GcnParams& initial,
                                const FederationConfig& cfg) {
    const int n = static_cast<int>(clients.size());
    cfg.validate(n);
    initial.check_shapes();
    std::sort(clients.begin(), clients.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
    for (int k = 1; k < n; ++k) {
        if (clients[static_cast<std::size_t>(k)].id() == clients[static_cast<std::size_t>(k - 1)].id()) {
            throw InvalidArgument("duplicate client id " + std::to_string(clients[static_cast<std::size_t>(k)].id()));
        }
    }
    const int m = cfg.clients_per_round == 0 ? n : cfg.clients_per_round;
    const auto params_bytes = static_cast<std::size_t>(initial.parameter_count()) * sizeof(double);

    std::vector<Channel<ServerMessage>> inbox(static_cast<std::size_t>(n));
    Channel<ClientReply> replies;
    std::vector<std::thread> actors;
    for (int k = 0; k < n; ++k) {
        actors.emplace_back([&, k] {
            const CloudClient& client = clients[static_cast<std::size_t>(k)];
            for (;;) {
                auto message = inbox[static_cast<std::size_t>(k)].receive();
                if (std::holds_alternative<StopMessage>(message)) return;
                const auto& request = std::get<ModelMessage>(message);
                ClientReply reply{client.id(), std::nullopt, nullptr};
                try {
                    reply.update = client.local_update(request.model, request.round);
                } catch (...) {
                    reply.error = std::current_exception();
                }
                replies.send(std::move(reply));
            }
        });
    }

    FederationResult result;
    result.model = initial;
    auto shutdown = [&] {
        for (int k = 0; k < n; ++k) {
            inbox[static_cast<std::size_t>(k)].send(StopMessage{});
            result.trace.push_back({result.ledger.rounds, "server->client", clients[static_cast<std::size_t>(k)].id(),
                                    "stop", {}, 0});
        }
        for (auto& t : actors) t.join();
    };

    try {
        std::mt19937_64 sampler(derive_seed(cfg.seed, "sampling"));
        std::mt19937_64 noise_rng(derive_seed(cfg.seed, "noise"));
        std::vector<int> slots(static_cast<std::size_t>(n));
        for (int round = 1; round <= cfg.rounds; ++round) {
            for (int k = 0; k < n; ++k) slots[static_cast<std::size_t>(k)] = k;
            if (m < n) std::shuffle(slots.begin(), slots.end(), sampler);
            std::vector<int> chosen(slots.begin(), slots.begin() + m);
            std::sort(chosen.begin(), chosen.end());

            for (int k : chosen) {
                inbox[static_cast<std::size_t>(k)].send(ModelMessage{round, result.model});
                result.trace.push_back({round, "server->client", clients[static_cast<std::size_t>(k)].id(), "model",
                                        {"round", "model"}, params_bytes + sizeof(int)});
            }

            // Barrier: wait for every sampled client.
            std::vector<ClientUpdate> updates;
            std::exception_ptr failure;
            for (int r = 0; r < m; ++r) {
                auto reply = replies.receive();
                if (reply.error) {
                    if (!failure) failure = reply.error;
                    continue;
                }
                updates.push_back(std::move(*reply.update));
            }
            if (failure) std::rethrow_exception(failure);
            std::sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
            for (const auto& u : updates) {
                result.trace.push_back({round, "client->server", u.client_id, "update",
                                        {"client", "round", "delta_hi", "delta_lo", "loss", "empty"},
                                        2 * params_bytes + sizeof(double) + 2 * sizeof(int) + 1});
            }

            RoundRecord record;
            record.round = round;
            record.m = m;
            double norm_sum = 0.0, loss_sum = 0.0;
            int with_data = 0;
            for (auto& u : updates) {
                record.participants.push_back(u.client_id);
                if (std::isfinite(cfg.clip)) u = clip_update(std::move(u), cfg.clip);
                norm_sum += u.norm();
                if (!u.empty) {
                    loss_sum += u.loss;
                    ++with_data;
                }
            }
            record.mean_update_norm = norm_sum / m;
            record.loss_global = with_data > 0 ? loss_sum / with_data : 0.0;

            result.model = aggregate(result.model, std::move(updates), cfg.noise, cfg.clip, noise_rng);
            result.trajectory.push_back(result.model);
            result.ledger = account_privacy(result.ledger, cfg.noise, cfg.delta);
            record.epsilon = result.ledger.epsilon;
            record.rho = result.ledger.rho;
            result.rounds.push_back(std::move(record));

            if (result.ledger.epsilon > cfg.epsilon_stop) {
                result.stopped_early = round < cfg.rounds;
                break;
            }
        }
    } catch (...) {
        shutdown();
        throw;
    }
    shutdown();
    return result;
}

std::string round_log_csv(const std::vector<RoundRecord>& rounds) {
    std::string out = "round,m,epsilon,rho,mean_update_norm,loss_global\n";
    for (const auto& r : rounds) {
        out += std::to_string(r.round) + "," + std::to_string(r.m) + "," + format_double(r.epsilon) + "," +
               format_double(r.rho) + "," + format_double(r.mean_update_norm) + "," + format_double(r.loss_global) + "\n";
    }
    return out;
}

std::string message_trace_csv(const std::vector<MessageRecord>& trace) {
    std::string out = "round,direction,client,type,fields,bytes\n";
    for (const auto& r : trace) {
        std::string fields;
        for (const auto& f : r.fields) fields += (fields.empty() ? "" : ";") + f;
        out += std::to_string(r.round) + "," + r.direction + "," + std::to_string(r.client) + "," + r.type + "," +
               fields + "," + std::to_string(r.bytes) + "\n";
    }
    return out;
}

DpAuditResult empirical_dp_audit(const std::function<double(std::uint64_t)>& mechanism_d,
                                 const std::function<double(std::uint64_t)>& mechanism_d_prime,
                                 const DpAuditConfig& config) {
    if (config.trials < 1 || config.bins < 1) throw InvalidArgument("audit needs trials >= 1 and bins >= 1");
    if (!(config.epsilon >= 0.0) || !(config.delta >= 0.0)) throw InvalidArgument("audit epsilon and delta must be >= 0");
    const auto trials = static_cast<std::size_t>(config.trials);
    std::vector<double> a(trials), b(trials);
    const std::uint64_t seed_a = derive_seed(config.seed, "audit-d");
    const std::uint64_t seed_b = derive_seed(config.seed, "audit-d-prime");
    for (std::size_t k = 0; k < trials; ++k) {
        a[k] = mechanism_d(derive_seed(seed_a, k));
        b[k] = mechanism_d_prime(derive_seed(seed_b, k));
    }
    double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    const double width = hi > lo ? (hi - lo) / config.bins : 1.0;
    auto histogram = [&](const std::vector<double>& xs) {
        std::vector<double> h(static_cast<std::size_t>(config.bins), 0.0);
        for (double x : xs) {
            const auto bin = std::clamp(static_cast<int>((x - lo) / width), 0, config.bins - 1);
            h[static_cast<std::size_t>(bin)] += 1.0;
        }
        for (double& c : h) c /= static_cast<double>(trials);
        return h;
    };
    const auto pa = histogram(a), pb = histogram(b);

    const double e_eps = std::exp(config.epsilon);
    // Add-one smoothed proportion so that empty tail bins keep a nonzero error.
    const double n = static_cast<double>(trials);
    auto se = [&](double p) {
        const double q = (p * n + 1.0) / (n + 2.0);
        return std::sqrt(q * (1.0 - q) / n);
    };
    DpAuditResult result;
    for (int bin = 0; bin < config.bins; ++bin) {
        const double p1 = pa[static_cast<std::size_t>(bin)], p2 = pb[static_cast<std::size_t>(bin)];
        for (const auto& [x, y] : {std::pair{p1, p2}, std::pair{p2, p1}}) {
            const double slack = 3.0 * (se(x) + e_eps * se(y));
            const double excess = x - (e_eps * y + config.delta + slack);
            if (excess > result.worst_excess) {
                result.worst_excess = excess;
                result.worst_bin = bin;
            }
        }
    }
    result.passed = result.worst_excess <= 0.0;
    return result;
}

DpAuditResult audit_aggregation(const CloudClient& client, const GcnParams& model, double noise, double clip,
                                const DpAuditConfig& config) {
    const CloudClient absent(client.id(), std::nullopt, {});
    const auto present_update = clip_update(client.local_update(model, 1), clip);
    const auto absent_update = absent.local_update(model, 1);

    Eigen::VectorXd direction = present_update.hi;
    if (direction.norm() == 0.0) {
        direction = Eigen::VectorXd::Zero(direction.size());
        direction(0) = 1.0;
    } else {
        direction.normalize();
    }
    const Eigen::VectorXd base = model.flatten();
    auto mechanism = [&](const ClientUpdate& update) {
        return [&, update](std::uint64_t trial_seed) {
            std::mt19937_64 rng(trial_seed);
            const auto next = aggregate(model, {update}, noise, clip, rng);
            return (next.flatten() - base).dot(direction);
        };
    };
    return empirical_dp_audit(mechanism(present_update), mechanism(absent_update), config);
}

}  // namespace cloudsentry
