#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cloudsentry/gnn.hpp"

namespace cloudsentry {

struct LocalTrainConfig {
    int epochs = 1;
    double learning_rate = 1e-3;
    double alpha = 0.5;
};

/// A parameter delta carried as an unevaluated sum hi + lo, where lo holds
/// the rounding error of hi. Adding both parts back onto the base model
/// reproduces the client's model bit for bit.
struct ClientUpdate {
    int client_id = 0;
    int round = 0;
    Eigen::VectorXd hi;
    Eigen::VectorXd lo;
    double loss = 0.0;   // loss of the received model on local data
    bool empty = false;  // client had no data; delta is zero

    double norm() const { return hi.norm(); }
};

/// One participant. Its graph and features stay inside the object; only
/// ClientUpdate values leave it.
class CloudClient {
public:
    CloudClient(int id, std::optional<GraphData> data, LocalTrainConfig config);

    int id() const noexcept { return id_; }
    bool has_data() const noexcept { return data_.has_value(); }
    ClientUpdate local_update(const GcnParams& model, int round) const;

private:
    int id_;
    std::optional<GraphData> data_;
    LocalTrainConfig config_;
};

/// delta / max(1, ||delta|| / S).
Eigen::VectorXd clip_update(const Eigen::VectorXd& delta, double clip);
ClientUpdate clip_update(ClientUpdate update, double clip);

/// model + (sum of updates + N(0, z^2 S^2 I)) / m, summed in ascending client id.
GcnParams aggregate(const GcnParams& model, std::vector<ClientUpdate> updates, double noise, double clip,
                    std::mt19937_64& rng);

/// (hi, lo) with hi + lo == b - a exactly.
void exact_difference(const Eigen::VectorXd& b, const Eigen::VectorXd& a, Eigen::VectorXd& hi, Eigen::VectorXd& lo);
/// a + (hi + lo), rounded once where the exact result is representable.
Eigen::VectorXd compensated_add(const Eigen::VectorXd& a, const Eigen::VectorXd& hi, const Eigen::VectorXd& lo);

/// Concentrated-DP composition: rho grows by 1/(2 z^2) per round and
/// epsilon = rho + 2 sqrt(rho ln(1/delta)). z = 0 makes both infinite.
struct PrivacyLedger {
    int rounds = 0;
    double rho = 0.0;
    double epsilon = 0.0;

    bool unbounded() const noexcept { return !std::isfinite(epsilon); }
};

double epsilon_from_rho(double rho, double delta);
PrivacyLedger account_privacy(PrivacyLedger ledger, double noise, double delta);

struct FederationConfig {
    int rounds = 10;
    int clients_per_round = 0;  // 0 means every client
    double clip = 1.0;          // +inf disables clipping
    double noise = 1.0;         // noise multiplier z
    double delta = 1e-5;
    double epsilon_stop = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;
    LocalTrainConfig local;

    void validate(int n_clients) const;
};

struct RoundRecord {
    int round = 0;
    int m = 0;
    double epsilon = 0.0;
    double rho = 0.0;
    double mean_update_norm = 0.0;
    double loss_global = 0.0;
    std::vector<int> participants;
};

/// One server <-> client message, as seen on the wire.
struct MessageRecord {
    int round = 0;
    std::string direction;  // "server->client" or "client->server"
    int client = 0;
    std::string type;       // "model", "update", "stop"
    std::vector<std::string> fields;
    std::size_t bytes = 0;
};

struct FederationResult {
    GcnParams model;
    PrivacyLedger ledger;
    std::vector<RoundRecord> rounds;
    std::vector<GcnParams> trajectory;  // model after each round
    std::vector<MessageRecord> trace;
    bool stopped_early = false;
};

/// Runs the round loop with every client on its own thread. Client sampling
/// and noise are seeded from cfg.seed.
FederationResult run_federation(std::vector<CloudClient> clients, const GcnParams& initial,
                                const FederationConfig& cfg);

/// round,m,epsilon,rho,mean_update_norm,loss_global
std::string round_log_csv(const std::vector<RoundRecord>& rounds);
/// round,direction,client,type,fields,bytes
std::string message_trace_csv(const std::vector<MessageRecord>& trace);

struct DpAuditConfig {
    double epsilon = 1.0;
    double delta = 1e-5;
    int trials = 10000;
    int bins = 20;
    std::uint64_t seed = 1;
};

struct DpAuditResult {
    bool passed = true;
    double worst_excess = -std::numeric_limits<double>::infinity();  // max over bins of lhs - rhs
    int worst_bin = -1;
};

/// Draws `trials` scalar outputs from each mechanism (called with a trial
/// seed) and checks P[M(d) in B] <= e^eps P[M(d') in B] + delta + slack in
/// both directions over equal-width bins spanning the pooled sample, with
/// slack = 3 (se_1 + e^eps se_2) and add-one smoothed standard errors.
DpAuditResult empirical_dp_audit(const std::function<double(std::uint64_t)>& mechanism_d,
                                 const std::function<double(std::uint64_t)>& mechanism_d_prime,
                                 const DpAuditConfig& config);

/// Audit of one aggregation round: d = {client}, d' = {client without data}.
/// The output is the aggregate projected onto the direction of the client's
/// clipped update.
DpAuditResult audit_aggregation(const CloudClient& client, const GcnParams& model, double noise, double clip,
                                const DpAuditConfig& config);

}  // namespace cloudsentry
