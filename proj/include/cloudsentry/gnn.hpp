#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cloudsentry/topology.hpp"

namespace cloudsentry {

/// Weights of the two-layer GCN encoder and the one-layer attribute decoder.
///   W0: d x h, W1: h x z, W2: z x d
struct GcnParams {
    Eigen::MatrixXd w0;
    Eigen::MatrixXd w1;
    Eigen::MatrixXd w2;

    int feature_dim() const noexcept { return static_cast<int>(w0.rows()); }
    int hidden_dim() const noexcept { return static_cast<int>(w0.cols()); }
    int embedding_dim() const noexcept { return static_cast<int>(w1.cols()); }
    Eigen::Index parameter_count() const noexcept { return w0.size() + w1.size() + w2.size(); }

    /// W0, W1, W2 concatenated, each column-major.
    Eigen::VectorXd flatten() const;
    static GcnParams unflatten(const Eigen::VectorXd& flat, int d, int h, int z);

    void check_shapes() const;
    bool operator==(const GcnParams& other) const;
};

struct GcnTrainConfig {
    double alpha = 0.5;
    double learning_rate = 1e-3;
    int epochs = 200;
    int hidden = 16;
    int embedding = 8;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Xavier-uniform: U(-s, s), s = sqrt(6 / (fan_in + fan_out)).
GcnParams init_params(int feature_dim, const GcnTrainConfig& config);

/// Dense inputs of one training problem.
struct GraphData {
    Eigen::MatrixXd adjacency;   // A
    Eigen::MatrixXd normalized;  // D^-1/2 (A+I) D^-1/2
    Eigen::MatrixXd features;    // R, n x d

    static GraphData from(const CloudGraph& g, Eigen::MatrixXd features);
    int size() const noexcept { return static_cast<int>(adjacency.rows()); }
};

struct Forward {
    Eigen::MatrixXd pre;      // A~ R W0
    Eigen::MatrixXd hidden;   // relu(pre)
    Eigen::MatrixXd z;        // A~ H W1
    Eigen::MatrixXd a_hat;    // sigmoid(Z Z^T)
    Eigen::MatrixXd r_hat;    // A~ Z W2
};

Forward forward(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& features, const GcnParams& params);

Eigen::MatrixXd encode(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& features, const GcnParams& params);
Eigen::MatrixXd decode_structure(const Eigen::MatrixXd& z);
Eigen::MatrixXd decode_attributes(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& z,
                                  const GcnParams& params);

/// (1-alpha) ||A - A^||_F^2 + alpha ||R - R^||_F^2, diagonal of A - A^ excluded.
double reconstruction_loss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& r,
                           const Eigen::MatrixXd& r_hat, double alpha);

/// (1-alpha) ||a_i - a^_i||_2 + alpha ||x_i - x^_i||_2, diagonal excluded.
Eigen::VectorXd anomaly_scores(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& r,
                               const Eigen::MatrixXd& r_hat, double alpha);

struct LossGradient {
    double loss = 0.0;
    GcnParams grad;
};

/// Loss and its analytic gradient with respect to every weight.
LossGradient loss_gradient(const GraphData& data, const GcnParams& params, double alpha);

struct TrainResult {
    GcnParams params;
    std::vector<double> loss_log;  // loss before each epoch's update
    double final_loss = 0.0;
};

/// Full-batch gradient descent from `start`. Stateless across calls, so
/// resuming from a result is the same as training longer.
TrainResult train_from(const GraphData& data, GcnParams start, double alpha, double learning_rate, int epochs);
TrainResult train(const CloudGraph& g, const Eigen::MatrixXd& features, const GcnTrainConfig& config);

struct AnomalyRanking {
    std::vector<VertexId> order;  // most anomalous first, ties by id
    Eigen::VectorXd normalized;   // (s - min) / (max - min), all 0 when constant
};

AnomalyRanking rank_anomalies(const Eigen::VectorXd& scores);
std::string heatmap_csv(const AnomalyRanking& ranking);

/// Probability a random positive outscores a random negative (ties count 1/2).
double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

enum class HeadTask { InfectedIndicator, ScoreRegression };

struct SupervisedHead {
    HeadTask task = HeadTask::InfectedIndicator;
    Eigen::VectorXd weights;
    double bias = 0.0;
    bool degenerate = false;  // indicator labels were all one class

    int input_dim() const noexcept { return static_cast<int>(weights.size()); }
};

/// Logistic head (ridge-regularized Newton) or least-squares head (ridge 1e-8).
SupervisedHead fit_supervised(const Eigen::MatrixXd& z, const Eigen::VectorXd& labels, HeadTask task);
/// Probabilities in (0,1) for the indicator task, raw values for regression.
Eigen::VectorXd predict(const SupervisedHead& head, const Eigen::MatrixXd& z);

std::string format_params(const GcnParams& params);
GcnParams parse_params(const std::string& text);
void save_params(const GcnParams& params, const std::filesystem::path& path);
GcnParams load_params(const std::filesystem::path& path);

}  // namespace cloudsentry
