#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cloudsentry/gnn.hpp"

namespace cloudsentry {

/// Z_1..Z_t, each n x z, one per epidemic step.
using EmbeddingTrajectory = std::vector<Eigen::MatrixXd>;

/// Shared linear autoregression z_{t+1} = sum_j C_j z_{t+1-j} + b.
struct ForecastParams {
    std::vector<Eigen::MatrixXd> coefficients;  // C_1..C_p, each z x z
    Eigen::VectorXd bias;
    double ridge = 1e-6;

    int order() const noexcept { return static_cast<int>(coefficients.size()); }
    int dim() const noexcept { return static_cast<int>(bias.size()); }
};

/// Ridge least squares pooled over every vertex and time step; the bias is
/// not penalized.
ForecastParams fit_forecaster(const std::vector<EmbeddingTrajectory>& trajectories, int order, double ridge);

/// One-step prediction from the last `order` matrices of `history`.
Eigen::MatrixXd predict_next(const ForecastParams& params, const EmbeddingTrajectory& history);

/// Z_{t+1..t+k}, feeding predictions back as history.
EmbeddingTrajectory predict(const ForecastParams& params, const EmbeddingTrajectory& history, int k);

/// Supervised-head output on each predicted embedding, clamped to [0,1].
std::vector<Eigen::VectorXd> color_forecast(const ForecastParams& params, const EmbeddingTrajectory& history,
                                            const SupervisedHead& head, int k);

/// t,vertex_id,predicted_score with t counting from `first_step`.
std::string forecast_csv(const std::vector<Eigen::VectorXd>& colors, int first_step);

}  // namespace cloudsentry
