#include "cloudsentry/forecast.hpp"

#include <algorithm>

#include "cloudsentry/error.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

namespace {

void check_trajectory(const EmbeddingTrajectory& traj, Eigen::Index n, Eigen::Index z) {
    for (const auto& m : traj) {
        if (m.rows() != n || m.cols() != z) {
            throw InvalidArgument("embedding trajectory changes shape: " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + " vs " + std::to_string(n) + "x" + std::to_string(z));
        }
    }
}

}  // namespace

ForecastParams fit_forecaster(const std::vector<EmbeddingTrajectory>& trajectories, int order, double ridge) {
    if (order < 1) throw InvalidArgument("forecast order must be >= 1");
    if (!(ridge > 0.0)) throw InvalidArgument("forecast ridge must be > 0");
    if (trajectories.empty() || trajectories.front().empty()) throw InvalidArgument("no trajectories to fit");
    const Eigen::Index z = trajectories.front().front().cols();

    Eigen::Index rows = 0;
    for (const auto& traj : trajectories) {
        if (traj.size() < static_cast<std::size_t>(order) + 1) {
            throw InvalidArgument("trajectory of length " + std::to_string(traj.size()) + " is too short for order " +
                                  std::to_string(order));
        }
        check_trajectory(traj, traj.front().rows(), z);
        rows += traj.front().rows() * static_cast<Eigen::Index>(traj.size() - static_cast<std::size_t>(order));
    }

    // Design row: [z_t, z_{t-1}, ..., z_{t-p+1}, 1]; target z_{t+1}.
    const Eigen::Index width = order * z + 1;
    Eigen::MatrixXd x(rows, width);
    Eigen::MatrixXd y(rows, z);
    Eigen::Index r = 0;
    for (const auto& traj : trajectories) {
        const Eigen::Index n = traj.front().rows();
        for (std::size_t t = static_cast<std::size_t>(order) - 1; t + 1 < traj.size(); ++t) {
            for (int j = 0; j < order; ++j) x.block(r, j * z, n, z) = traj[t - static_cast<std::size_t>(j)];
            x.block(r, order * z, n, 1).setOnes();
            y.middleRows(r, n) = traj[t + 1];
            r += n;
        }
    }

    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().head(order * z).array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    const Eigen::MatrixXd w = solver.solve(x.transpose() * y);
    if (solver.info() != Eigen::Success || !w.allFinite()) throw NumericError("forecast normal equations are singular");

    ForecastParams params;
    params.ridge = ridge;
    for (int j = 0; j < order; ++j) params.coefficients.push_back(w.middleRows(j * z, z).transpose());
    params.bias = w.row(order * z).transpose();
    return params;
}

Eigen::MatrixXd predict_next(const ForecastParams& params, const EmbeddingTrajectory& history) {
    const int p = params.order();
    if (p < 1) throw InvalidArgument("forecaster has no coefficients");
    if (history.size() < static_cast<std::size_t>(p)) {
        throw InvalidArgument("history of length " + std::to_string(history.size()) + " is shorter than order " +
                              std::to_string(p));
    }
    const auto& last = history.back();
    if (last.cols() != params.dim()) {
        throw InvalidArgument("embedding dimension " + std::to_string(last.cols()) + " does not match forecaster " +
                              std::to_string(params.dim()));
    }
    check_trajectory(history, last.rows(), last.cols());
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(last.rows(), last.cols());
    for (int j = 0; j < p; ++j) {
        next.noalias() += history[history.size() - 1 - static_cast<std::size_t>(j)] * params.coefficients[static_cast<std::size_t>(j)].transpose();
    }
    next.rowwise() += params.bias.transpose();
    return next;
}

EmbeddingTrajectory predict(const ForecastParams& params, const EmbeddingTrajectory& history, int k) {
    if (k < 0) throw InvalidArgument("forecast length must be >= 0");
    EmbeddingTrajectory window = history;
    EmbeddingTrajectory out;
    for (int step = 0; step < k; ++step) {
        out.push_back(predict_next(params, window));
        window.push_back(out.back());
    }
    return out;
}

std::vector<Eigen::VectorXd> color_forecast(const ForecastParams& params, const EmbeddingTrajectory& history,
                                            const SupervisedHead& head, int k) {
    if (head.input_dim() != params.dim()) {
        throw InvalidArgument("score head expects dimension " + std::to_string(head.input_dim()) + ", forecaster gives " +
                              std::to_string(params.dim()));
    }
    std::vector<Eigen::VectorXd> colors;
    for (const auto& z : predict(params, history, k)) {
        colors.push_back(cloudsentry::predict(head, z).cwiseMax(0.0).cwiseMin(1.0));
    }
    return colors;
}

std::string forecast_csv(const std::vector<Eigen::VectorXd>& colors, int first_step) {
    std::string out = "t,vertex_id,predicted_score\n";
    for (std::size_t k = 0; k < colors.size(); ++k) {
        for (Eigen::Index v = 0; v < colors[k].size(); ++v) {
            out += std::to_string(first_step + static_cast<int>(k)) + "," + std::to_string(v) + "," +
                   format_double(colors[k](v)) + "\n";
        }
    }
    return out;
}

}  // namespace cloudsentry
