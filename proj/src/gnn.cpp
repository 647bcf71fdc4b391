#include "cloudsentry/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cloudsentry/error.hpp"
#include "cloudsentry/textio.hpp"

namespace cloudsentry {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("shape mismatch: " + what);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return x.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Eigen::MatrixXd off_diagonal(Eigen::MatrixXd m) {
    m.diagonal().setZero();
    return m;
}

}  // namespace

Eigen::VectorXd GcnParams::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    flat << Eigen::Map<const Eigen::VectorXd>(w0.data(), w0.size()),
        Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size()), Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
    return flat;
}

GcnParams GcnParams::unflatten(const Eigen::VectorXd& flat, int d, int h, int z) {
    const Eigen::Index expected = static_cast<Eigen::Index>(d) * h + static_cast<Eigen::Index>(h) * z +
                                  static_cast<Eigen::Index>(z) * d;
    require(flat.size() == expected, "flat parameter vector has " + std::to_string(flat.size()) +
                                         " entries, expected " + std::to_string(expected));
    GcnParams p;
    Eigen::Index off = 0;
    p.w0 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, d, h);
    off += p.w0.size();
    p.w1 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, h, z);
    off += p.w1.size();
    p.w2 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, z, d);
    return p;
}

void GcnParams::check_shapes() const {
    require(w0.cols() == w1.rows(), "W0 " + shape(w0) + " vs W1 " + shape(w1));
    require(w1.cols() == w2.rows(), "W1 " + shape(w1) + " vs W2 " + shape(w2));
    require(w2.cols() == w0.rows(), "W2 " + shape(w2) + " vs W0 " + shape(w0));
}

bool GcnParams::operator==(const GcnParams& other) const {
    auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(w0, other.w0) && same(w1, other.w1) && same(w2, other.w2);
}

void GcnTrainConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must be in [0,1]");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    if (hidden < 1 || embedding < 1) throw InvalidArgument("hidden and embedding sizes must be positive");
}

GcnParams init_params(int feature_dim, const GcnTrainConfig& config) {
    config.validate();
    if (feature_dim < 1) throw InvalidArgument("feature dimension must be positive");
    std::mt19937_64 rng(config.seed);
    auto xavier = [&](int fan_in, int fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-s, s);
        Eigen::MatrixXd m(fan_in, fan_out);
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
        return m;
    };
    GcnParams p;
    p.w0 = xavier(feature_dim, config.hidden);
    p.w1 = xavier(config.hidden, config.embedding);
    p.w2 = xavier(config.embedding, feature_dim);
    return p;
}

GraphData GraphData::from(const CloudGraph& g, Eigen::MatrixXd features) {
    require(features.rows() == g.size(), "feature matrix has " + std::to_string(features.rows()) +
                                             " rows for " + std::to_string(g.size()) + " vertices");
    return GraphData{g.adjacency_matrix(), normalized_adjacency(g), std::move(features)};
}

Forward forward(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& features, const GcnParams& params) {
    params.check_shapes();
    require(normalized.rows() == normalized.cols(), "normalized adjacency " + shape(normalized) + " is not square");
    require(features.rows() == normalized.rows(), "features " + shape(features) + " vs adjacency " + shape(normalized));
    require(features.cols() == params.w0.rows(), "features " + shape(features) + " vs W0 " + shape(params.w0));
    Forward f;
    f.pre = normalized * features * params.w0;
    f.hidden = f.pre.cwiseMax(0.0);
    f.z = normalized * f.hidden * params.w1;
    f.a_hat = decode_structure(f.z);
    f.r_hat = normalized * f.z * params.w2;
    return f;
}

Eigen::MatrixXd encode(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& features, const GcnParams& params) {
    params.check_shapes();
    require(features.rows() == normalized.rows(), "features " + shape(features) + " vs adjacency " + shape(normalized));
    require(features.cols() == params.w0.rows(), "features " + shape(features) + " vs W0 " + shape(params.w0));
    const Eigen::MatrixXd hidden = (normalized * features * params.w0).cwiseMax(0.0);
    return normalized * hidden * params.w1;
}

Eigen::MatrixXd decode_structure(const Eigen::MatrixXd& z) {
    return sigmoid(z * z.transpose());
}

Eigen::MatrixXd decode_attributes(const Eigen::MatrixXd& normalized, const Eigen::MatrixXd& z,
                                  const GcnParams& params) {
    require(z.rows() == normalized.rows(), "Z " + shape(z) + " vs adjacency " + shape(normalized));
    require(z.cols() == params.w2.rows(), "Z " + shape(z) + " vs W2 " + shape(params.w2));
    return normalized * z * params.w2;
}

double reconstruction_loss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& r,
                           const Eigen::MatrixXd& r_hat, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must be in [0,1]");
    require(a.rows() == a_hat.rows() && a.cols() == a_hat.cols(), "A " + shape(a) + " vs A^ " + shape(a_hat));
    require(r.rows() == r_hat.rows() && r.cols() == r_hat.cols(), "R " + shape(r) + " vs R^ " + shape(r_hat));
    return (1.0 - alpha) * off_diagonal(a - a_hat).squaredNorm() + alpha * (r - r_hat).squaredNorm();
}

Eigen::VectorXd anomaly_scores(const Eigen::MatrixXd& a, const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& r,
                               const Eigen::MatrixXd& r_hat, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must be in [0,1]");
    require(a.rows() == a_hat.rows() && a.cols() == a_hat.cols(), "A " + shape(a) + " vs A^ " + shape(a_hat));
    require(r.rows() == r_hat.rows() && r.cols() == r_hat.cols(), "R " + shape(r) + " vs R^ " + shape(r_hat));
    require(a.rows() == r.rows(), "A " + shape(a) + " vs R " + shape(r));
    const Eigen::VectorXd structure = off_diagonal(a - a_hat).rowwise().norm();
    const Eigen::VectorXd attributes = (r - r_hat).rowwise().norm();
    return (1.0 - alpha) * structure + alpha * attributes;
}

LossGradient loss_gradient(const GraphData& data, const GcnParams& params, double alpha) {
    const Forward f = forward(data.normalized, data.features, params);
    const Eigen::MatrixXd& an = data.normalized;

    LossGradient out;
    out.loss = reconstruction_loss(data.adjacency, f.a_hat, data.features, f.r_hat, alpha);

    // Structure branch: A^ = sigmoid(S), S = Z Z^T.
    const Eigen::MatrixXd g_ahat = -2.0 * (1.0 - alpha) * off_diagonal(data.adjacency - f.a_hat);
    const Eigen::MatrixXd g_s = g_ahat.cwiseProduct(f.a_hat.cwiseProduct((1.0 - f.a_hat.array()).matrix()));
    Eigen::MatrixXd g_z = (g_s + g_s.transpose()) * f.z;

    // Attribute branch: R^ = A~ Z W2 (A~ symmetric).
    const Eigen::MatrixXd g_rhat = -2.0 * alpha * (data.features - f.r_hat);
    const Eigen::MatrixXd az = an * f.z;
    out.grad.w2 = az.transpose() * g_rhat;
    g_z += an * g_rhat * params.w2.transpose();

    // Encoder: Z = A~ H W1, H = relu(P), P = A~ R W0.
    out.grad.w1 = (an * f.hidden).transpose() * g_z;
    const Eigen::MatrixXd g_hidden = an * g_z * params.w1.transpose();
    const Eigen::MatrixXd g_pre = g_hidden.cwiseProduct((f.pre.array() > 0.0).cast<double>().matrix());
    out.grad.w0 = (an * data.features).transpose() * g_pre;
    return out;
}

TrainResult train_from(const GraphData& data, GcnParams start, double alpha, double learning_rate, int epochs) {
    if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
    TrainResult out{std::move(start), {}, 0.0};
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto lg = loss_gradient(data, out.params, alpha);
        if (!std::isfinite(lg.loss)) {
            throw NumericError("GCN training diverged at epoch " + std::to_string(epoch + 1) +
                               " (learning rate " + format_double(learning_rate) + ")");
        }
        out.loss_log.push_back(lg.loss);
        out.params.w0 -= learning_rate * lg.grad.w0;
        out.params.w1 -= learning_rate * lg.grad.w1;
        out.params.w2 -= learning_rate * lg.grad.w2;
    }
    const Forward f = forward(data.normalized, data.features, out.params);
    out.final_loss = reconstruction_loss(data.adjacency, f.a_hat, data.features, f.r_hat, alpha);
    if (!std::isfinite(out.final_loss)) {
        throw NumericError("GCN training diverged after epoch " + std::to_string(epochs) + " (learning rate " +
                           format_double(learning_rate) + ")");
    }
    return out;
}

TrainResult train(const CloudGraph& g, const Eigen::MatrixXd& features, const GcnTrainConfig& config) {
    config.validate();
    const auto data = GraphData::from(g, features);
    return train_from(data, init_params(static_cast<int>(features.cols()), config), config.alpha,
                      config.learning_rate, config.epochs);
}

AnomalyRanking rank_anomalies(const Eigen::VectorXd& scores) {
    AnomalyRanking out;
    const auto n = static_cast<std::size_t>(scores.size());
    out.order.resize(n);
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](VertexId a, VertexId b) { return scores(a) > scores(b); });
    out.normalized = Eigen::VectorXd::Zero(scores.size());
    if (scores.size() > 0) {
        const double lo = scores.minCoeff();
        const double hi = scores.maxCoeff();
        if (hi > lo) out.normalized = (scores.array() - lo) / (hi - lo);
    }
    return out;
}

std::string heatmap_csv(const AnomalyRanking& ranking) {
    std::ostringstream out;
    for (Eigen::Index v = 0; v < ranking.normalized.size(); ++v)
        out << v << ',' << format_double(ranking.normalized(v)) << '\n';
    return out.str();
}

double roc_auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
    if (labels.size() != static_cast<std::size_t>(scores.size())) throw InvalidArgument("labels/scores size mismatch");
    double wins = 0.0;
    long long pos = 0, neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        ++pos;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == 1) continue;
            const double a = scores(static_cast<Eigen::Index>(i));
            const double b = scores(static_cast<Eigen::Index>(j));
            wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
        }
    }
    for (int l : labels) neg += l != 1;
    if (pos == 0 || neg == 0) throw InvalidArgument("ROC-AUC needs both positive and negative labels");
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd x(z.rows(), z.cols() + 1);
    x << z, Eigen::VectorXd::Ones(z.rows());
    return x;
}

}  // namespace

SupervisedHead fit_supervised(const Eigen::MatrixXd& z, const Eigen::VectorXd& labels, HeadTask task) {
    if (labels.size() != z.rows()) {
        throw InvalidArgument("labels have " + std::to_string(labels.size()) + " entries for " +
                              std::to_string(z.rows()) + " vertices");
    }
    if (z.rows() == 0) throw InvalidArgument("cannot fit a head without vertices");
    const Eigen::MatrixXd x = with_bias(z);
    const Eigen::Index p = x.cols();
    SupervisedHead head;
    head.task = task;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

    if (task == HeadTask::ScoreRegression) {
        constexpr double kRidge = 1e-8;
        Eigen::MatrixXd gram = x.transpose() * x;
        gram.diagonal().head(p - 1).array() += kRidge;
        beta = gram.ldlt().solve(x.transpose() * labels);
    } else {
        for (Eigen::Index i = 0; i < labels.size(); ++i) {
            if (labels(i) != 0.0 && labels(i) != 1.0) {
                throw InvalidArgument("indicator labels must be 0 or 1 (vertex " + std::to_string(i) + ")");
            }
        }
        const double positives = labels.sum();
        head.degenerate = positives == 0.0 || positives == static_cast<double>(labels.size());
        // Ridge keeps separable and single-class problems bounded.
        constexpr double kRidge = 1e-4;
        for (int iter = 0; iter < 100; ++iter) {
            const Eigen::VectorXd prob = sigmoid(x * beta);
            const Eigen::VectorXd grad = x.transpose() * (prob - labels) + kRidge * beta;
            const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
            Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
            hess.diagonal().array() += kRidge;
            const Eigen::VectorXd delta = hess.ldlt().solve(grad);
            beta -= delta;
            if (delta.lpNorm<Eigen::Infinity>() < 1e-12) break;
        }
    }
    if (!beta.allFinite()) throw NumericError("supervised head fit produced non-finite weights");
    head.weights = beta.head(p - 1);
    head.bias = beta(p - 1);
    return head;
}

Eigen::VectorXd predict(const SupervisedHead& head, const Eigen::MatrixXd& z) {
    if (z.cols() != head.weights.size()) {
        throw InvalidArgument("shape mismatch: head expects " + std::to_string(head.weights.size()) +
                              "-dim embeddings, got " + std::to_string(z.cols()));
    }
    const Eigen::VectorXd raw = (z * head.weights).array() + head.bias;
    return head.task == HeadTask::InfectedIndicator ? Eigen::VectorXd(sigmoid(raw)) : raw;
}

std::string format_params(const GcnParams& params) {
    params.check_shapes();
    std::ostringstream out;
    out << params.feature_dim() << ' ' << params.hidden_dim() << ' ' << params.embedding_dim() << '\n';
    for (const Eigen::MatrixXd* m : {&params.w0, &params.w1, &params.w2}) {
        for (Eigen::Index r = 0; r < m->rows(); ++r) {
            for (Eigen::Index c = 0; c < m->cols(); ++c) out << (c ? " " : "") << format_double((*m)(r, c));
            out << '\n';
        }
    }
    return out.str();
}

GcnParams parse_params(const std::string& text) {
    std::istringstream in(text);
    int d = 0, h = 0, z = 0;
    if (!(in >> d >> h >> z) || d < 1 || h < 1 || z < 1) throw FormatError("params header must be '<d> <h> <z>'");
    auto read = [&](Eigen::MatrixXd& m, int rows, int cols, const char* name) {
        m.resize(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                std::string tok;
                double v = 0.0;
                if (!(in >> tok) || !parse_double(tok, v)) {
                    throw FormatError(std::string("params file: bad value in ") + name + " at (" + std::to_string(r) +
                                      "," + std::to_string(c) + ")");
                }
                m(r, c) = v;
            }
        }
    };
    GcnParams p;
    read(p.w0, d, h, "W0");
    read(p.w1, h, z, "W1");
    read(p.w2, z, d, "W2");
    std::string extra;
    if (in >> extra) throw FormatError("params file has trailing data");
    return p;
}

void save_params(const GcnParams& params, const std::filesystem::path& path) {
    write_text_file(path, format_params(params));
}

GcnParams load_params(const std::filesystem::path& path) {
    return parse_params(read_text_file(path));
}

}  // namespace cloudsentry
