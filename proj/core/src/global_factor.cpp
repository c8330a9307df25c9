#include "llrma/global_factor.hpp"

#include <algorithm>
#include <cmath>

#include "llrma/rng.hpp"

namespace llrma {

void TrainConfig::validate() const {
    if (rank < 1) throw ConfigError("rank must be >= 1");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (tolerance <= 0.0) throw ConfigError("tolerance must be > 0");
}

namespace {

struct WeightedEntry {
    int other;  // column index in a row list, row index in a column list
    double value;
    double weight;
};

// Per-row and per-column working lists, zero-weight entries dropped. The
// same construction serves the unweighted fit with all weights exactly 1.0,
// so a weighted fit under unit weights reproduces it bit for bit.
struct WorkingSet {
    std::vector<std::vector<WeightedEntry>> rows;
    std::vector<std::vector<WeightedEntry>> cols;
    std::vector<std::size_t> active;   // indices into train.entries()
    std::vector<double> weight_of;     // per entry, 0 for dropped ones
};

WorkingSet build_working_set(const ObservedMatrix& train, std::span<const double> weights) {
    if (!weights.empty() && weights.size() != train.size()) {
        throw ShapeError("weights length " + std::to_string(weights.size()) +
                         " does not match entry count " + std::to_string(train.size()));
    }
    WorkingSet ws;
    ws.rows.resize(train.rows());
    ws.cols.resize(train.cols());
    ws.weight_of.assign(train.size(), 0.0);
    const auto& entries = train.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const double w = weights.empty() ? 1.0 : weights[k];
        if (w < 0.0 || !std::isfinite(w)) {
            throw RangeError("entry weights must be finite and non-negative");
        }
        if (w == 0.0) continue;
        const auto& e = entries[k];
        ws.rows[e.row].push_back({e.col, e.value, w});
        ws.cols[e.col].push_back({e.row, e.value, w});
        ws.active.push_back(k);
        ws.weight_of[k] = w;
    }
    return ws;
}

// Non-negative init: a symmetric [-0.01, 0.01] draw can hand alternating
// least squares an inconsistent sign pattern it cannot escape (on a 2x2
// rank-1 completion roughly half of all seeds stall in the wrong orthant).
Eigen::MatrixXd init_factor(Rng& rng, int n, int rank) {
    Eigen::MatrixXd f(n, rank);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < rank; ++k) {
            f(i, k) = rng.uniform(0.0, 0.01);
        }
    }
    return f;
}

double working_loss(const WorkingSet& ws, const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                    double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ws.rows.size(); ++i) {
        for (const auto& e : ws.rows[i]) {
            const double r = U.row(static_cast<Eigen::Index>(i)).dot(V.row(e.other)) - e.value;
            loss += e.weight * r * r;
        }
    }
    return loss + lambda * (U.squaredNorm() + V.squaredNorm());
}

// Ridge solve of one factor row given the opposite factor. With lambda = 0
// the normal matrix can be singular, so fall back to a rank-revealing solve.
void solve_rows(const std::vector<std::vector<WeightedEntry>>& lists, const Eigen::MatrixXd& other,
                double lambda, Eigen::MatrixXd& target) {
    const int rank = static_cast<int>(target.cols());
    const auto n = static_cast<std::int64_t>(lists.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& list = lists[static_cast<std::size_t>(i)];
        if (list.empty()) {
            target.row(i).setZero();
            continue;
        }
        Eigen::MatrixXd a = lambda * Eigen::MatrixXd::Identity(rank, rank);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(rank);
        for (const auto& e : list) {
            const Eigen::VectorXd x = other.row(e.other);
            a.noalias() += e.weight * x * x.transpose();
            b.noalias() += (e.weight * e.value) * x;
        }
        if (lambda > 0.0) {
            target.row(i) = a.ldlt().solve(b);
        } else {
            target.row(i) = a.colPivHouseholderQr().solve(b);
        }
    }
}

FactorPair als_fit(const ObservedMatrix& train, const WorkingSet& ws, const TrainConfig& cfg,
                   std::vector<double>* loss_history) {
    Rng rng(cfg.seed);
    FactorPair fp{init_factor(rng, train.rows(), cfg.rank),
                  init_factor(rng, train.cols(), cfg.rank)};
    double prev = 0.0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        solve_rows(ws.rows, fp.V, cfg.lambda, fp.U);
        solve_rows(ws.cols, fp.U, cfg.lambda, fp.V);
        const double loss = working_loss(ws, fp.U, fp.V, cfg.lambda);
        if (!std::isfinite(loss)) {
            throw DivergenceError(epoch, "training loss became non-finite");
        }
        if (loss_history) loss_history->push_back(loss);
        if (epoch > 1 && std::abs(prev - loss) <= cfg.tolerance * std::max(1.0, prev)) {
            break;
        }
        prev = loss;
    }
    return fp;
}

FactorPair sgd_fit(const ObservedMatrix& train, const WorkingSet& ws, const TrainConfig& cfg,
                   std::vector<double>* loss_history) {
    Rng rng(cfg.seed);
    FactorPair fp{init_factor(rng, train.rows(), cfg.rank),
                  init_factor(rng, train.cols(), cfg.rank)};
    std::vector<std::size_t> order = ws.active;
    const auto& entries = train.entries();
    double prev = 0.0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t k : order) {
            const auto& e = entries[k];
            const double w = ws.weight_of[k];
            const Eigen::VectorXd u = fp.U.row(e.row);
            const Eigen::VectorXd v = fp.V.row(e.col);
            const double err = u.dot(v) - e.value;
            fp.U.row(e.row) -= cfg.learning_rate * (w * err * v + cfg.lambda * u).transpose();
            fp.V.row(e.col) -= cfg.learning_rate * (w * err * u + cfg.lambda * v).transpose();
        }
        const double loss = working_loss(ws, fp.U, fp.V, cfg.lambda);
        if (!std::isfinite(loss)) {
            throw DivergenceError(epoch, "training loss became non-finite");
        }
        if (loss_history) loss_history->push_back(loss);
        if (epoch > 1 && std::abs(prev - loss) <= cfg.tolerance * std::max(1.0, prev)) {
            break;
        }
        prev = loss;
    }
    return fp;
}

}  // namespace

FactorPair fit_factors(const ObservedMatrix& train, std::span<const double> weights,
                       const TrainConfig& config, std::vector<double>* loss_history) {
    config.validate();
    if (train.empty()) {
        throw EmptyInputError("training set is empty");
    }
    if (config.rank > std::min(train.rows(), train.cols())) {
        throw ConfigError("rank " + std::to_string(config.rank) + " exceeds min(" +
                          std::to_string(train.rows()) + ", " + std::to_string(train.cols()) + ")");
    }
    const WorkingSet ws = build_working_set(train, weights);
    if (ws.active.empty()) {
        throw EmptyNeighborhoodError("all entry weights are zero");
    }
    return config.solver == Solver::Als ? als_fit(train, ws, config, loss_history)
                                        : sgd_fit(train, ws, config, loss_history);
}

FactorPair train_global(const ObservedMatrix& train, const TrainConfig& config,
                        std::vector<double>* loss_history) {
    return fit_factors(train, {}, config, loss_history);
}

double predict_entry(const FactorPair& model, int row, int col, const RatingScale& scale) {
    if (row < 0 || row >= model.rows() || col < 0 || col >= model.cols()) {
        throw IndexError("prediction index (" + std::to_string(row) + ", " + std::to_string(col) +
                         ") outside " + std::to_string(model.rows()) + "x" +
                         std::to_string(model.cols()));
    }
    return scale.clamp(model.raw_prediction(row, col));
}

ObjectiveValue weighted_objective_and_gradient(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                               const ObservedMatrix& train,
                                               std::span<const double> weights, double lambda) {
    if (U.rows() != train.rows() || V.rows() != train.cols() || U.cols() != V.cols()) {
        throw ShapeError("factor shapes do not match the observed matrix");
    }
    if (!weights.empty() && weights.size() != train.size()) {
        throw ShapeError("weights length does not match entry count");
    }
    ObjectiveValue out;
    out.grad_u = Eigen::MatrixXd::Zero(U.rows(), U.cols());
    out.grad_v = Eigen::MatrixXd::Zero(V.rows(), V.cols());
    const auto& entries = train.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        const double w = weights.empty() ? 1.0 : weights[k];
        const double err = U.row(e.row).dot(V.row(e.col)) - e.value;
        out.loss += w * err * err;
        out.grad_u.row(e.row) += 2.0 * w * err * V.row(e.col);
        out.grad_v.row(e.col) += 2.0 * w * err * U.row(e.row);
    }
    out.loss += lambda * (U.squaredNorm() + V.squaredNorm());
    out.grad_u += 2.0 * lambda * U;
    out.grad_v += 2.0 * lambda * V;
    return out;
}

ObjectiveValue objective_and_gradient(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                      const ObservedMatrix& train, double lambda) {
    return weighted_objective_and_gradient(U, V, train, {}, lambda);
}

double rmse(const std::function<double(int, int)>& predictor, const ObservedMatrix& test) {
    if (test.empty()) {
        throw EmptyInputError("test set is empty");
    }
    double sum = 0.0;
    for (const auto& e : test.entries()) {
        const double d = predictor(e.row, e.col) - e.value;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(test.size()));
}

}  // namespace llrma
