#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "llrma/data_model.hpp"

namespace llrma {

/// Rank-r factorization U V^T of an n_rows x n_cols matrix.
struct FactorPair {
    Eigen::MatrixXd U;  // n_rows x rank
    Eigen::MatrixXd V;  // n_cols x rank

    int rank() const { return static_cast<int>(U.cols()); }
    int rows() const { return static_cast<int>(U.rows()); }
    int cols() const { return static_cast<int>(V.rows()); }

    double raw_prediction(int row, int col) const { return U.row(row).dot(V.row(col)); }
};

enum class Solver { Als, Sgd };

struct TrainConfig {
    int rank = 5;
    double lambda = 0.01;        // L2 coefficient on both factors
    double learning_rate = 0.01; // SGD only
    int max_epochs = 100;
    double tolerance = 1e-4;     // relative loss change that counts as converged
    std::uint64_t seed = 0;
    Solver solver = Solver::Als;

    void validate() const;
};

/// Fits U, V to the observed entries by minimizing
///   sum_{(a,b) observed} ([U V^T]_{a,b} - M_{a,b})^2 + lambda (|U|_F^2 + |V|_F^2).
/// Per-epoch losses are appended to loss_history when given.
FactorPair train_global(const ObservedMatrix& train, const TrainConfig& config,
                        std::vector<double>* loss_history = nullptr);

/// Weighted variant used by local models: entry (a,b) contributes
/// w_{a,b} ([U V^T]_{a,b} - M_{a,b})^2. weights aligns with train.entries();
/// an empty span means all-ones. Entries with zero weight are skipped.
FactorPair fit_factors(const ObservedMatrix& train, std::span<const double> weights,
                       const TrainConfig& config, std::vector<double>* loss_history = nullptr);

/// dot(U[row], V[col]) clamped to the rating scale.
double predict_entry(const FactorPair& model, int row, int col, const RatingScale& scale);

struct ObjectiveValue {
    double loss = 0.0;
    Eigen::MatrixXd grad_u;
    Eigen::MatrixXd grad_v;
};

/// Loss and exact gradients of the regularized squared error at (U, V).
ObjectiveValue objective_and_gradient(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                      const ObservedMatrix& train, double lambda);

/// Weighted form; weights aligns with train.entries().
ObjectiveValue weighted_objective_and_gradient(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                               const ObservedMatrix& train,
                                               std::span<const double> weights, double lambda);

/// Root mean squared error of an arbitrary predictor over the test entries.
double rmse(const std::function<double(int, int)>& predictor, const ObservedMatrix& test);

}  // namespace llrma
