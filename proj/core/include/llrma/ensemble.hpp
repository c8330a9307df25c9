#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "llrma/data_model.hpp"
#include "llrma/global_factor.hpp"
#include "llrma/kernel.hpp"
#include "llrma/local_model.hpp"

namespace llrma {

/// Why a prediction did not come from the local-model average.
enum class FallbackCause { None, UnseenIndex, EmptyNeighborhood };

/// The smoothed estimator: a Nadaraya-Watson weighted average of the local
/// models, with a global-model fallback for queries outside every kernel
/// support and a constant default for unseen rows/columns. Immutable and
/// safe for concurrent prediction.
class EnsembleModel {
public:
    /// seen_rows/seen_cols are taken from the training matrix: a prediction
    /// at a never-observed row or column returns scale.fallback.
    static EnsembleModel assemble(std::vector<LocalModel> locals, DistanceModel dm,
                                  KernelConfig kcfg, FactorPair fallback,
                                  const ObservedMatrix& train);

    std::size_t local_count() const { return locals_.size(); }
    const std::vector<LocalModel>& locals() const { return locals_; }
    const FactorPair& fallback() const { return fallback_; }
    const RatingScale& scale() const { return scale_; }
    const DistanceModel& distance_model() const { return dm_; }
    const KernelConfig& kernel_config() const { return kcfg_; }

    /// Kernel values K(s_i, s) of every local model at the query point.
    Eigen::VectorXd kernel_values(int row, int col) const;

    /// Normalized Nadaraya-Watson weights; throws EmptyNeighborhoodError
    /// when every kernel value is zero.
    Eigen::VectorXd nw_weights(int row, int col) const;

    /// Unclamped weighted average of the local raw predictions. Empty when
    /// the query has zero kernel mass or an unseen index.
    std::optional<double> raw_prediction(int row, int col) const;

    /// Total prediction: default for unseen indices, clamped global-model
    /// prediction on zero kernel mass, clamped NW average otherwise.
    double predict(int row, int col) const;

    /// predict() plus the fallback cause, for diagnostics.
    std::pair<double, FallbackCause> predict_with_cause(int row, int col) const;

private:
    std::vector<LocalModel> locals_;
    DistanceModel dm_;
    KernelConfig kcfg_;
    FactorPair fallback_;
    RatingScale scale_;
    std::vector<char> row_seen_;
    std::vector<char> col_seen_;

    bool seen(int row, int col) const;
};

/// Evaluation summary over a test set. Fallback predictions are included in
/// the RMSE; coverage is the fraction answered by the local-model average.
struct EvalMetrics {
    double rmse = 0.0;
    double coverage = 0.0;
    std::size_t n_test = 0;
    std::size_t fallback_unseen = 0;
    std::size_t fallback_empty = 0;
};

EvalMetrics evaluate(const EnsembleModel& model, const ObservedMatrix& test);

}  // namespace llrma
