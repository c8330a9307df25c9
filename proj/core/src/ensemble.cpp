#include "llrma/ensemble.hpp"

#include <cmath>

namespace llrma {

EnsembleModel EnsembleModel::assemble(std::vector<LocalModel> locals, DistanceModel dm,
                                      KernelConfig kcfg, FactorPair fallback,
                                      const ObservedMatrix& train) {
    if (locals.empty()) {
        throw ConfigError("an ensemble needs at least one local model");
    }
    kcfg.validate();
    for (const auto& lm : locals) {
        if (lm.factors.rows() != fallback.rows() || lm.factors.cols() != fallback.cols()) {
            throw ShapeError("local model dimensions differ from the fallback model");
        }
    }
    if (fallback.rows() != train.rows() || fallback.cols() != train.cols()) {
        throw ShapeError("fallback model dimensions differ from the training matrix");
    }
    EnsembleModel m;
    m.locals_ = std::move(locals);
    m.dm_ = std::move(dm);
    m.kcfg_ = kcfg;
    m.fallback_ = std::move(fallback);
    m.scale_ = train.scale();
    m.row_seen_.resize(static_cast<std::size_t>(train.rows()), 0);
    m.col_seen_.resize(static_cast<std::size_t>(train.cols()), 0);
    for (const auto& e : train.entries()) {
        m.row_seen_[static_cast<std::size_t>(e.row)] = 1;
        m.col_seen_[static_cast<std::size_t>(e.col)] = 1;
    }
    return m;
}

bool EnsembleModel::seen(int row, int col) const {
    return row >= 0 && static_cast<std::size_t>(row) < row_seen_.size() && row_seen_[row] &&
           col >= 0 && static_cast<std::size_t>(col) < col_seen_.size() && col_seen_[col];
}

Eigen::VectorXd EnsembleModel::kernel_values(int row, int col) const {
    Eigen::VectorXd k(static_cast<Eigen::Index>(locals_.size()));
    for (std::size_t i = 0; i < locals_.size(); ++i) {
        const Anchor& a = locals_[i].anchor;
        k[static_cast<Eigen::Index>(i)] =
            product_kernel({a.row, a.col}, {row, col}, dm_, kcfg_);
    }
    return k;
}

Eigen::VectorXd EnsembleModel::nw_weights(int row, int col) const {
    Eigen::VectorXd k = kernel_values(row, col);
    const double total = k.sum();
    if (!(total > 0.0)) {
        throw EmptyNeighborhoodError("all anchors have zero kernel weight at (" +
                                     std::to_string(row) + ", " + std::to_string(col) + ")");
    }
    return k / total;
}

std::optional<double> EnsembleModel::raw_prediction(int row, int col) const {
    if (!seen(row, col)) return std::nullopt;
    const Eigen::VectorXd k = kernel_values(row, col);
    const double total = k.sum();
    if (!(total > 0.0)) return std::nullopt;
    double acc = 0.0;
    for (std::size_t i = 0; i < locals_.size(); ++i) {
        const double ki = k[static_cast<Eigen::Index>(i)];
        if (ki > 0.0) {
            acc += ki * locals_[i].factors.raw_prediction(row, col);
        }
    }
    return acc / total;
}

double EnsembleModel::predict(int row, int col) const {
    return predict_with_cause(row, col).first;
}

std::pair<double, FallbackCause> EnsembleModel::predict_with_cause(int row, int col) const {
    if (!seen(row, col)) {
        return {scale_.fallback, FallbackCause::UnseenIndex};
    }
    const Eigen::VectorXd k = kernel_values(row, col);
    const double total = k.sum();
    if (!(total > 0.0)) {
        return {scale_.clamp(fallback_.raw_prediction(row, col)), FallbackCause::EmptyNeighborhood};
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < locals_.size(); ++i) {
        const double ki = k[static_cast<Eigen::Index>(i)];
        if (ki > 0.0) {
            acc += ki * locals_[i].factors.raw_prediction(row, col);
        }
    }
    return {scale_.clamp(acc / total), FallbackCause::None};
}

EvalMetrics evaluate(const EnsembleModel& model, const ObservedMatrix& test) {
    if (test.empty()) {
        throw EmptyInputError("test set is empty");
    }
    const auto& entries = test.entries();
    const auto n = static_cast<std::int64_t>(entries.size());
    std::vector<double> sq(entries.size());
    std::vector<FallbackCause> cause(entries.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& e = entries[static_cast<std::size_t>(i)];
        const auto [pred, c] = model.predict_with_cause(e.row, e.col);
        const double d = pred - e.value;
        sq[static_cast<std::size_t>(i)] = d * d;
        cause[static_cast<std::size_t>(i)] = c;
    }
    EvalMetrics out;
    out.n_test = entries.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        sum += sq[i];
        if (cause[i] == FallbackCause::UnseenIndex) ++out.fallback_unseen;
        if (cause[i] == FallbackCause::EmptyNeighborhood) ++out.fallback_empty;
    }
    out.rmse = std::sqrt(sum / static_cast<double>(out.n_test));
    out.coverage = 1.0 - static_cast<double>(out.fallback_unseen + out.fallback_empty) /
                             static_cast<double>(out.n_test);
    return out;
}

}  // namespace llrma
