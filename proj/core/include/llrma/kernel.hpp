#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "llrma/error.hpp"
#include "llrma/global_factor.hpp"

namespace llrma {

/// Angle between two vectors: arccos(<x,y> / |x||y|), in [0, pi]. The cosine
/// is clamped to [-1, 1] to absorb rounding. A zero-norm vector is maximally
/// distant from everything (pi).
double arccos_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

enum class KernelKind { Epanechnikov, Uniform };

struct KernelConfig {
    double h1 = 0.8;  // row bandwidth
    double h2 = 0.8;  // col bandwidth
    KernelKind kind = KernelKind::Epanechnikov;
    // When set, the parabola is evaluated at d/h instead of d. The plain
    // (3/4)(1 - d^2) 1{d < h} form is the default.
    bool normalized = false;

    void validate() const;
};

/// (3/4)(1 - d^2) for d < h, else 0. The support indicator is strict.
double epanechnikov(double d, double h);

/// One-dimensional kernel value for the configured kind.
double kernel_value(double d, double h, const KernelConfig& cfg);

/// Per-row and per-column feature vectors feeding the arccos distance.
class DistanceModel {
public:
    DistanceModel() = default;

    /// Wraps raw feature matrices (one row per matrix row / column).
    static DistanceModel from_features(Eigen::MatrixXd row_features,
                                       Eigen::MatrixXd col_features);

    /// Builds features from a trained factor pair. The factors are first
    /// rescaled into the SVD-canonical form U V^T = (Q_u s^1/2)(Q_v s^1/2)^T,
    /// which balances the per-dimension scales of the two sides; raw ALS
    /// factors can park small noise dimensions on one side only, which
    /// distorts the angles there.
    static DistanceModel from_factors(const FactorPair& factors, bool balance = true);

    int rows() const { return static_cast<int>(row_features_.rows()); }
    int cols() const { return static_cast<int>(col_features_.rows()); }
    const Eigen::MatrixXd& row_features() const { return row_features_; }
    const Eigen::MatrixXd& col_features() const { return col_features_; }

    bool row_is_zero(int i) const { return row_zero_[static_cast<std::size_t>(i)] != 0; }
    bool col_is_zero(int j) const { return col_zero_[static_cast<std::size_t>(j)] != 0; }

    double row_distance(int a, int b) const;
    double col_distance(int a, int b) const;

private:
    Eigen::MatrixXd row_features_;
    Eigen::MatrixXd col_features_;
    std::vector<char> row_zero_;
    std::vector<char> col_zero_;
};

/// Product-form kernel over index pairs:
///   K((a,b),(c,d)) = K_h1(row distance a,c) * K_h2(col distance b,d).
double product_kernel(std::pair<int, int> s, std::pair<int, int> t, const DistanceModel& dm,
                      const KernelConfig& cfg);

/// The kernel weight matrix of an anchor in factored form: its dense
/// (i,j)-entry is row_weights[i] * col_weights[j]. The product kernel makes
/// the dense matrix rank one, so only the two vectors are materialized.
struct AnchorWeights {
    Eigen::VectorXd row_weights;
    Eigen::VectorXd col_weights;
};

AnchorWeights anchor_weight_vectors(std::pair<int, int> anchor, const DistanceModel& dm,
                                    const KernelConfig& cfg);

}  // namespace llrma
