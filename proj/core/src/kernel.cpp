#include "llrma/kernel.hpp"

#include <cmath>

namespace llrma {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<char> zero_flags(const Eigen::MatrixXd& features) {
    std::vector<char> flags(static_cast<std::size_t>(features.rows()), 0);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        if (features.row(i).norm() == 0.0) flags[static_cast<std::size_t>(i)] = 1;
    }
    return flags;
}

double feature_distance(const Eigen::MatrixXd& features, int a, int b) {
    if (a < 0 || a >= features.rows() || b < 0 || b >= features.rows()) {
        throw IndexError("feature index out of range");
    }
    return arccos_distance(features.row(a), features.row(b));
}
}  // namespace

double arccos_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) {
        throw ShapeError("arccos distance requires vectors of equal length");
    }
    const double nx = x.norm();
    const double ny = y.norm();
    if (nx == 0.0 || ny == 0.0) return kPi;
    double c = x.dot(y) / (nx * ny);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c);
}

void KernelConfig::validate() const {
    if (!(h1 > 0.0) || !(h2 > 0.0)) {
        throw ConfigError("kernel bandwidths must be > 0");
    }
}

double epanechnikov(double d, double h) {
    return d < h ? 0.75 * (1.0 - d * d) : 0.0;
}

double kernel_value(double d, double h, const KernelConfig& cfg) {
    switch (cfg.kind) {
        case KernelKind::Uniform:
            return d < h ? 1.0 : 0.0;
        case KernelKind::Epanechnikov:
            break;
    }
    return cfg.normalized ? (d < h ? 0.75 * (1.0 - (d / h) * (d / h)) : 0.0)
                          : epanechnikov(d, h);
}

DistanceModel DistanceModel::from_features(Eigen::MatrixXd row_features,
                                           Eigen::MatrixXd col_features) {
    if (!row_features.allFinite() || !col_features.allFinite()) {
        throw RangeError("distance features must be finite");
    }
    if (row_features.cols() != col_features.cols()) {
        throw ShapeError("row and column features must have equal dimension");
    }
    DistanceModel dm;
    dm.row_features_ = std::move(row_features);
    dm.col_features_ = std::move(col_features);
    dm.row_zero_ = zero_flags(dm.row_features_);
    dm.col_zero_ = zero_flags(dm.col_features_);
    return dm;
}

DistanceModel DistanceModel::from_factors(const FactorPair& factors, bool balance) {
    if (!balance) {
        return from_features(factors.U, factors.V);
    }
    // Thin SVD of U V^T without forming the product: U V^T = Qu (Ru Rv^T) Qv^T.
    Eigen::HouseholderQR<Eigen::MatrixXd> qru(factors.U);
    Eigen::HouseholderQR<Eigen::MatrixXd> qrv(factors.V);
    const int r = factors.rank();
    const Eigen::MatrixXd ru =
        qru.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rv =
        qrv.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ru * rv.transpose(),
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd root = svd.singularValues().cwiseSqrt();
    Eigen::MatrixXd qu = Eigen::MatrixXd::Identity(factors.U.rows(), r);
    qu = qru.householderQ() * qu;
    Eigen::MatrixXd qv = Eigen::MatrixXd::Identity(factors.V.rows(), r);
    qv = qrv.householderQ() * qv;
    return from_features(qu * svd.matrixU() * root.asDiagonal(),
                         qv * svd.matrixV() * root.asDiagonal());
}

double DistanceModel::row_distance(int a, int b) const {
    return feature_distance(row_features_, a, b);
}

double DistanceModel::col_distance(int a, int b) const {
    return feature_distance(col_features_, a, b);
}

double product_kernel(std::pair<int, int> s, std::pair<int, int> t, const DistanceModel& dm,
                      const KernelConfig& cfg) {
    return kernel_value(dm.row_distance(s.first, t.first), cfg.h1, cfg) *
           kernel_value(dm.col_distance(s.second, t.second), cfg.h2, cfg);
}

AnchorWeights anchor_weight_vectors(std::pair<int, int> anchor, const DistanceModel& dm,
                                    const KernelConfig& cfg) {
    if (anchor.first < 0 || anchor.first >= dm.rows() || anchor.second < 0 ||
        anchor.second >= dm.cols()) {
        throw IndexError("anchor index out of range");
    }
    AnchorWeights w;
    w.row_weights.resize(dm.rows());
    w.col_weights.resize(dm.cols());
    for (int i = 0; i < dm.rows(); ++i) {
        w.row_weights[i] = kernel_value(dm.row_distance(anchor.first, i), cfg.h1, cfg);
    }
    for (int j = 0; j < dm.cols(); ++j) {
        w.col_weights[j] = kernel_value(dm.col_distance(anchor.second, j), cfg.h2, cfg);
    }
    return w;
}

}  // namespace llrma
