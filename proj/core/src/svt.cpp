#include "llrma/svt.hpp"

#include <cmath>

namespace llrma {

void SvtConfig::validate() const {
    if (tau < 0.0) throw ConfigError("tau must be >= 0");
    if (!(step > 0.0)) throw ConfigError("step must be > 0");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
}

double SvtConfig::heuristic_tau(const ObservedMatrix& observed) {
    if (observed.empty()) return 1.0;
    double mean_abs = 0.0;
    for (const auto& e : observed.entries()) mean_abs += std::abs(e.value);
    mean_abs /= static_cast<double>(observed.size());
    return 5.0 * std::sqrt(static_cast<double>(observed.rows()) *
                           static_cast<double>(observed.cols())) *
           mean_abs;
}

namespace {

void check_size(int rows, int cols) {
    if (rows > kSvtMaxSide || cols > kSvtMaxSide) {
        throw SizeError("dense solver capped at " + std::to_string(kSvtMaxSide) + "x" +
                        std::to_string(kSvtMaxSide) + ", got " + std::to_string(rows) + "x" +
                        std::to_string(cols));
    }
}

double weighted_residual(const Eigen::MatrixXd& x, const ObservedMatrix& observed,
                         const std::vector<double>& w) {
    double sum = 0.0;
    const auto& entries = observed.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        const double r = w[k] * (x(e.row, e.col) - e.value);
        sum += r * r;
    }
    return std::sqrt(sum);
}

// The shared proximal loop. Weights enter the gradient squared because the
// penalty is 1/2 |W (+) Pi_A(X - M)|_F^2; unit weights reproduce the
// unweighted solver exactly.
SvtResult svt_iterate(const ObservedMatrix& observed, const std::vector<double>& w,
                      const SvtConfig& cfg) {
    cfg.validate();
    check_size(observed.rows(), observed.cols());
    SvtResult out;
    out.completed = Eigen::MatrixXd::Zero(observed.rows(), observed.cols());
    if (observed.empty()) {
        out.report.converged = true;
        out.report.feasible = cfg.alpha > 0.0;
        return out;
    }
    const double tau = cfg.tau > 0.0 ? cfg.tau : SvtConfig::heuristic_tau(observed);
    const auto& entries = observed.entries();

    double residual = weighted_residual(out.completed, observed, w);
    if (cfg.alpha > 0.0 && residual < cfg.alpha) {
        // X = 0 is feasible and has minimal nuclear norm.
        out.report.residual = residual;
        out.report.converged = true;
        out.report.feasible = true;
        return out;
    }

    Eigen::MatrixXd x = out.completed;
    double nuc = 0.0;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        Eigen::MatrixXd y = x;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& e = entries[k];
            y(e.row, e.col) -= cfg.step * w[k] * w[k] * (x(e.row, e.col) - e.value);
        }
        Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd s = svd.singularValues();
        nuc = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            s[i] = std::max(s[i] - tau, 0.0);
            nuc += s[i];
        }
        Eigen::MatrixXd next = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
        residual = weighted_residual(next, observed, w);
        out.report.iterations = iter;
        out.report.residual_history.push_back(residual);
        out.report.objective_history.push_back(tau * nuc + 0.5 * residual * residual);
        const double change = (next - x).norm() / std::max(1.0, x.norm());
        x = std::move(next);
        if (!x.allFinite()) {
            throw DivergenceError(iter, "solver iterate became non-finite");
        }
        if (change <= cfg.tolerance) {
            out.report.converged = true;
            break;
        }
    }
    out.completed = std::move(x);
    out.report.residual = residual;
    out.report.nuclear_norm = nuc;
    out.report.feasible = cfg.alpha > 0.0 && residual <= cfg.alpha;
    return out;
}

}  // namespace

Eigen::MatrixXd singular_value_shrink(const Eigen::MatrixXd& m, double tau) {
    check_size(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - tau, 0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Eigen::MatrixXd& m) {
    check_size(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    return Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

SvtResult svt_complete(const ObservedMatrix& observed, const SvtConfig& cfg) {
    const std::vector<double> w(observed.size(), 1.0);
    return svt_iterate(observed, w, cfg);
}

SvtResult svt_local(const ObservedMatrix& observed, const Anchor& anchor,
                    const DistanceModel& dm, const KernelConfig& kcfg, const SvtConfig& cfg) {
    kcfg.validate();
    const AnchorWeights aw = anchor_weight_vectors({anchor.row, anchor.col}, dm, kcfg);
    const std::vector<double> w = anchor_entry_weights(observed, aw);
    bool any = false;
    for (double wk : w) {
        if (wk > 0.0) {
            any = true;
            break;
        }
    }
    if (!any && !observed.empty()) {
        throw EmptyNeighborhoodError("anchor neighborhood contains no observed entries");
    }
    return svt_iterate(observed, w, cfg);
}

}  // namespace llrma
