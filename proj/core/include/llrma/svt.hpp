#pragma once

#include <Eigen/Dense>
#include <vector>

#include "llrma/data_model.hpp"
#include "llrma/kernel.hpp"
#include "llrma/local_model.hpp"

namespace llrma {

/// Configuration of the proximal nuclear-norm solvers. The feasibility
/// radius alpha mirrors the constraint |residual|_F < alpha; alpha = 0
/// disables the feasibility gate and the solver just iterates to tolerance.
struct SvtConfig {
    double tau = 0.0;       // singular-value threshold; 0 = heuristic
    double step = 1.0;      // gradient step
    int max_iters = 500;
    double alpha = 0.0;     // feasibility radius
    double tolerance = 1e-6;  // relative iterate change

    void validate() const;

    /// Default threshold when tau == 0: 5 sqrt(n1 n2) mean|observed|.
    static double heuristic_tau(const ObservedMatrix& observed);
};

struct SvtReport {
    int iterations = 0;
    double residual = 0.0;      // |W (+) Pi_A(X - M)|_F at exit
    double nuclear_norm = 0.0;  // of the returned iterate
    bool converged = false;     // relative-change tolerance reached
    bool feasible = false;      // residual <= alpha (alpha > 0 only)
    std::vector<double> objective_history;  // tau |X|_* + 1/2 residual^2
    std::vector<double> residual_history;
};

struct SvtResult {
    Eigen::MatrixXd completed;
    SvtReport report;
};

/// Hard cap on the dense solvers; these exist for desk-scale fidelity work,
/// the factorization path is the practical solver.
inline constexpr int kSvtMaxSide = 1000;

/// Soft-thresholds the singular values of a matrix by tau.
Eigen::MatrixXd singular_value_shrink(const Eigen::MatrixXd& m, double tau);

/// Sum of singular values.
double nuclear_norm(const Eigen::MatrixXd& m);

/// Nuclear-norm completion in penalized proximal form:
///   X <- shrink_tau(X - step * Pi_A(X - M)),
/// starting from X = 0, stopping on relative change < tolerance. If X = 0 is
/// already feasible (|Pi_A(M)|_F < alpha) it is returned directly, since no
/// matrix has a smaller nuclear norm.
SvtResult svt_complete(const ObservedMatrix& observed, const SvtConfig& cfg);

/// Kernel-weighted variant: the constraint weights each observed residual by
/// the anchor kernel, so the gradient term carries the squared weights
/// (d/dX of 1/2 |K (+) Pi_A(X - M)|_F^2). Entries outside the kernel support
/// impose no constraint. The reported residual is |K (+) Pi_A(X - M)|_F.
SvtResult svt_local(const ObservedMatrix& observed, const Anchor& anchor,
                    const DistanceModel& dm, const KernelConfig& kcfg, const SvtConfig& cfg);

}  // namespace llrma
