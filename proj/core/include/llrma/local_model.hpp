#pragma once

#include <cstdint>
#include <vector>

#include "llrma/data_model.hpp"
#include "llrma/global_factor.hpp"
#include "llrma/kernel.hpp"

namespace llrma {

/// An observed training entry around which one local model is fit.
struct Anchor {
    int row = 0;
    int col = 0;

    friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// One anchored low-rank model: the estimate of the locally low-rank mapping
/// at its anchor point.
struct LocalModel {
    Anchor anchor;
    FactorPair factors;
};

/// q distinct anchors drawn uniformly without replacement from the observed
/// training entries.
std::vector<Anchor> sample_anchors(const ObservedMatrix& train, std::size_t q,
                                   std::uint64_t seed);

/// Per-entry kernel weights of an anchor over the training entries:
/// w_k = row_weights[row_k] * col_weights[col_k], aligned with
/// train.entries().
std::vector<double> anchor_entry_weights(const ObservedMatrix& train, const AnchorWeights& aw);

/// Fits one local model by minimizing the kernel-weighted regularized loss
///   sum_{(i,j) observed} w_ij ([U V^T]_ij - M_ij)^2 + lambda (|U|^2 + |V|^2).
/// Entries with zero weight are excluded from the working set entirely, so
/// the per-anchor cost is bounded by the kernel support. Throws
/// EmptyNeighborhoodError when no observed entry has positive weight.
LocalModel train_local(const ObservedMatrix& train, const Anchor& anchor,
                       const DistanceModel& dm, const KernelConfig& kcfg,
                       const TrainConfig& tcfg, std::vector<double>* loss_history = nullptr);

/// Trains one local model per anchor. Anchors are independent given the
/// immutable inputs and run on a worker pool; each fit draws its seed from
/// derive_seed(tcfg.seed, anchor index), so the result is identical for any
/// worker count. Results are ordered by anchor index.
std::vector<LocalModel> train_local_batch(const ObservedMatrix& train,
                                          const std::vector<Anchor>& anchors,
                                          const DistanceModel& dm, const KernelConfig& kcfg,
                                          const TrainConfig& tcfg);

}  // namespace llrma
