#include "llrma/local_model.hpp"

#include <exception>

#include "llrma/rng.hpp"

namespace llrma {

std::vector<Anchor> sample_anchors(const ObservedMatrix& train, std::size_t q,
                                   std::uint64_t seed) {
    if (q == 0) {
        throw ConfigError("anchor count must be >= 1");
    }
    if (q > train.size()) {
        throw InsufficientEntriesError("requested " + std::to_string(q) + " anchors from " +
                                       std::to_string(train.size()) + " observed entries");
    }
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<Anchor> anchors;
    anchors.reserve(q);
    for (std::size_t k = 0; k < q; ++k) {
        const auto& e = train.entries()[order[k]];
        anchors.push_back({e.row, e.col});
    }
    return anchors;
}

std::vector<double> anchor_entry_weights(const ObservedMatrix& train, const AnchorWeights& aw) {
    if (aw.row_weights.size() != train.rows() || aw.col_weights.size() != train.cols()) {
        throw ShapeError("anchor weight vectors do not match the matrix dimensions");
    }
    std::vector<double> w;
    w.reserve(train.size());
    for (const auto& e : train.entries()) {
        w.push_back(aw.row_weights[e.row] * aw.col_weights[e.col]);
    }
    return w;
}

LocalModel train_local(const ObservedMatrix& train, const Anchor& anchor,
                       const DistanceModel& dm, const KernelConfig& kcfg,
                       const TrainConfig& tcfg, std::vector<double>* loss_history) {
    if (!train.contains(anchor.row, anchor.col)) {
        throw ConfigError("anchor (" + std::to_string(anchor.row) + ", " +
                          std::to_string(anchor.col) + ") is not an observed training entry");
    }
    kcfg.validate();
    const AnchorWeights aw = anchor_weight_vectors({anchor.row, anchor.col}, dm, kcfg);
    const std::vector<double> weights = anchor_entry_weights(train, aw);
    FactorPair factors = fit_factors(train, weights, tcfg, loss_history);
    return LocalModel{anchor, std::move(factors)};
}

std::vector<LocalModel> train_local_batch(const ObservedMatrix& train,
                                          const std::vector<Anchor>& anchors,
                                          const DistanceModel& dm, const KernelConfig& kcfg,
                                          const TrainConfig& tcfg) {
    std::vector<LocalModel> models(anchors.size());
    std::exception_ptr failure = nullptr;
    const auto n = static_cast<std::int64_t>(anchors.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            TrainConfig cfg = tcfg;
            cfg.seed = derive_seed(tcfg.seed, /*stream=*/0x616e6368ULL,
                                   static_cast<std::uint64_t>(i));
            models[static_cast<std::size_t>(i)] =
                train_local(train, anchors[static_cast<std::size_t>(i)], dm, kcfg, cfg);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return models;
}

}  // namespace llrma
