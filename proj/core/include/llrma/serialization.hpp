#pragma once

#include <iosfwd>
#include <vector>

#include "llrma/global_factor.hpp"
#include "llrma/local_model.hpp"

namespace llrma {

// Self-describing text formats. Values are written with 17 significant
// digits, so a save/load round trip reproduces every double exactly.

/// "llrma-factors 1" header, dimensions, scale, then row-major U and V.
void save_factors(std::ostream& out, const FactorPair& factors, const RatingScale& scale);

struct LoadedFactors {
    FactorPair factors;
    RatingScale scale;
};

LoadedFactors load_factors(std::istream& in);

/// A sequence of (anchor, factors) records sharing one scale header.
void save_local_models(std::ostream& out, const std::vector<LocalModel>& models,
                       const RatingScale& scale);

struct LoadedLocalModels {
    std::vector<LocalModel> models;
    RatingScale scale;
};

LoadedLocalModels load_local_models(std::istream& in);

}  // namespace llrma
