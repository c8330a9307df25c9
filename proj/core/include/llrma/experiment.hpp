#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "llrma/data_model.hpp"
#include "llrma/ensemble.hpp"
#include "llrma/global_factor.hpp"
#include "llrma/kernel.hpp"

namespace llrma {

enum class SolverTag { Als, Sgd, Svt };

SolverTag solver_tag_from_string(const std::string& tag);
std::string to_string(SolverTag tag);

/// Full description of one experiment sweep: split, fit global and
/// local-ensemble models for every rank x anchor-count combination, and
/// report test RMSE per model.
struct ExperimentConfig {
    std::string input_path;
    RatingsFormat format = RatingsFormat::Tsv;
    double test_fraction = 0.1;
    std::vector<int> ranks = {5};
    std::vector<int> anchor_counts = {50};
    double h1 = 0.8;
    double h2 = 0.8;
    KernelKind kernel = KernelKind::Epanechnikov;
    double lambda = 0.01;
    double learning_rate = 0.01;
    int max_epochs = 100;
    double tolerance = 1e-4;
    SolverTag solver = SolverTag::Als;
    int distance_rank = 10;
    std::uint64_t seed = 0;
    std::string output_path;

    void validate() const;

    KernelConfig kernel_config() const { return {h1, h2, kernel, false}; }
};

/// One output row. Global models carry q = 0; local rows carry the achieved
/// anchor count (empty-neighborhood anchors are resampled, see run log).
struct MetricsRow {
    std::string kind;  // "global" or "local"
    int rank = 0;
    int q = 0;
    double rmse = 0.0;
    double coverage = 0.0;
    std::size_t fallback_unseen = 0;
    std::size_t fallback_empty = 0;
};

/// Runs the sweep on an already-loaded matrix. Progress goes to `log`
/// (pass a null stream or std::cerr); the returned table is unsorted.
std::vector<MetricsRow> run_experiment(const ObservedMatrix& data, const ExperimentConfig& config,
                                       std::ostream& log);

/// Reads config.input_path, runs the sweep, writes the series CSV to
/// config.output_path, and returns the table.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Writes "kind,rank,q,rmse,coverage,fallback_unseen,fallback_empty" rows
/// sorted by (kind, rank, q).
void emit_series(const std::vector<MetricsRow>& table, std::ostream& out);
void emit_series(const std::vector<MetricsRow>& table, const std::string& path);

/// Parses a CSV produced by emit_series (used for round-trip checks).
std::vector<MetricsRow> parse_series(std::istream& in);

/// Rank-r truncated factorization of a dense matrix via SVD: the nuclear-norm
/// solver path produces dense completions, factored here so the rest of the
/// pipeline can treat every model as a FactorPair.
FactorPair factorize_dense(const Eigen::MatrixXd& m, int rank);

/// Evaluates a global model as a total predictor: unseen rows/columns get
/// the scale default, everything else the clamped factor prediction.
EvalMetrics evaluate_global(const FactorPair& model, const ObservedMatrix& train,
                            const ObservedMatrix& test);

}  // namespace llrma
