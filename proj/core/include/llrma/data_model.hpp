#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "llrma/error.hpp"

namespace llrma {

/// Bounds and cold-start default of a rating scale.
struct RatingScale {
    double min = 1.0;
    double max = 5.0;
    double fallback = 3.0;  // default prediction for unseen rows/columns

    static RatingScale movielens() { return {1.0, 5.0, 3.0}; }

    bool contains(double v) const { return v >= min && v <= max; }
    double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

struct RatingTriple {
    int row = 0;
    int col = 0;
    double value = 0.0;

    friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

/// Sparse set of observed (row, col, value) entries with per-row and
/// per-column index structures. Immutable after construction; safe to share
/// across threads.
class ObservedMatrix {
public:
    using IndexedValue = std::pair<int, double>;

    ObservedMatrix() = default;

    /// Validates bounds, scale membership, and uniqueness of (row, col).
    static ObservedMatrix from_triples(int n_rows, int n_cols,
                                       std::vector<RatingTriple> entries,
                                       RatingScale scale);

    int rows() const { return n_rows_; }
    int cols() const { return n_cols_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::vector<RatingTriple>& entries() const { return entries_; }
    const RatingScale& scale() const { return scale_; }

    /// (col, value) pairs of row i, sorted by column.
    const std::vector<IndexedValue>& row_entries(int i) const { return row_index_.at(i); }
    /// (row, value) pairs of column j, sorted by row.
    const std::vector<IndexedValue>& col_entries(int j) const { return col_index_.at(j); }

    bool row_observed(int i) const { return i >= 0 && i < n_rows_ && !row_index_[i].empty(); }
    bool col_observed(int j) const { return j >= 0 && j < n_cols_ && !col_index_[j].empty(); }

    bool contains(int row, int col) const;

private:
    int n_rows_ = 0;
    int n_cols_ = 0;
    std::vector<RatingTriple> entries_;
    std::vector<std::vector<IndexedValue>> row_index_;
    std::vector<std::vector<IndexedValue>> col_index_;
    RatingScale scale_;
};

enum class RatingsFormat { MovielensDat, Tsv, Csv };

/// Parses a format tag: "movielens-dat", "tsv" or "csv".
RatingsFormat ratings_format_from_string(const std::string& tag);
std::string to_string(RatingsFormat fmt);

/// Parse result: the matrix plus the external-id <-> dense-index mapping
/// (row_ids[i] is the external id of row i).
struct RatingsFile {
    ObservedMatrix matrix;
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
};

/// Reads "user item rating [timestamp]" records. External ids are remapped
/// to dense 0-based indices in first-appearance order; timestamps are
/// discarded. CSV input may start with a header line, detected by a
/// non-numeric first field.
RatingsFile parse_ratings(std::istream& in, RatingsFormat fmt,
                          RatingScale scale = RatingScale::movielens());

/// Writes records back using the retained id mapping, one per entry in entry
/// order. Timestamps are not reproduced.
void write_ratings(std::ostream& out, const RatingsFile& data, RatingsFormat fmt);

/// Splits entries uniformly at random: |test| = round(m * test_fraction).
/// Both halves keep the full matrix dimensions and scale.
std::pair<ObservedMatrix, ObservedMatrix> split_train_test(const ObservedMatrix& matrix,
                                                           double test_fraction,
                                                           std::uint64_t seed);

/// Projection onto the observed set: keeps X on observed cells, zero
/// elsewhere. Idempotent.
Eigen::MatrixXd project_observed(const Eigen::MatrixXd& dense, const ObservedMatrix& observed);

}  // namespace llrma
