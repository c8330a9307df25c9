#include "llrma/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "llrma/rng.hpp"

namespace llrma {

ObservedMatrix ObservedMatrix::from_triples(int n_rows, int n_cols,
                                            std::vector<RatingTriple> entries,
                                            RatingScale scale) {
    if (n_rows < 0 || n_cols < 0) {
        throw ShapeError("matrix dimensions must be non-negative");
    }
    if (!(scale.min <= scale.fallback && scale.fallback <= scale.max)) {
        throw RangeError("rating scale requires min <= default <= max");
    }
    ObservedMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.scale_ = scale;
    m.row_index_.resize(n_rows);
    m.col_index_.resize(n_cols);
    for (const auto& e : entries) {
        if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols) {
            throw IndexError("entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                             ") outside " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
        }
        if (!scale.contains(e.value)) {
            throw RangeError("rating " + std::to_string(e.value) + " outside scale [" +
                             std::to_string(scale.min) + ", " + std::to_string(scale.max) + "]");
        }
        m.row_index_[e.row].emplace_back(e.col, e.value);
        m.col_index_[e.col].emplace_back(e.row, e.value);
    }
    for (auto& r : m.row_index_) {
        std::sort(r.begin(), r.end(),
                  [](const IndexedValue& a, const IndexedValue& b) { return a.first < b.first; });
    }
    for (auto& c : m.col_index_) {
        std::sort(c.begin(), c.end(),
                  [](const IndexedValue& a, const IndexedValue& b) { return a.first < b.first; });
    }
    for (int i = 0; i < n_rows; ++i) {
        const auto& r = m.row_index_[i];
        for (std::size_t k = 1; k < r.size(); ++k) {
            if (r[k].first == r[k - 1].first) {
                throw DuplicateError("duplicate entry at (" + std::to_string(i) + ", " +
                                     std::to_string(r[k].first) + ")");
            }
        }
    }
    m.entries_ = std::move(entries);
    return m;
}

bool ObservedMatrix::contains(int row, int col) const {
    if (row < 0 || row >= n_rows_ || col < 0 || col >= n_cols_) return false;
    const auto& r = row_index_[row];
    auto it = std::lower_bound(r.begin(), r.end(), col,
                               [](const IndexedValue& a, int c) { return a.first < c; });
    return it != r.end() && it->first == col;
}

RatingsFormat ratings_format_from_string(const std::string& tag) {
    if (tag == "movielens-dat") return RatingsFormat::MovielensDat;
    if (tag == "tsv") return RatingsFormat::Tsv;
    if (tag == "csv") return RatingsFormat::Csv;
    throw ConfigError("unknown ratings format '" + tag + "'");
}

std::string to_string(RatingsFormat fmt) {
    switch (fmt) {
        case RatingsFormat::MovielensDat: return "movielens-dat";
        case RatingsFormat::Tsv: return "tsv";
        case RatingsFormat::Csv: return "csv";
    }
    return "?";
}

namespace {

std::vector<std::string> split_fields(const std::string& line, RatingsFormat fmt) {
    std::vector<std::string> out;
    if (fmt == RatingsFormat::MovielensDat) {
        std::size_t pos = 0;
        for (;;) {
            const std::size_t next = line.find("::", pos);
            if (next == std::string::npos) {
                out.push_back(line.substr(pos));
                break;
            }
            out.push_back(line.substr(pos, next - pos));
            pos = next + 2;
        }
    } else {
        const char sep = fmt == RatingsFormat::Tsv ? '\t' : ',';
        std::size_t pos = 0;
        for (;;) {
            const std::size_t next = line.find(sep, pos);
            if (next == std::string::npos) {
                out.push_back(line.substr(pos));
                break;
            }
            out.push_back(line.substr(pos, next - pos));
            pos = next + 1;
        }
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size();
}

}  // namespace

RatingsFile parse_ratings(std::istream& in, RatingsFormat fmt, RatingScale scale) {
    RatingsFile out;
    std::unordered_map<std::string, int> row_of, col_of;
    std::unordered_map<std::int64_t, std::size_t> seen;  // (row, col) -> first line
    std::vector<RatingTriple> entries;

    std::string line;
    std::size_t line_no = 0;
    bool first_record = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line, fmt);
        if (first_record && fmt == RatingsFormat::Csv) {
            double probe;
            if (!fields.empty() && !parse_double(fields.front(), probe)) {
                first_record = false;  // header line
                continue;
            }
        }
        first_record = false;
        if (fields.size() != 3 && fields.size() != 4) {
            throw ParseError(line_no, "expected 3 or 4 fields, got " +
                                          std::to_string(fields.size()));
        }
        if (fields[0].empty() || fields[1].empty()) {
            throw ParseError(line_no, "empty user or item id");
        }
        double rating;
        if (!parse_double(fields[2], rating)) {
            throw ParseError(line_no, "non-numeric rating '" + fields[2] + "'");
        }
        if (!scale.contains(rating)) {
            throw RangeError("line " + std::to_string(line_no) + ": rating " + fields[2] +
                             " outside scale [" + std::to_string(scale.min) + ", " +
                             std::to_string(scale.max) + "]");
        }
        auto [rit, rnew] = row_of.try_emplace(fields[0], static_cast<int>(out.row_ids.size()));
        if (rnew) out.row_ids.push_back(fields[0]);
        auto [cit, cnew] = col_of.try_emplace(fields[1], static_cast<int>(out.col_ids.size()));
        if (cnew) out.col_ids.push_back(fields[1]);
        const int row = rit->second;
        const int col = cit->second;
        const std::int64_t key =
            static_cast<std::int64_t>(row) * (1LL << 31) + static_cast<std::int64_t>(col);
        if (auto [sit, fresh] = seen.try_emplace(key, line_no); !fresh) {
            throw DuplicateError("line " + std::to_string(line_no) + ": duplicate record for (" +
                                 fields[0] + ", " + fields[1] + "), first seen on line " +
                                 std::to_string(sit->second));
        }
        entries.push_back({row, col, rating});
    }
    out.matrix = ObservedMatrix::from_triples(static_cast<int>(out.row_ids.size()),
                                              static_cast<int>(out.col_ids.size()),
                                              std::move(entries), scale);
    return out;
}

void write_ratings(std::ostream& out, const RatingsFile& data, RatingsFormat fmt) {
    const char* sep = fmt == RatingsFormat::MovielensDat ? "::"
                      : fmt == RatingsFormat::Tsv        ? "\t"
                                                         : ",";
    char buf[64];
    for (const auto& e : data.matrix.entries()) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.value);
        out << data.row_ids.at(e.row) << sep << data.col_ids.at(e.col) << sep << buf << '\n';
    }
}

std::pair<ObservedMatrix, ObservedMatrix> split_train_test(const ObservedMatrix& matrix,
                                                           double test_fraction,
                                                           std::uint64_t seed) {
    if (matrix.empty()) {
        throw EmptyInputError("cannot split an empty matrix");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    const std::size_t m = matrix.size();
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(m) * test_fraction));

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<char> in_test(m, 0);
    for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = 1;

    std::vector<RatingTriple> train, test;
    train.reserve(m - n_test);
    test.reserve(n_test);
    for (std::size_t i = 0; i < m; ++i) {
        (in_test[i] ? test : train).push_back(matrix.entries()[i]);
    }
    return {ObservedMatrix::from_triples(matrix.rows(), matrix.cols(), std::move(train),
                                         matrix.scale()),
            ObservedMatrix::from_triples(matrix.rows(), matrix.cols(), std::move(test),
                                         matrix.scale())};
}

Eigen::MatrixXd project_observed(const Eigen::MatrixXd& dense, const ObservedMatrix& observed) {
    if (dense.rows() != observed.rows() || dense.cols() != observed.cols()) {
        throw ShapeError("dense matrix is " + std::to_string(dense.rows()) + "x" +
                         std::to_string(dense.cols()) + ", observed set expects " +
                         std::to_string(observed.rows()) + "x" + std::to_string(observed.cols()));
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dense.rows(), dense.cols());
    for (const auto& e : observed.entries()) {
        out(e.row, e.col) = dense(e.row, e.col);
    }
    return out;
}

}  // namespace llrma
