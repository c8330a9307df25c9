#include "llrma/serialization.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace llrma {

namespace {

constexpr const char* kFactorsMagic = "llrma-factors 1";
constexpr const char* kLocalsMagic = "llrma-locals 1";

void write_double(std::ostream& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            write_double(out, m(i, j));
        }
        out << '\n';
    }
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError(std::string("unexpected end of stream, expected ") + what);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void expect_line(std::istream& in, const std::string& expected) {
    const std::string line = next_line(in, expected.c_str());
    if (line != expected) {
        throw IoError("expected '" + expected + "', got '" + line + "'");
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, int rows, int cols, const char* tag) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        std::istringstream line(next_line(in, tag));
        for (int j = 0; j < cols; ++j) {
            if (!(line >> m(i, j))) {
                throw IoError(std::string("malformed ") + tag + " row " + std::to_string(i));
            }
        }
    }
    if (!m.allFinite()) {
        throw RangeError(std::string(tag) + " contains non-finite values");
    }
    return m;
}

void write_factor_body(std::ostream& out, const FactorPair& factors, const RatingScale& scale) {
    out << "rows " << factors.rows() << " cols " << factors.cols() << " rank " << factors.rank()
        << '\n';
    out << "scale ";
    write_double(out, scale.min);
    out << ' ';
    write_double(out, scale.max);
    out << ' ';
    write_double(out, scale.fallback);
    out << '\n';
    out << "U\n";
    write_matrix(out, factors.U);
    out << "V\n";
    write_matrix(out, factors.V);
}

LoadedFactors read_factor_body(std::istream& in) {
    int rows = 0, cols = 0, rank = 0;
    {
        std::istringstream hdr(next_line(in, "dimension header"));
        std::string k1, k2, k3;
        if (!(hdr >> k1 >> rows >> k2 >> cols >> k3 >> rank) || k1 != "rows" || k2 != "cols" ||
            k3 != "rank") {
            throw IoError("malformed dimension header");
        }
    }
    if (rows < 1 || cols < 1 || rank < 1 || rank > std::min(rows, cols)) {
        throw IoError("invalid dimensions rows=" + std::to_string(rows) +
                      " cols=" + std::to_string(cols) + " rank=" + std::to_string(rank));
    }
    RatingScale scale;
    {
        std::istringstream hdr(next_line(in, "scale header"));
        std::string key;
        if (!(hdr >> key >> scale.min >> scale.max >> scale.fallback) || key != "scale") {
            throw IoError("malformed scale header");
        }
    }
    expect_line(in, "U");
    Eigen::MatrixXd u = read_matrix(in, rows, rank, "U");
    expect_line(in, "V");
    Eigen::MatrixXd v = read_matrix(in, cols, rank, "V");
    return {FactorPair{std::move(u), std::move(v)}, scale};
}

}  // namespace

void save_factors(std::ostream& out, const FactorPair& factors, const RatingScale& scale) {
    out << kFactorsMagic << '\n';
    write_factor_body(out, factors, scale);
}

LoadedFactors load_factors(std::istream& in) {
    expect_line(in, kFactorsMagic);
    return read_factor_body(in);
}

void save_local_models(std::ostream& out, const std::vector<LocalModel>& models,
                       const RatingScale& scale) {
    out << kLocalsMagic << '\n';
    out << "count " << models.size() << '\n';
    for (const auto& lm : models) {
        out << "anchor " << lm.anchor.row << ' ' << lm.anchor.col << '\n';
        write_factor_body(out, lm.factors, scale);
    }
}

LoadedLocalModels load_local_models(std::istream& in) {
    expect_line(in, kLocalsMagic);
    std::size_t count = 0;
    {
        std::istringstream hdr(next_line(in, "count header"));
        std::string key;
        if (!(hdr >> key >> count) || key != "count") {
            throw IoError("malformed count header");
        }
    }
    LoadedLocalModels out;
    out.models.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Anchor anchor;
        {
            std::istringstream hdr(next_line(in, "anchor header"));
            std::string key;
            if (!(hdr >> key >> anchor.row >> anchor.col) || key != "anchor") {
                throw IoError("malformed anchor header in record " + std::to_string(k));
            }
        }
        LoadedFactors lf = read_factor_body(in);
        out.scale = lf.scale;
        out.models.push_back({anchor, std::move(lf.factors)});
    }
    return out;
}

}  // namespace llrma
