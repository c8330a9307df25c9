#include "llrma/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "llrma/rng.hpp"
#include "llrma/svt.hpp"

namespace llrma {

namespace {

constexpr std::uint64_t kDistanceStream = 0x64697374ULL;
constexpr std::uint64_t kAnchorStream = 0x616e6352ULL;
constexpr std::uint64_t kGlobalStream = 0x676c6f62ULL;
constexpr std::uint64_t kLocalStream = 0x6c6f6361ULL;

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

TrainConfig train_config(const ExperimentConfig& cfg, int rank, std::uint64_t seed) {
    TrainConfig tc;
    tc.rank = rank;
    tc.lambda = cfg.lambda;
    tc.learning_rate = cfg.learning_rate;
    tc.max_epochs = cfg.max_epochs;
    tc.tolerance = cfg.tolerance;
    tc.seed = seed;
    tc.solver = cfg.solver == SolverTag::Sgd ? Solver::Sgd : Solver::Als;
    return tc;
}

// Draws anchors from a seeded permutation of the training entries, skipping
// (and logging) candidates whose kernel neighborhood holds no observed
// entry. May return fewer than q when the pool is exhausted.
std::vector<Anchor> sample_anchors_with_replacement_policy(const ObservedMatrix& train,
                                                           const DistanceModel& dm,
                                                           const KernelConfig& kcfg, int q,
                                                           std::uint64_t seed,
                                                           std::ostream& log) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<Anchor> anchors;
    anchors.reserve(static_cast<std::size_t>(q));
    for (std::size_t pos = 0; pos < order.size() && anchors.size() < static_cast<std::size_t>(q);
         ++pos) {
        const auto& e = train.entries()[order[pos]];
        const Anchor candidate{e.row, e.col};
        const AnchorWeights aw = anchor_weight_vectors({candidate.row, candidate.col}, dm, kcfg);
        bool any = false;
        for (const auto& t : train.entries()) {
            if (aw.row_weights[t.row] * aw.col_weights[t.col] > 0.0) {
                any = true;
                break;
            }
        }
        if (any) {
            anchors.push_back(candidate);
        } else {
            log << "[llrma] anchor (" << candidate.row << ", " << candidate.col
                << ") has an empty neighborhood, resampling\n";
        }
    }
    return anchors;
}

FactorPair fit_global_model(const ObservedMatrix& train, const ExperimentConfig& cfg, int rank,
                            std::uint64_t seed) {
    if (cfg.solver == SolverTag::Svt) {
        SvtConfig sc;
        return factorize_dense(svt_complete(train, sc).completed, rank);
    }
    return train_global(train, train_config(cfg, rank, seed));
}

std::vector<LocalModel> fit_local_models(const ObservedMatrix& train,
                                         const std::vector<Anchor>& anchors,
                                         const DistanceModel& dm, const KernelConfig& kcfg,
                                         const ExperimentConfig& cfg, int rank,
                                         std::uint64_t seed) {
    if (cfg.solver != SolverTag::Svt) {
        return train_local_batch(train, anchors, dm, kcfg, train_config(cfg, rank, seed));
    }
    std::vector<LocalModel> models(anchors.size());
    std::exception_ptr failure = nullptr;
    const auto n = static_cast<std::int64_t>(anchors.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            SvtConfig sc;
            const auto& anchor = anchors[static_cast<std::size_t>(i)];
            models[static_cast<std::size_t>(i)] =
                LocalModel{anchor,
                           factorize_dense(svt_local(train, anchor, dm, kcfg, sc).completed, rank)};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return models;
}

}  // namespace

SolverTag solver_tag_from_string(const std::string& tag) {
    if (tag == "als") return SolverTag::Als;
    if (tag == "sgd") return SolverTag::Sgd;
    if (tag == "svt") return SolverTag::Svt;
    throw ConfigError("unknown solver '" + tag + "' (expected als, sgd or svt)");
}

std::string to_string(SolverTag tag) {
    switch (tag) {
        case SolverTag::Als: return "als";
        case SolverTag::Sgd: return "sgd";
        case SolverTag::Svt: return "svt";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    if (ranks.empty()) throw ConfigError("rank list must be non-empty");
    if (anchor_counts.empty()) throw ConfigError("anchor count list must be non-empty");
    for (int r : ranks) {
        if (r < 1) throw ConfigError("ranks must be >= 1");
    }
    for (int q : anchor_counts) {
        if (q < 1) throw ConfigError("anchor counts must be >= 1");
    }
    if (!(h1 > 0.0) || !(h2 > 0.0)) throw ConfigError("bandwidths must be > 0");
    if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (distance_rank < 1) throw ConfigError("distance rank must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

FactorPair factorize_dense(const Eigen::MatrixXd& m, int rank) {
    if (rank < 1) throw ConfigError("rank must be >= 1");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    int effective = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] > s[0] * 1e-12 && s[i] > 0.0) ++effective;
    }
    const int keep = std::max(1, std::min(rank, effective));
    const Eigen::VectorXd root = s.head(keep).cwiseSqrt();
    return FactorPair{svd.matrixU().leftCols(keep) * root.asDiagonal(),
                      svd.matrixV().leftCols(keep) * root.asDiagonal()};
}

EvalMetrics evaluate_global(const FactorPair& model, const ObservedMatrix& train,
                            const ObservedMatrix& test) {
    if (test.empty()) throw EmptyInputError("test set is empty");
    const RatingScale& scale = train.scale();
    EvalMetrics out;
    out.n_test = test.size();
    double sum = 0.0;
    for (const auto& e : test.entries()) {
        double pred;
        if (!train.row_observed(e.row) || !train.col_observed(e.col)) {
            pred = scale.fallback;
            ++out.fallback_unseen;
        } else {
            pred = predict_entry(model, e.row, e.col, scale);
        }
        const double d = pred - e.value;
        sum += d * d;
    }
    out.rmse = std::sqrt(sum / static_cast<double>(out.n_test));
    out.coverage =
        1.0 - static_cast<double>(out.fallback_unseen) / static_cast<double>(out.n_test);
    return out;
}

std::vector<MetricsRow> run_experiment(const ObservedMatrix& data, const ExperimentConfig& config,
                                       std::ostream& log) {
    config.validate();
    Stopwatch total;

    auto [train, test] = split_train_test(data, config.test_fraction, config.seed);
    log << "[llrma] split " << data.size() << " entries into " << train.size() << " train / "
        << test.size() << " test\n";
    if (train.empty() || test.empty()) {
        throw EmptyInputError("train/test split produced an empty half");
    }

    // Distance features: a separate rank-r~ fit, fixed across the sweep so
    // the kernel geometry does not move while rank varies. Always ALS: the
    // feature fit needs an exact target rank.
    Stopwatch dist_watch;
    ExperimentConfig dist_cfg = config;
    dist_cfg.solver = SolverTag::Als;
    const int dist_rank = std::min(config.distance_rank, std::min(train.rows(), train.cols()));
    const FactorPair dist_factors =
        train_global(train, train_config(dist_cfg, dist_rank, derive_seed(config.seed, kDistanceStream)));
    const DistanceModel dm = DistanceModel::from_factors(dist_factors);
    log << "[llrma] distance model rank " << dist_rank << " trained in " << dist_watch.ms()
        << " ms\n";

    const KernelConfig kcfg = config.kernel_config();

    // Anchor sets are shared across ranks so each q means the same anchors
    // on every curve.
    std::vector<std::vector<Anchor>> anchor_sets;
    for (int q : config.anchor_counts) {
        if (static_cast<std::size_t>(q) > train.size()) {
            throw InsufficientEntriesError("anchor count " + std::to_string(q) +
                                           " exceeds training entries " +
                                           std::to_string(train.size()));
        }
        anchor_sets.push_back(sample_anchors_with_replacement_policy(
            train, dm, kcfg, q, derive_seed(config.seed, kAnchorStream, static_cast<std::uint64_t>(q)),
            log));
        if (anchor_sets.back().size() < static_cast<std::size_t>(q)) {
            log << "[llrma] only " << anchor_sets.back().size() << " of " << q
                << " requested anchors have non-empty neighborhoods\n";
        }
    }

    std::vector<MetricsRow> rows;
    for (int rank : config.ranks) {
        Stopwatch global_watch;
        const FactorPair global = fit_global_model(
            train, config, rank, derive_seed(config.seed, kGlobalStream, static_cast<std::uint64_t>(rank)));
        const EvalMetrics gm = evaluate_global(global, train, test);
        log << "[llrma] global rank " << rank << ": rmse " << gm.rmse << " ("
            << global_watch.ms() << " ms)\n";
        rows.push_back({"global", rank, 0, gm.rmse, gm.coverage, gm.fallback_unseen,
                        gm.fallback_empty});

        for (std::size_t qi = 0; qi < anchor_sets.size(); ++qi) {
            const auto& anchors = anchor_sets[qi];
            Stopwatch local_watch;
            const std::uint64_t local_seed =
                derive_seed(config.seed, kLocalStream,
                            (static_cast<std::uint64_t>(rank) << 32) ^
                                static_cast<std::uint64_t>(config.anchor_counts[qi]));
            const std::vector<LocalModel> locals =
                fit_local_models(train, anchors, dm, kcfg, config, rank, local_seed);
            const EnsembleModel ensemble =
                EnsembleModel::assemble(locals, dm, kcfg, global, train);
            const EvalMetrics lm = evaluate(ensemble, test);
            log << "[llrma] local rank " << rank << " q " << anchors.size() << ": rmse "
                << lm.rmse << ", coverage " << lm.coverage << " (" << local_watch.ms()
                << " ms)\n";
            rows.push_back({"local", rank, static_cast<int>(anchors.size()), lm.rmse, lm.coverage,
                            lm.fallback_unseen, lm.fallback_empty});
        }
    }
    log << "[llrma] sweep finished in " << total.ms() << " ms\n";
    return rows;
}

std::vector<MetricsRow> run_experiment(const ExperimentConfig& config, std::ostream& log) {
    std::ifstream in(config.input_path);
    if (!in) {
        throw IoError("cannot open input file '" + config.input_path + "'");
    }
    const RatingsFile data = parse_ratings(in, config.format);
    log << "[llrma] parsed " << data.matrix.size() << " ratings, " << data.matrix.rows()
        << " rows x " << data.matrix.cols() << " cols\n";
    std::vector<MetricsRow> rows = run_experiment(data.matrix, config, log);
    if (!config.output_path.empty()) {
        emit_series(rows, config.output_path);
        log << "[llrma] wrote " << rows.size() << " rows to " << config.output_path << "\n";
    }
    return rows;
}

void emit_series(const std::vector<MetricsRow>& table, std::ostream& out) {
    if (table.empty()) {
        throw EmptyInputError("metrics table is empty");
    }
    std::vector<MetricsRow> sorted = table;
    std::sort(sorted.begin(), sorted.end(), [](const MetricsRow& a, const MetricsRow& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.rank != b.rank) return a.rank < b.rank;
        return a.q < b.q;
    });
    out << "kind,rank,q,rmse,coverage,fallback_unseen,fallback_empty\n";
    for (const auto& r : sorted) {
        out << r.kind << ',' << r.rank << ',' << r.q << ',' << format_double(r.rmse) << ','
            << format_double(r.coverage) << ',' << r.fallback_unseen << ',' << r.fallback_empty
            << '\n';
    }
}

void emit_series(const std::vector<MetricsRow>& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open output file '" + path + "'");
    }
    emit_series(table, out);
    if (!out) {
        throw IoError("failed writing output file '" + path + "'");
    }
}

std::vector<MetricsRow> parse_series(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("empty series file");
    }
    std::vector<MetricsRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRow r;
        std::string field;
        try {
            std::getline(ss, r.kind, ',');
            std::getline(ss, field, ',');
            r.rank = std::stoi(field);
            std::getline(ss, field, ',');
            r.q = std::stoi(field);
            std::getline(ss, field, ',');
            r.rmse = std::stod(field);
            std::getline(ss, field, ',');
            r.coverage = std::stod(field);
            std::getline(ss, field, ',');
            r.fallback_unseen = std::stoul(field);
            std::getline(ss, field, ',');
            r.fallback_empty = std::stoul(field);
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed series row '" + line + "'");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace llrma
