// Command line front end: `experiment` sweeps global and local-ensemble
// models over rank x anchor-count grids; `complete` runs the dense
// nuclear-norm solver on one matrix.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "llrma/experiment.hpp"
#include "llrma/svt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

std::vector<int> parse_int_list(const std::string& csv, const std::string& flag) {
    std::vector<int> out;
    std::istringstream ss(csv);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(field, &used);
            if (used != field.size()) throw std::invalid_argument(field);
            out.push_back(v);
        } catch (const std::exception&) {
            throw llrma::ConfigError("bad value '" + field + "' in " + flag);
        }
    }
    if (out.empty()) {
        throw llrma::ConfigError(flag + " must name at least one value");
    }
    return out;
}

struct ExperimentFlags {
    std::string input;
    std::string format = "tsv";
    double test_fraction = 0.1;
    std::string ranks = "5";
    std::string anchors = "50";
    double h1 = 0.8;
    double h2 = 0.8;
    std::string kernel = "epanechnikov";
    double lambda = 0.01;
    double learning_rate = 0.01;
    int max_epochs = 100;
    double tolerance = 1e-4;
    std::string solver = "als";
    int distance_rank = 10;
    std::uint64_t seed = 0;
    std::string out;
};

// "key = value" config lines, same names as the long flags; values from the
// file fill in only the options not given on the command line.
void apply_config_file(const std::string& path, const CLI::App& cmd, ExperimentFlags& f) {
    std::ifstream in(path);
    if (!in) {
        throw llrma::ConfigError("cannot open config file '" + path + "'");
    }
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    auto flag_given = [&](const std::string& name) {
        return cmd.get_option(name)->count() > 0;
    };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw llrma::ConfigError("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "input") {
                if (!flag_given("--input")) f.input = value;
            } else if (key == "format") {
                if (!flag_given("--format")) f.format = value;
            } else if (key == "test-fraction") {
                if (!flag_given("--test-fraction")) f.test_fraction = std::stod(value);
            } else if (key == "ranks") {
                if (!flag_given("--ranks")) f.ranks = value;
            } else if (key == "anchors") {
                if (!flag_given("--anchors")) f.anchors = value;
            } else if (key == "h1") {
                if (!flag_given("--h1")) f.h1 = std::stod(value);
            } else if (key == "h2") {
                if (!flag_given("--h2")) f.h2 = std::stod(value);
            } else if (key == "kernel") {
                if (!flag_given("--kernel")) f.kernel = value;
            } else if (key == "lambda") {
                if (!flag_given("--lambda")) f.lambda = std::stod(value);
            } else if (key == "learning-rate") {
                if (!flag_given("--learning-rate")) f.learning_rate = std::stod(value);
            } else if (key == "max-epochs") {
                if (!flag_given("--max-epochs")) f.max_epochs = std::stoi(value);
            } else if (key == "tolerance") {
                if (!flag_given("--tolerance")) f.tolerance = std::stod(value);
            } else if (key == "solver") {
                if (!flag_given("--solver")) f.solver = value;
            } else if (key == "distance-rank") {
                if (!flag_given("--distance-rank")) f.distance_rank = std::stoi(value);
            } else if (key == "seed") {
                if (!flag_given("--seed")) f.seed = std::stoull(value);
            } else if (key == "out") {
                if (!flag_given("--out")) f.out = value;
            } else {
                throw llrma::ConfigError("config line " + std::to_string(line_no) +
                                         ": unknown key '" + key + "'");
            }
        } catch (const llrma::Error&) {
            throw;
        } catch (const std::exception&) {
            throw llrma::ConfigError("config line " + std::to_string(line_no) +
                                     ": bad value '" + value + "' for " + key);
        }
    }
}

int run_experiment_command(const ExperimentFlags& flags) {
    if (flags.input.empty()) {
        throw llrma::ConfigError("--input is required (flag or config file)");
    }
    llrma::ExperimentConfig cfg;
    cfg.input_path = flags.input;
    cfg.format = llrma::ratings_format_from_string(flags.format);
    cfg.test_fraction = flags.test_fraction;
    cfg.ranks = parse_int_list(flags.ranks, "--ranks");
    cfg.anchor_counts = parse_int_list(flags.anchors, "--anchors");
    cfg.h1 = flags.h1;
    cfg.h2 = flags.h2;
    if (flags.kernel == "epanechnikov") {
        cfg.kernel = llrma::KernelKind::Epanechnikov;
    } else if (flags.kernel == "uniform") {
        cfg.kernel = llrma::KernelKind::Uniform;
    } else {
        throw llrma::ConfigError("unknown kernel '" + flags.kernel + "'");
    }
    cfg.lambda = flags.lambda;
    cfg.learning_rate = flags.learning_rate;
    cfg.max_epochs = flags.max_epochs;
    cfg.tolerance = flags.tolerance;
    cfg.solver = llrma::solver_tag_from_string(flags.solver);
    cfg.distance_rank = flags.distance_rank;
    cfg.seed = flags.seed;
    cfg.output_path = flags.out;

    const auto rows = llrma::run_experiment(cfg, std::cerr);
    if (cfg.output_path.empty()) {
        llrma::emit_series(rows, std::cout);
    }
    return kExitOk;
}

struct CompleteFlags {
    std::string input;
    std::string format = "tsv";
    double tau = 0.0;
    double step = 1.0;
    int max_iters = 500;
    double alpha = 0.0;
    double tolerance = 1e-6;
    std::string out;
    std::string report;
};

int run_complete_command(const CompleteFlags& flags) {
    std::ifstream in(flags.input);
    if (!in) {
        throw llrma::IoError("cannot open input file '" + flags.input + "'");
    }
    const llrma::RatingsFile data =
        llrma::parse_ratings(in, llrma::ratings_format_from_string(flags.format));
    llrma::SvtConfig cfg;
    cfg.tau = flags.tau;
    cfg.step = flags.step;
    cfg.max_iters = flags.max_iters;
    cfg.alpha = flags.alpha;
    cfg.tolerance = flags.tolerance;

    const llrma::SvtResult res = llrma::svt_complete(data.matrix, cfg);
    std::cerr << "[llrma] " << res.report.iterations << " iterations, residual "
              << res.report.residual << ", nuclear norm " << res.report.nuclear_norm
              << (res.report.converged ? "" : " (not converged)") << "\n";

    auto write_matrix_csv = [&](std::ostream& os) {
        char buf[64];
        for (Eigen::Index i = 0; i < res.completed.rows(); ++i) {
            for (Eigen::Index j = 0; j < res.completed.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", res.completed(i, j));
                if (j) os << ',';
                os << buf;
            }
            os << '\n';
        }
    };
    if (flags.out.empty()) {
        write_matrix_csv(std::cout);
    } else {
        std::ofstream os(flags.out);
        if (!os) throw llrma::IoError("cannot open output file '" + flags.out + "'");
        write_matrix_csv(os);
    }

    if (!flags.report.empty()) {
        std::ofstream rs(flags.report);
        if (!rs) throw llrma::IoError("cannot open report file '" + flags.report + "'");
        for (std::size_t k = 0; k < res.report.residual_history.size(); ++k) {
            nlohmann::json line{{"iter", k + 1},
                                {"objective", res.report.objective_history[k]},
                                {"residual", res.report.residual_history[k]}};
            rs << line.dump() << '\n';
        }
        nlohmann::json final_line{{"final", true},
                                  {"iterations", res.report.iterations},
                                  {"residual", res.report.residual},
                                  {"nuclear_norm", res.report.nuclear_norm},
                                  {"converged", res.report.converged},
                                  {"feasible", res.report.feasible}};
        rs << final_line.dump() << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local low-rank matrix approximation toolkit"};
    app.require_subcommand(1);

    ExperimentFlags ef;
    std::string config_path;
    CLI::App* exp = app.add_subcommand(
        "experiment", "Split, train global and local-ensemble models, report test RMSE");
    exp->add_option("--config", config_path, "Config file with key=value lines (flags override it)");
    // not ->required(): the value may come from the config file instead
    exp->add_option("--input", ef.input, "Ratings file");
    exp->add_option("--format", ef.format, "Input format: movielens-dat, tsv or csv");
    exp->add_option("--test-fraction", ef.test_fraction, "Held-out fraction (default 0.1)");
    exp->add_option("--ranks", ef.ranks, "Comma-separated rank list, e.g. 1,2,5");
    exp->add_option("--anchors", ef.anchors, "Comma-separated anchor counts, e.g. 10,20,50");
    exp->add_option("--h1", ef.h1, "Row bandwidth (default 0.8)");
    exp->add_option("--h2", ef.h2, "Column bandwidth (default 0.8)");
    exp->add_option("--kernel", ef.kernel, "Smoothing kernel: epanechnikov or uniform");
    exp->add_option("--lambda", ef.lambda, "L2 coefficient (default 0.01)");
    exp->add_option("--learning-rate", ef.learning_rate, "SGD learning rate");
    exp->add_option("--max-epochs", ef.max_epochs, "Training epoch cap");
    exp->add_option("--tolerance", ef.tolerance, "Relative loss-change stop threshold");
    exp->add_option("--solver", ef.solver, "als, sgd or svt");
    exp->add_option("--distance-rank", ef.distance_rank, "Rank of the distance-feature fit");
    exp->add_option("--seed", ef.seed, "Master RNG seed");
    exp->add_option("--out", ef.out, "Output CSV path (stdout when omitted)");

    CompleteFlags cf;
    CLI::App* comp = app.add_subcommand(
        "complete", "Dense nuclear-norm completion of a small ratings matrix");
    comp->add_option("--input", cf.input, "Ratings file")->required();
    comp->add_option("--format", cf.format, "Input format: movielens-dat, tsv or csv");
    comp->add_option("--tau", cf.tau, "Singular-value threshold (0 = heuristic)");
    comp->add_option("--step", cf.step, "Gradient step (default 1.0)");
    comp->add_option("--max-iters", cf.max_iters, "Iteration cap (default 500)");
    comp->add_option("--alpha", cf.alpha, "Feasibility radius (0 disables the check)");
    comp->add_option("--tolerance", cf.tolerance, "Relative iterate-change stop threshold");
    comp->add_option("--out", cf.out, "Completed matrix CSV (stdout when omitted)");
    comp->add_option("--report", cf.report, "JSON-lines run report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (exp->parsed()) {
            if (!config_path.empty()) apply_config_file(config_path, *exp, ef);
            return run_experiment_command(ef);
        }
        if (comp->parsed()) return run_complete_command(cf);
    } catch (const llrma::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const llrma::RangeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const llrma::DuplicateError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const llrma::EmptyInputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const llrma::IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const llrma::DivergenceError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const llrma::EmptyNeighborhoodError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const llrma::Error& e) {
        // remaining library errors are configuration problems: bad flags,
        // infeasible sweeps, size caps
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
    return kExitOk;
}
