#pragma once

#include "feti_sqp/problem.hpp"
#include "feti_sqp/sqp.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace feti_sqp {

enum class SolverSelection { SqpQn, NewtonP, Both, Oracle };

std::string to_string(SolverSelection s);
/// Accepts "sqp-qn", "newton-p", "both", "oracle"; throws ConfigError otherwise.
SolverSelection parse_solver(const std::string& name);

/// One benchmark run. Defaults describe the desk-scale cantilever.
struct RunConfig {
    double lx = 8.0;
    double ly = 1.0;
    int nx = 80;
    int ny = 40;
    int order = 2;
    int n1 = 4;
    int n2 = 2;
    double E = 210.0;
    double nu = 0.3;
    double load = 0.1;   ///< downward traction on the free end (force per unit length)
    SolverSelection solver = SolverSelection::Both;
    SqpConfig sqp;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double perturbation = 0.0;  ///< amplitude of a random torn perturbation of the initial guess
    int threads = 0;            ///< 0: FETI_SQP_THREADS or 1

    /// Throws ConfigError listing every violated constraint.
    void validate() const;
};

/// Reads and validates a JSON run configuration. Unknown keys are rejected.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<string>");

std::unique_ptr<FetiProblem> build_problem(const RunConfig& config);

/// Initial torn iterate: zero, or a seeded random perturbation of the free dofs.
Vector initial_guess(const FetiProblem& problem, const RunConfig& config);

/// Global displacement from the monolithic Newton oracle. Throws Error on
/// nonconvergence.
Vector oracle_solve(const RunConfig& config);

inline constexpr const char* kCsvHeader =
    "solver,n_subdomains,n_dofs_total,n_coarse_dofs,solve_seconds,outer_iterations,krylov_iterations,"
    "hessian_recomputations,converged";

struct BenchRow {
    std::string solver;
    int n_subdomains = 0;
    long n_dofs_total = 0;  ///< torn unknowns plus Lagrange multipliers
    int n_coarse_dofs = 0;
    double solve_seconds = 0.0;
    int outer_iterations = 0;
    long krylov_iterations = 0;
    int hessian_recomputations = 0;
    bool converged = false;
};

std::string format_csv_row(const BenchRow& row);

struct BenchOutcome {
    std::vector<BenchRow> rows;
    std::vector<SolveReport> reports;
    std::optional<double> oracle_difference;  ///< |u_oracle - gather(u)|_inf in oracle mode
    int exit_code = 0;
};

/// Runs the configured solvers, writes results.csv and trace.json into
/// config.out_dir and returns 0 if every solver converged, 2 otherwise.
BenchOutcome run_benchmark(const RunConfig& config, std::ostream& log);

}  // namespace feti_sqp
