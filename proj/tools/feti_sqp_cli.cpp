#include "feti_sqp/bench.hpp"
#include "feti_sqp/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace feti_sqp;
    CLI::App app{"Nonlinear FETI-DP benchmark driver for the Neo-Hookean cantilever"};
    app.require_subcommand(1);

    std::string config_path;
    std::string solver;
    std::string out_dir;
    int threads = -1;

    auto* run = app.add_subcommand("run", "solve the configured problem and write results.csv and trace.json");
    run->add_option("config", config_path, "JSON run configuration")->required();
    run->add_option("--solver", solver, "sqp-qn, newton-p, both or oracle")
        ->check(CLI::IsMember({"sqp-qn", "newton-p", "both", "oracle"}));
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--threads", threads, "worker threads (0: FETI_SQP_THREADS or 1)")->check(CLI::NonNegativeNumber);

    auto* check = app.add_subcommand("check", "validate a configuration and print the problem sizes");
    check->add_option("config", config_path, "JSON run configuration")->required();

    CLI11_PARSE(app, argc, argv);

    RunConfig config;
    try {
        config = parse_config(config_path);
        if (!solver.empty()) config.solver = parse_solver(solver);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (threads >= 0) config.threads = threads;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (check->parsed()) {
        try {
            const auto problem = build_problem(config);
            std::cout << "configuration OK\n"
                      << "  subdomains:      " << problem->decomposition().num_subdomains() << "\n"
                      << "  global dofs:     " << problem->mesh().num_dofs() << "\n"
                      << "  torn dofs:       " << problem->size() << "\n"
                      << "  multipliers:     " << problem->jump().rows() << "\n"
                      << "  coarse dofs:     " << problem->layout().n_primal << "\n";
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
        return 0;
    }

    try {
        const BenchOutcome outcome = run_benchmark(config, std::cout);
        std::cout << kCsvHeader << "\n";
        for (const auto& row : outcome.rows) std::cout << format_csv_row(row) << "\n";
        return outcome.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
