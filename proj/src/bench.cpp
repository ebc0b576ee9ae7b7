#include "feti_sqp/bench.hpp"

#include "feti_sqp/errors.hpp"
#include "feti_sqp/oracle.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace feti_sqp {

using nlohmann::json;

std::string to_string(SolverSelection s) {
    switch (s) {
        case SolverSelection::SqpQn: return "sqp-qn";
        case SolverSelection::NewtonP: return "newton-p";
        case SolverSelection::Both: return "both";
        case SolverSelection::Oracle: return "oracle";
    }
    return "?";
}

SolverSelection parse_solver(const std::string& name) {
    if (name == "sqp-qn") return SolverSelection::SqpQn;
    if (name == "newton-p") return SolverSelection::NewtonP;
    if (name == "both") return SolverSelection::Both;
    if (name == "oracle") return SolverSelection::Oracle;
    throw ConfigError("solver: unknown solver '" + name + "' (expected sqp-qn, newton-p, both or oracle)");
}

void RunConfig::validate() const {
    std::vector<std::string> errors;
    if (!(lx > 0.0)) errors.push_back("geometry.lx must be > 0");
    if (!(ly > 0.0)) errors.push_back("geometry.ly must be > 0");
    if (nx <= 0) errors.push_back("geometry.nx must be > 0");
    if (ny <= 0) errors.push_back("geometry.ny must be > 0");
    if (order != 1 && order != 2) errors.push_back("order must be 1 or 2, got " + std::to_string(order));
    if (n1 <= 0) errors.push_back("subdomains.n1 must be > 0");
    if (n2 <= 0) errors.push_back("subdomains.n2 must be > 0");
    if (n1 > 0 && nx > 0 && nx % n1 != 0) {
        errors.push_back("subdomains.n1 = " + std::to_string(n1) + " does not divide geometry.nx = " + std::to_string(nx));
    }
    if (n2 > 0 && ny > 0 && ny % n2 != 0) {
        errors.push_back("subdomains.n2 = " + std::to_string(n2) + " does not divide geometry.ny = " + std::to_string(ny));
    }
    if (!(E > 0.0)) errors.push_back("material.E must be > 0");
    if (!(nu >= 0.0 && nu < 0.5)) errors.push_back("material.nu must lie in [0, 0.5)");
    if (!std::isfinite(load)) errors.push_back("load must be finite");
    if (!(perturbation >= 0.0)) errors.push_back("perturbation must be >= 0");
    if (threads < 0) errors.push_back("threads must be >= 0");
    try {
        sqp.validate();
    } catch (const ConfigError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line)) errors.push_back("sqp/krylov: " + line.substr(line.find_first_not_of(' ')));
    }
    if (errors.empty()) return;
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
}

namespace {

void reject_unknown(const json& object, const std::string& where, const std::set<std::string>& allowed,
                    std::vector<std::string>& errors) {
    if (!object.is_object()) {
        errors.push_back(where + " must be an object");
        return;
    }
    for (const auto& [key, value] : object.items()) {
        if (!allowed.count(key)) errors.push_back("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

template <typename T>
void read(const json& object, const std::string& where, const char* key, T& target, std::vector<std::string>& errors,
          bool required = false) {
    const std::string field = where.empty() ? key : where + "." + key;
    if (!object.is_object() || !object.contains(key)) {
        if (required) errors.push_back("missing required field '" + field + "'");
        return;
    }
    const json& v = object.at(key);
    try {
        if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_integer()) throw ConfigError("expected an integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError("expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("expected a boolean");
        } else {
            if (!v.is_string()) throw ConfigError("expected a string");
        }
        target = v.get<T>();
    } catch (const std::exception& e) {
        errors.push_back("field '" + field + "': " + e.what());
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset -> line/column for the diagnostic.
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                          ": JSON parse error: " + e.what());
    }

    RunConfig c;
    std::vector<std::string> errors;
    reject_unknown(doc, "",
                   {"geometry", "order", "subdomains", "material", "load", "solver", "sqp", "krylov", "output", "seed",
                    "perturbation", "threads"},
                   errors);
    if (!doc.is_object()) throw ConfigError(source + ": top level must be a JSON object");

    if (!doc.contains("geometry")) errors.push_back("missing required field 'geometry'");
    if (!doc.contains("subdomains")) errors.push_back("missing required field 'subdomains'");
    if (doc.contains("geometry")) {
        const json& g = doc["geometry"];
        reject_unknown(g, "geometry", {"lx", "ly", "nx", "ny"}, errors);
        read(g, "geometry", "lx", c.lx, errors);
        read(g, "geometry", "ly", c.ly, errors);
        read(g, "geometry", "nx", c.nx, errors, true);
        read(g, "geometry", "ny", c.ny, errors, true);
    }
    if (doc.contains("subdomains")) {
        const json& s = doc["subdomains"];
        reject_unknown(s, "subdomains", {"n1", "n2"}, errors);
        read(s, "subdomains", "n1", c.n1, errors, true);
        read(s, "subdomains", "n2", c.n2, errors, true);
    }
    read(doc, "", "order", c.order, errors);
    if (doc.contains("material")) {
        const json& m = doc["material"];
        reject_unknown(m, "material", {"E", "nu"}, errors);
        read(m, "material", "E", c.E, errors);
        read(m, "material", "nu", c.nu, errors);
    }
    read(doc, "", "load", c.load, errors);
    std::string solver = to_string(c.solver);
    read(doc, "", "solver", solver, errors);
    try {
        c.solver = parse_solver(solver);
    } catch (const ConfigError& e) {
        errors.push_back(e.what());
    }
    if (doc.contains("sqp")) {
        const json& s = doc["sqp"];
        reject_unknown(s, "sqp",
                       {"eps_tol", "eps_update", "mu0", "eta1", "eta2", "sigma", "beta", "alpha_min", "max_outer",
                        "memory", "curvature", "restart_rule", "preconditioner"},
                       errors);
        read(s, "sqp", "eps_tol", c.sqp.eps_tol, errors);
        read(s, "sqp", "eps_update", c.sqp.eps_update, errors);
        read(s, "sqp", "mu0", c.sqp.mu0, errors);
        read(s, "sqp", "eta1", c.sqp.eta1, errors);
        read(s, "sqp", "eta2", c.sqp.eta2, errors);
        read(s, "sqp", "sigma", c.sqp.sigma, errors);
        read(s, "sqp", "beta", c.sqp.beta, errors);
        read(s, "sqp", "alpha_min", c.sqp.alpha_min, errors);
        read(s, "sqp", "max_outer", c.sqp.max_outer, errors);
        read(s, "sqp", "memory", c.sqp.qn.memory, errors);
        read(s, "sqp", "curvature", c.sqp.qn.curvature, errors);
        read(s, "sqp", "preconditioner", c.sqp.use_preconditioner, errors);
        std::string rule = "insufficient-decrease";
        read(s, "sqp", "restart_rule", rule, errors);
        if (rule == "insufficient-decrease") {
            c.sqp.restart_rule = RestartRule::InsufficientDecrease;
        } else if (rule == "as-printed") {
            c.sqp.restart_rule = RestartRule::AsPrinted;
        } else {
            errors.push_back("sqp.restart_rule must be 'insufficient-decrease' or 'as-printed'");
        }
    }
    if (doc.contains("krylov")) {
        const json& k = doc["krylov"];
        reject_unknown(k, "krylov", {"tol", "max_iters"}, errors);
        read(k, "krylov", "tol", c.sqp.krylov.tol, errors);
        read(k, "krylov", "max_iters", c.sqp.krylov.max_iters, errors);
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        reject_unknown(o, "output", {"dir"}, errors);
        read(o, "output", "dir", c.out_dir, errors);
    }
    read(doc, "", "seed", c.seed, errors);
    read(doc, "", "perturbation", c.perturbation, errors);
    read(doc, "", "threads", c.threads, errors);

    if (!errors.empty()) {
        std::ostringstream os;
        os << source << ": invalid configuration:";
        for (const auto& e : errors) os << "\n  " << e;
        throw ConfigError(os.str());
    }
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path.string());
}

std::unique_ptr<FetiProblem> build_problem(const RunConfig& config) {
    config.validate();
    return std::make_unique<FetiProblem>(make_beam_mesh(config.lx, config.ly, config.nx, config.ny, config.order),
                                         Material::from_E_nu(config.E, config.nu), config.n1, config.n2, config.load,
                                         config.threads);
}

Vector initial_guess(const FetiProblem& problem, const RunConfig& config) {
    Vector u = Vector::Zero(problem.size());
    if (config.perturbation == 0.0) return u;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-config.perturbation, config.perturbation);
    const TornLayout& layout = problem.layout();
    const DofClassification& cls = problem.classification();
    for (const auto& sl : layout.subdomains) {
        for (std::size_t l = 0; l < sl.global_dof.size(); ++l) {
            if (sl.b_index[l] < 0 || cls.kind[sl.global_dof[l]] == DofKind::Fixed) continue;
            u[sl.offset + sl.b_index[l]] = dist(rng);
        }
    }
    for (int p = 0; p < layout.n_primal; ++p) u[layout.primal_offset + p] = dist(rng);
    return u;
}

Vector oracle_solve(const RunConfig& config) {
    config.validate();
    const OracleResult r = oracle_newton_solve(make_beam_mesh(config.lx, config.ly, config.nx, config.ny, config.order),
                                               Material::from_E_nu(config.E, config.nu), config.load);
    if (!r.converged) throw Error(r.message);
    return r.u;
}

std::string format_csv_row(const BenchRow& row) {
    std::ostringstream os;
    os << row.solver << ',' << row.n_subdomains << ',' << row.n_dofs_total << ',' << row.n_coarse_dofs << ','
       << std::fixed << std::setprecision(6) << row.solve_seconds << ',' << row.outer_iterations << ','
       << row.krylov_iterations << ',' << row.hessian_recomputations << ',' << (row.converged ? "true" : "false");
    return os.str();
}

namespace {

json record_to_json(const IterationRecord& r) {
    return json{{"k", r.k},
                {"merit", r.merit},
                {"grad_norm", r.grad_norm},
                {"constraint_norm", r.constraint_norm},
                {"mu_prev", r.mu_prev},
                {"mu", r.mu},
                {"delta_lambda_norm", r.delta_lambda_norm},
                {"directional_derivative", r.directional_derivative},
                {"alpha", r.alpha},
                {"merit_change", r.merit_change},
                {"sigma", r.sigma},
                {"backtracks", r.backtracks},
                {"krylov", r.krylov},
                {"krylov_total", r.krylov_total},
                {"fresh_hessian", r.fresh_hessian},
                {"forced_restarts", r.forced_restarts},
                {"restart", r.restart},
                {"preconditioner_builds", r.preconditioner_builds},
                {"hessian_factorizations", r.hessian_factorizations},
                {"pair_accepted", r.pair_accepted},
                {"armijo_slack", r.armijo_slack},
                {"relaxed_armijo", r.relaxed_armijo}};
}

json report_to_json(const SolveReport& r) {
    json iterations = json::array();
    for (const auto& rec : r.trace) iterations.push_back(record_to_json(rec));
    return json{{"solver", r.solver},
                {"converged", r.converged},
                {"message", r.message},
                {"outer_iterations", r.outer_iterations},
                {"krylov_iterations", r.total_krylov_iterations},
                {"hessian_recomputations", r.hessian_recomputations},
                {"preconditioner_builds", r.preconditioner_builds},
                {"solve_seconds", r.solve_seconds},
                {"final_grad_norm", r.final_grad_norm},
                {"final_constraint_norm", r.final_constraint_norm},
                {"iterations", iterations}};
}

BenchRow make_row(const SolveReport& r, const FetiProblem& problem) {
    BenchRow row;
    row.solver = r.solver;
    row.n_subdomains = problem.decomposition().num_subdomains();
    row.n_dofs_total = static_cast<long>(problem.size() + problem.jump().rows());
    row.n_coarse_dofs = problem.layout().n_primal;
    row.solve_seconds = r.solve_seconds;
    row.outer_iterations = r.outer_iterations;
    row.krylov_iterations = r.total_krylov_iterations;
    row.hessian_recomputations = r.hessian_recomputations;
    row.converged = r.converged;
    return row;
}

}  // namespace

BenchOutcome run_benchmark(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto problem = build_problem(config);
    const Vector u0 = initial_guess(*problem, config);
    BenchOutcome outcome;
    json runs = json::array();

    auto run_solver = [&](SolverSelection which) {
        SolveResult r = which == SolverSelection::NewtonP ? newton_baseline_solve(*problem, config.sqp, u0)
                                                          : sqp_solve(*problem, config.sqp, u0);
        log << r.report.solver << ": " << r.report.message << " after " << r.report.outer_iterations
            << " iterations, " << r.report.total_krylov_iterations << " Krylov iterations, "
            << r.report.hessian_recomputations << " Hessian factorizations\n";
        runs.push_back(report_to_json(r.report));
        outcome.reports.push_back(r.report);
        return r;
    };

    switch (config.solver) {
        case SolverSelection::SqpQn:
            outcome.rows.push_back(make_row(run_solver(SolverSelection::SqpQn).report, *problem));
            break;
        case SolverSelection::NewtonP:
            outcome.rows.push_back(make_row(run_solver(SolverSelection::NewtonP).report, *problem));
            break;
        case SolverSelection::Both:
            outcome.rows.push_back(make_row(run_solver(SolverSelection::SqpQn).report, *problem));
            outcome.rows.push_back(make_row(run_solver(SolverSelection::NewtonP).report, *problem));
            break;
        case SolverSelection::Oracle: {
            const auto start = std::chrono::steady_clock::now();
            const OracleResult oracle = oracle_newton_solve(problem->mesh(), problem->material(), config.load);
            BenchRow row;
            row.solver = "oracle";
            row.n_subdomains = 1;
            row.n_dofs_total = problem->mesh().num_dofs();
            row.n_coarse_dofs = 0;
            row.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            row.outer_iterations = oracle.iterations;
            row.krylov_iterations = 0;
            row.hessian_recomputations = oracle.iterations;
            row.converged = oracle.converged;
            outcome.rows.push_back(row);
            log << "oracle: " << oracle.message << " after " << oracle.iterations << " Newton iterations\n";
            runs.push_back(json{{"solver", "oracle"},
                                {"converged", oracle.converged},
                                {"message", oracle.message},
                                {"outer_iterations", oracle.iterations},
                                {"final_grad_norm", oracle.grad_norm}});
            const SolveResult feti = run_solver(SolverSelection::SqpQn);
            if (oracle.converged && feti.report.converged) {
                const Vector gathered = gather_average(problem->layout(), feti.u);
                outcome.oracle_difference = (oracle.u - gathered).cwiseAbs().maxCoeff();
                log << "oracle comparison: |u_oracle - gather(u_sqp-qn)|_inf = " << std::scientific
                    << std::setprecision(3) << *outcome.oracle_difference << std::defaultfloat << "\n";
            } else {
                row.converged = false;
                outcome.rows.back().converged = false;
            }
            break;
        }
    }

    bool all_converged = true;
    for (const auto& row : outcome.rows) all_converged = all_converged && row.converged;
    for (const auto& rep : outcome.reports) all_converged = all_converged && rep.converged;
    outcome.exit_code = all_converged ? 0 : 2;

    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream csv(dir / "results.csv");
        if (!csv) throw Error("cannot write " + (dir / "results.csv").string());
        csv << kCsvHeader << '\n';
        for (const auto& row : outcome.rows) csv << format_csv_row(row) << '\n';
    }
    {
        json trace{{"config",
                    {{"geometry", {{"lx", config.lx}, {"ly", config.ly}, {"nx", config.nx}, {"ny", config.ny}}},
                     {"order", config.order},
                     {"subdomains", {{"n1", config.n1}, {"n2", config.n2}}},
                     {"material", {{"E", config.E}, {"nu", config.nu}}},
                     {"load", config.load},
                     {"solver", to_string(config.solver)},
                     {"seed", config.seed},
                     {"perturbation", config.perturbation}}},
                   {"runs", runs}};
        if (outcome.oracle_difference) trace["oracle_difference"] = *outcome.oracle_difference;
        std::ofstream out(dir / "trace.json");
        if (!out) throw Error("cannot write " + (dir / "trace.json").string());
        out << trace.dump(2) << '\n';
    }
    return outcome;
}

}  // namespace feti_sqp
