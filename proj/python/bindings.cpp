#include "feti_sqp/bench.hpp"
#include "feti_sqp/errors.hpp"
#include "feti_sqp/fem.hpp"
#include "feti_sqp/kkt.hpp"
#include "feti_sqp/oracle.hpp"
#include "feti_sqp/qn.hpp"
#include "feti_sqp/sqp.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace feti_sqp;

namespace {

RowSparseMatrix to_sparse(const Matrix& dense) { return dense.sparseView(); }

py::dict report_dict(const SolveReport& r) {
    py::list iterations;
    for (const auto& rec : r.trace) {
        py::dict d;
        d["k"] = rec.k;
        d["merit"] = rec.merit;
        d["grad_norm"] = rec.grad_norm;
        d["constraint_norm"] = rec.constraint_norm;
        d["mu_prev"] = rec.mu_prev;
        d["mu"] = rec.mu;
        d["delta_lambda_norm"] = rec.delta_lambda_norm;
        d["directional_derivative"] = rec.directional_derivative;
        d["alpha"] = rec.alpha;
        d["merit_change"] = rec.merit_change;
        d["sigma"] = rec.sigma;
        d["krylov"] = rec.krylov;
        d["fresh_hessian"] = rec.fresh_hessian;
        d["restart"] = rec.restart;
        d["preconditioner_builds"] = rec.preconditioner_builds;
        d["hessian_factorizations"] = rec.hessian_factorizations;
        iterations.append(d);
    }
    py::dict d;
    d["solver"] = r.solver;
    d["converged"] = r.converged;
    d["message"] = r.message;
    d["outer_iterations"] = r.outer_iterations;
    d["krylov_iterations"] = r.total_krylov_iterations;
    d["hessian_recomputations"] = r.hessian_recomputations;
    d["preconditioner_builds"] = r.preconditioner_builds;
    d["solve_seconds"] = r.solve_seconds;
    d["final_grad_norm"] = r.final_grad_norm;
    d["iterations"] = iterations;
    return d;
}

py::tuple solve_tuple(const SolveResult& r) { return py::make_tuple(r.u, r.lambda, report_dict(r.report)); }

py::dict row_dict(const BenchRow& row) {
    py::dict d;
    d["solver"] = row.solver;
    d["n_subdomains"] = row.n_subdomains;
    d["n_dofs_total"] = row.n_dofs_total;
    d["n_coarse_dofs"] = row.n_coarse_dofs;
    d["solve_seconds"] = row.solve_seconds;
    d["outer_iterations"] = row.outer_iterations;
    d["krylov_iterations"] = row.krylov_iterations;
    d["hessian_recomputations"] = row.hessian_recomputations;
    d["converged"] = row.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonlinear FETI-DP with SQP and inverse BFGS";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<InadmissibleDeformation>(m, "InadmissibleDeformation", error.ptr());
    py::register_exception<FactorizationError>(m, "FactorizationError", error.ptr());
    py::register_exception<KrylovError>(m, "KrylovError", error.ptr());

    m.def("lame_from_E_nu", &lame_from_E_nu, py::arg("E"), py::arg("nu"));
    m.def(
        "energy_density",
        [](const Eigen::Matrix2d& F, double E, double nu) {
            return energy_density<2>(F, Material::from_E_nu(E, nu), 2.0);
        },
        py::arg("F"), py::arg("E") = 210.0, py::arg("nu") = 0.3);

    py::enum_<RestartRule>(m, "RestartRule")
        .value("InsufficientDecrease", RestartRule::InsufficientDecrease)
        .value("AsPrinted", RestartRule::AsPrinted);

    py::class_<SqpConfig>(m, "SqpConfig")
        .def(py::init<>())
        .def_readwrite("eps_tol", &SqpConfig::eps_tol)
        .def_readwrite("eps_update", &SqpConfig::eps_update)
        .def_readwrite("mu0", &SqpConfig::mu0)
        .def_readwrite("eta1", &SqpConfig::eta1)
        .def_readwrite("eta2", &SqpConfig::eta2)
        .def_readwrite("sigma", &SqpConfig::sigma)
        .def_readwrite("beta", &SqpConfig::beta)
        .def_readwrite("alpha_min", &SqpConfig::alpha_min)
        .def_readwrite("max_outer", &SqpConfig::max_outer)
        .def_readwrite("restart_rule", &SqpConfig::restart_rule)
        .def_readwrite("use_preconditioner", &SqpConfig::use_preconditioner)
        .def_property(
            "memory", [](const SqpConfig& c) { return c.qn.memory; }, [](SqpConfig& c, int v) { c.qn.memory = v; })
        .def_property(
            "krylov_tol", [](const SqpConfig& c) { return c.krylov.tol; },
            [](SqpConfig& c, double v) { c.krylov.tol = v; })
        .def_property(
            "krylov_max_iters", [](const SqpConfig& c) { return c.krylov.max_iters; },
            [](SqpConfig& c, int v) { c.krylov.max_iters = v; })
        .def("validate", &SqpConfig::validate);

    py::class_<ConstrainedProblem, std::shared_ptr<ConstrainedProblem>>(m, "ConstrainedProblem")
        .def_property_readonly("size", &ConstrainedProblem::size)
        .def_property_readonly("n_constraints", [](const ConstrainedProblem& p) { return p.constraints().rows(); })
        .def("constraints", [](const ConstrainedProblem& p) { return SparseMatrix(p.constraints()); })
        .def("objective", &ConstrainedProblem::objective, py::arg("u"))
        .def("gradient", &ConstrainedProblem::gradient, py::arg("u"));

    py::class_<QuadraticProblem, ConstrainedProblem, std::shared_ptr<QuadraticProblem>>(m, "QuadraticProblem")
        .def(py::init([](const Matrix& a, const Vector& b, const Matrix& constraints) {
                 return std::make_shared<QuadraticProblem>(a, b, to_sparse(constraints));
             }),
             py::arg("A"), py::arg("b"), py::arg("B"));

    py::class_<FetiProblem, ConstrainedProblem, std::shared_ptr<FetiProblem>>(m, "FetiProblem")
        .def(py::init([](double lx, double ly, int nx, int ny, int order, int n1, int n2, double E, double nu,
                         double load, int threads) {
                 RunConfig c;
                 c.lx = lx;
                 c.ly = ly;
                 c.nx = nx;
                 c.ny = ny;
                 c.order = order;
                 c.n1 = n1;
                 c.n2 = n2;
                 c.E = E;
                 c.nu = nu;
                 c.load = load;
                 c.threads = threads;
                 return std::shared_ptr<FetiProblem>(build_problem(c));
             }),
             py::arg("lx") = 8.0, py::arg("ly") = 1.0, py::arg("nx") = 80, py::arg("ny") = 40, py::arg("order") = 2,
             py::arg("n1") = 4, py::arg("n2") = 2, py::arg("E") = 210.0, py::arg("nu") = 0.3, py::arg("load") = 0.1,
             py::arg("threads") = 0)
        .def_property_readonly("n_subdomains",
                               [](const FetiProblem& p) { return p.decomposition().num_subdomains(); })
        .def_property_readonly("n_coarse_dofs", [](const FetiProblem& p) { return p.layout().n_primal; })
        .def_property_readonly("n_global_dofs", [](const FetiProblem& p) { return p.mesh().num_dofs(); })
        .def_property_readonly("traction", &FetiProblem::traction)
        .def("scatter", [](const FetiProblem& p, const Vector& global) { return scatter_global(p.layout(), global); },
             py::arg("u_global"))
        .def("gather", [](const FetiProblem& p, const Vector& torn) { return gather_average(p.layout(), torn); },
             py::arg("u"))
        .def("node_coords", [](const FetiProblem& p) { return Matrix(p.mesh().coords); });

    py::class_<QnState>(m, "QnState")
        .def(py::init([](const Matrix& base, int memory, double curvature) {
                 return QnState(std::make_shared<DenseSymmetricSolve>(base), QnOptions{memory, curvature});
             }),
             py::arg("base"), py::arg("memory") = 50, py::arg("curvature") = 1e-8)
        .def("update", &QnState::update, py::arg("d"), py::arg("y"))
        .def("apply_inverse", &QnState::apply_inverse, py::arg("v"))
        .def(
            "restart", [](QnState& q, const Matrix& base) { q.restart(std::make_shared<DenseSymmetricSolve>(base)); },
            py::arg("base"))
        .def_property_readonly("pair_count", &QnState::pair_count);

    m.def(
        "solve_kkt",
        [](const Matrix& h, const Matrix& b, const Vector& grad, const Vector& bu, double tol, int max_iters) {
            const KktStep s =
                solve_kkt(DenseSymmetricSolve(h), to_sparse(b), grad, bu, nullptr, KrylovConfig{tol, max_iters});
            return py::make_tuple(s.delta_u, s.delta_lambda, s.krylov_iterations);
        },
        py::arg("H"), py::arg("B"), py::arg("grad"), py::arg("Bu"), py::arg("tol") = 1e-12,
        py::arg("max_iters") = 500);

    m.def("merit_p1", &merit_p1, py::arg("problem"), py::arg("u"), py::arg("mu"));
    m.def("merit_dp", &merit_dp, py::arg("problem"), py::arg("u"), py::arg("lam"), py::arg("mu"));
    m.def("lagrangian_grad", &lagrangian_grad, py::arg("problem"), py::arg("u"), py::arg("lam"));
    m.def("penalty_update", py::overload_cast<double, double, double>(&penalty_update), py::arg("mu"),
          py::arg("delta_lambda_norm"), py::arg("eps_update"));
    m.def("restart_check", &restart_check, py::arg("merit_prev"), py::arg("merit_next"), py::arg("grad_prev"),
          py::arg("grad_next"), py::arg("eta1"), py::arg("eta2"),
          py::arg("rule") = RestartRule::InsufficientDecrease);

    m.def(
        "sqp_solve",
        [](const ConstrainedProblem& p, const SqpConfig& c, Vector u0) {
            py::gil_scoped_release release;
            SolveResult r = sqp_solve(p, c, std::move(u0));
            py::gil_scoped_acquire acquire;
            return solve_tuple(r);
        },
        py::arg("problem"), py::arg("config") = SqpConfig{}, py::arg("u0") = Vector());
    m.def(
        "newton_baseline_solve",
        [](const ConstrainedProblem& p, const SqpConfig& c, Vector u0) {
            py::gil_scoped_release release;
            SolveResult r = newton_baseline_solve(p, c, std::move(u0));
            py::gil_scoped_acquire acquire;
            return solve_tuple(r);
        },
        py::arg("problem"), py::arg("config") = SqpConfig{}, py::arg("u0") = Vector());
    m.def(
        "oracle_solve",
        [](const FetiProblem& p, double eps_tol) {
            const OracleResult r = oracle_newton_solve(p.mesh(), p.material(), p.traction(), eps_tol);
            if (!r.converged) throw Error(r.message);
            return py::make_tuple(r.u, r.iterations);
        },
        py::arg("problem"), py::arg("eps_tol") = kOracleTolerance);

    m.def(
        "check_config", [](const std::string& text) { parse_config_text(text).validate(); }, py::arg("text"));
    m.def(
        "run_benchmark",
        [](const std::string& text, const std::string& out_dir, const std::string& solver) {
            RunConfig c = parse_config_text(text);
            if (!out_dir.empty()) c.out_dir = out_dir;
            if (!solver.empty()) c.solver = parse_solver(solver);
            std::ostringstream log;
            BenchOutcome out;
            {
                py::gil_scoped_release release;
                out = run_benchmark(c, log);
            }
            py::list rows;
            for (const auto& row : out.rows) rows.append(row_dict(row));
            py::dict d;
            d["rows"] = rows;
            d["exit_code"] = out.exit_code;
            d["log"] = log.str();
            d["oracle_difference"] = out.oracle_difference ? py::cast(*out.oracle_difference) : py::none();
            return d;
        },
        py::arg("config_json"), py::arg("out_dir") = "", py::arg("solver") = "");
    m.attr("CSV_HEADER") = kCsvHeader;
}
