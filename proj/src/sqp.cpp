#include "feti_sqp/sqp.hpp"

#include "feti_sqp/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace feti_sqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }
double l1_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().sum(); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector zeros_if_empty(Vector v, Index n) {
    if (v.size() == 0) return Vector::Zero(n);
    if (v.size() != n) throw ParameterError("initial vector has wrong size");
    return v;
}

// Solves for the multiplier increment against grad L and returns the full
// multiplier estimate. Equivalent to solving against grad J directly, but the
// primal recovery no longer cancels O(|lambda|) terms, which otherwise leaves
// a jump residual far above the rounding level.
KktStep kkt_step(const LinearSolve& h_inverse, const RowSparseMatrix& b, const Vector& grad_l, const Vector& lambda,
                 const Vector& bu, const LinearOperator* precond, const KrylovConfig& config) {
    KktStep step = solve_kkt(h_inverse, b, grad_l, bu, precond, config);
    step.delta_lambda += lambda;
    return step;
}

}  // namespace

void SqpConfig::validate() const {
    std::vector<std::string> errors;
    if (!(eps_tol > 0.0)) errors.push_back("eps_tol must be > 0");
    if (!(eps_update > 0.0)) errors.push_back("eps_update must be > 0");
    if (!(mu0 > 0.0)) errors.push_back("mu0 must be > 0");
    // eta1 = 0 is accepted: it switches the restart test off.
    if (!(eta1 >= 0.0 && eta1 < 1.0)) errors.push_back("eta1 must lie in [0, 1)");
    if (!(eta2 > 0.0 && eta2 < 1.0)) errors.push_back("eta2 must lie in (0, 1)");
    if (!(sigma > 0.0 && sigma < 1.0)) errors.push_back("sigma must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) errors.push_back("beta must lie in (0, 1)");
    if (!(alpha_min > 0.0 && alpha_min <= 1.0)) errors.push_back("alpha_min must lie in (0, 1]");
    if (max_outer < 0) errors.push_back("max_outer must be >= 0");
    if (qn.memory < 0) errors.push_back("qn memory must be >= 0");
    if (!(qn.curvature > 0.0)) errors.push_back("qn curvature threshold must be > 0");
    if (!(krylov.tol > 0.0)) errors.push_back("krylov tol must be > 0");
    if (krylov.max_iters <= 0) errors.push_back("krylov max_iters must be > 0");
    if (errors.empty()) return;
    std::ostringstream os;
    os << "invalid solver configuration:";
    for (const auto& e : errors) os << "\n  " << e;
    throw ConfigError(os.str());
}

Vector lagrangian_grad(const ConstrainedProblem& problem, const Vector& u, const Vector& lambda) {
    return problem.gradient(u) + problem.constraints().transpose() * lambda;
}

double merit_p1(const ConstrainedProblem& problem, const Vector& u, double mu) {
    try {
        return problem.objective(u) + mu * l1_norm(problem.constraints() * u);
    } catch (const InadmissibleDeformation&) {
        return kInf;
    }
}

double dir_derivative_p1(const Vector& grad_j, const Vector& d, const Vector& bu, double mu) {
    return grad_j.dot(d) - mu * l1_norm(bu);
}

double penalty_update(double mu, double delta_lambda_norm_inf, double eps_update) {
    if (!(eps_update > 0.0)) throw ParameterError("eps_update must be positive");
    return std::max(mu, delta_lambda_norm_inf + eps_update);
}

double penalty_update(double mu, const Vector& delta_lambda, double eps_update) {
    return penalty_update(mu, inf_norm(delta_lambda), eps_update);
}

bool restart_check_change(double merit_change, double merit_prev, double grad_prev, double grad_next, double eta1,
                          double eta2, RestartRule rule) {
    const bool merit_stalled = std::abs(merit_change) < eta1 * std::abs(merit_prev);
    const bool grad_stalled = rule == RestartRule::InsufficientDecrease ? grad_next > (1.0 - eta2) * grad_prev
                                                                        : (1.0 - eta2) * grad_next < grad_prev;
    return merit_stalled && grad_stalled;
}

bool restart_check(double merit_prev, double merit_next, double grad_prev, double grad_next, double eta1, double eta2,
                   RestartRule rule) {
    return restart_check_change(merit_next - merit_prev, merit_prev, grad_prev, grad_next, eta1, eta2, rule);
}

ArmijoResult armijo_backtrack(const std::function<double(double)>& merit_change, double dp, double sigma, double beta,
                              double alpha_min, double slack) {
    if (!(dp < 0.0)) throw ParameterError("Armijo backtracking needs a descent direction (dp < 0)");
    if (!(slack >= 0.0)) throw ParameterError("Armijo slack must be nonnegative");
    ArmijoResult r;
    for (double alpha = 1.0; alpha >= alpha_min; alpha *= beta) {
        const double change = merit_change(alpha);
        ++r.evaluations;
        if (change <= sigma * alpha * dp + slack) {
            r.accepted = true;
            r.alpha = alpha;
            r.merit_change = change;
            return r;
        }
    }
    return r;
}

ArmijoResult armijo_backtrack(const ConstrainedProblem& problem, const Vector& u, const Vector& d, double mu, double dp,
                              double sigma, double beta, double alpha_min, double slack) {
    const auto& b = problem.constraints();
    // B(u + a d) is formed as Bu + a Bd so that rounding of u + a d does not
    // pollute the penalty term near convergence.
    const Vector bu = b * u;
    const Vector bd = b * d;
    const double c0 = l1_norm(bu);
    return armijo_backtrack(
        [&](double alpha) {
            const Vector step = alpha * d;
            try {
                return problem.objective_change(u, step) + mu * (l1_norm(bu + alpha * bd) - c0);
            } catch (const InadmissibleDeformation&) {
                return kInf;
            }
        },
        dp, sigma, beta, alpha_min, slack);
}

double armijo_rounding_slack(double merit) {
    return 10.0 * std::numeric_limits<double>::epsilon() * std::abs(merit);
}

double merit_dp(const ConstrainedProblem& problem, const Vector& u, const Vector& lambda, double mu) {
    const auto& b = problem.constraints();
    try {
        const Vector bu = b * u;
        const Vector bg = b * lagrangian_grad(problem, u, lambda);
        return problem.objective(u) + lambda.dot(bu) + 0.5 * mu * bu.squaredNorm() + bg.squaredNorm();
    } catch (const InadmissibleDeformation&) {
        return kInf;
    }
}

SolveResult sqp_solve(const ConstrainedProblem& problem, const SqpConfig& config, Vector u0, Vector lambda0,
                      const IterationObserver& observer) {
    config.validate();
    const auto start = Clock::now();
    const RowSparseMatrix& b = problem.constraints();

    SolveResult result;
    SolveReport& report = result.report;
    report.solver = "sqp-qn";
    Vector u = zeros_if_empty(std::move(u0), problem.size());
    Vector lambda = zeros_if_empty(std::move(lambda0), b.rows());
    double mu = config.mu0;

    Vector grad_j = problem.gradient(u);
    Vector bu = b * u;
    double objective = problem.objective(u);
    double merit = objective + mu * l1_norm(bu);
    double grad_norm = std::max(inf_norm(grad_j + b.transpose() * lambda), inf_norm(bu));

    std::shared_ptr<const ExactHessian> hessian;
    std::shared_ptr<const LinearOperator> precond;
    std::optional<QnState> qn;
    bool base_at_current = false;

    IterationRecord rec;
    auto recompute = [&] {
        hessian = problem.exact_hessian(u);
        ++report.hessian_recomputations;
        ++rec.hessian_factorizations;
        precond = config.use_preconditioner ? hessian->build_preconditioner() : nullptr;
        if (precond) {
            ++report.preconditioner_builds;
            ++rec.preconditioner_builds;
        }
        if (qn) {
            qn->restart(hessian);
        } else {
            qn.emplace(hessian, config.qn);
        }
        base_at_current = true;
    };

    for (int k = 0;; ++k) {
        if (grad_norm <= config.eps_tol) {
            report.converged = true;
            report.message = "converged";
            break;
        }
        if (k >= config.max_outer) {
            report.message = "maximum number of outer iterations reached";
            break;
        }
        rec = IterationRecord{};
        rec.k = k;
        rec.merit = merit;
        rec.grad_norm = grad_norm;
        rec.constraint_norm = inf_norm(bu);
        rec.mu_prev = mu;
        rec.sigma = config.sigma;

        const Vector grad_l = grad_j + b.transpose() * lambda;
        KktStep step;
        double mu_next = mu;
        double dp = 0.0;
        ArmijoResult ls;
        std::string failure;
        try {
            if (!qn) recompute();
            for (;;) {
                std::string reason;
                try {
                    step = kkt_step(*qn, b, grad_l, lambda, bu, precond.get(), config.krylov);
                    rec.krylov_total += step.krylov_iterations;
                    mu_next = penalty_update(mu, step.delta_lambda, config.eps_update);
                    dp = dir_derivative_p1(grad_j, step.delta_u, bu, mu_next);
                    if (dp < 0.0) {
                        rec.armijo_slack = armijo_rounding_slack(objective + mu_next * l1_norm(bu));
                        ls = armijo_backtrack(problem, u, step.delta_u, mu_next, dp, config.sigma, config.beta,
                                              config.alpha_min, rec.armijo_slack);
                        if (ls.accepted) break;
                        reason = "line search failed";
                    } else {
                        reason = "SQP step is not a descent direction for P1";
                    }
                } catch (const KrylovError& e) {
                    rec.krylov_total += e.iterations();
                    reason = e.what();
                }
                if (base_at_current) {
                    failure = reason + " with a fresh exact Hessian";
                    break;
                }
                ++rec.forced_restarts;
                recompute();
            }
        } catch (const FactorizationError& e) {
            failure = std::string("Hessian factorization failed: ") + e.what();
        }
        rec.krylov = step.krylov_iterations;
        report.total_krylov_iterations += rec.krylov_total;
        if (!failure.empty()) {
            report.message = "iteration " + std::to_string(k) + ": " + failure;
            report.trace.push_back(rec);
            break;
        }

        rec.fresh_hessian = base_at_current && qn->pair_count() == 0;
        rec.mu = mu_next;
        rec.delta_lambda_norm = inf_norm(step.delta_lambda);
        rec.directional_derivative = dp;
        rec.alpha = ls.alpha;
        rec.merit_change = ls.merit_change;
        rec.backtracks = ls.evaluations - 1;
        rec.relaxed_armijo = ls.merit_change > config.sigma * ls.alpha * dp;

        const Vector s = ls.alpha * step.delta_u;
        const Vector u_next = u + s;
        const Vector& lambda_next = step.delta_lambda;
        const Vector grad_j_next = problem.gradient(u_next);
        const Vector bu_next = b * u_next;
        const double grad_norm_next =
            std::max(inf_norm(grad_j_next + b.transpose() * lambda_next), inf_norm(bu_next));
        // P1(u^(k+1); mu_{k+1}) - P1(u^(k); mu_k)
        const double merit_step = ls.merit_change + (mu_next - mu) * l1_norm(bu);
        const double objective_next = problem.objective(u_next);
        const double merit_next = objective_next + mu_next * l1_norm(bu_next);

        rec.restart = grad_norm_next > config.eps_tol &&
                      restart_check_change(merit_step, merit, grad_norm, grad_norm_next, config.eta1, config.eta2,
                                           config.restart_rule);
        if (observer) observer(IterationView{rec, u, lambda, step.delta_u, step.delta_lambda, u_next, lambda_next});

        const Vector y = grad_j_next - grad_j;
        u = u_next;
        lambda = lambda_next;
        mu = mu_next;
        grad_j = grad_j_next;
        bu = bu_next;
        objective = objective_next;
        merit = merit_next;
        grad_norm = grad_norm_next;
        ++report.outer_iterations;

        if (rec.restart) {
            try {
                recompute();
            } catch (const FactorizationError& e) {
                report.message = "iteration " + std::to_string(k) + ": Hessian factorization failed: " + e.what();
                report.trace.push_back(rec);
                break;
            }
        } else {
            rec.pair_accepted = qn->update(s, y);
            base_at_current = false;
        }
        report.trace.push_back(rec);
    }

    report.final_grad_norm = grad_norm;
    report.final_constraint_norm = inf_norm(bu);
    report.solve_seconds = seconds_since(start);
    result.u = std::move(u);
    result.lambda = std::move(lambda);
    return result;
}

SolveResult newton_baseline_solve(const ConstrainedProblem& problem, const SqpConfig& config, Vector u0,
                                  Vector lambda0, const IterationObserver& observer) {
    config.validate();
    const auto start = Clock::now();
    const RowSparseMatrix& b = problem.constraints();

    SolveResult result;
    SolveReport& report = result.report;
    report.solver = "newton-p";
    Vector u = zeros_if_empty(std::move(u0), problem.size());
    Vector lambda = zeros_if_empty(std::move(lambda0), b.rows());
    double mu = config.mu0;

    Vector grad_j = problem.gradient(u);
    Vector bu = b * u;
    Vector grad_l = grad_j + b.transpose() * lambda;
    double grad_norm = std::max(inf_norm(grad_l), inf_norm(bu));

    for (int k = 0;; ++k) {
        if (grad_norm <= config.eps_tol) {
            report.converged = true;
            report.message = "converged";
            break;
        }
        if (k >= config.max_outer) {
            report.message = "maximum number of outer iterations reached";
            break;
        }
        IterationRecord rec;
        rec.k = k;
        rec.grad_norm = grad_norm;
        rec.constraint_norm = inf_norm(bu);
        rec.mu_prev = mu;
        rec.sigma = config.sigma;
        rec.fresh_hessian = true;

        const Vector bg = b * grad_l;
        rec.merit = problem.objective(u) + lambda.dot(bu) + 0.5 * mu * bu.squaredNorm() + bg.squaredNorm();

        KktStep step;
        std::shared_ptr<const ExactHessian> hessian;
        try {
            hessian = problem.exact_hessian(u);
            ++report.hessian_recomputations;
            ++rec.hessian_factorizations;
            std::shared_ptr<const LinearOperator> precond;
            if (config.use_preconditioner) {
                precond = hessian->build_preconditioner();
                if (precond) {
                    ++report.preconditioner_builds;
                    ++rec.preconditioner_builds;
                }
            }
            step = kkt_step(*hessian, b, grad_l, lambda, bu, precond.get(), config.krylov);
        } catch (const FactorizationError& e) {
            report.message = "iteration " + std::to_string(k) + ": Hessian factorization failed: " + e.what();
            report.trace.push_back(rec);
            break;
        } catch (const KrylovError& e) {
            report.total_krylov_iterations += e.iterations();
            rec.krylov_total = e.iterations();
            report.message = "iteration " + std::to_string(k) + ": " + e.what();
            report.trace.push_back(rec);
            break;
        }
        rec.krylov = rec.krylov_total = step.krylov_iterations;
        report.total_krylov_iterations += step.krylov_iterations;
        rec.delta_lambda_norm = inf_norm(step.delta_lambda);

        const Vector& du = step.delta_u;
        const Vector dl = step.delta_lambda - lambda;
        const Vector b_du = b * du;
        const Vector h_dir = hessian->apply(du) + b.transpose() * dl;
        // Directional derivative of P along (du, dl), split into the part
        // independent of mu and the coefficient of mu.
        const double dp_fixed = grad_l.dot(du) + bu.dot(dl) + 2.0 * bg.dot(b * h_dir);
        const double dp_mu = bu.dot(b_du);
        double dp = dp_fixed + mu * dp_mu;
        if (!(dp < 0.0) && dp_mu < 0.0) {
            mu = std::max(2.0 * mu, 2.0 * dp_fixed / -dp_mu);
            dp = dp_fixed + mu * dp_mu;
        }
        rec.mu = mu;
        rec.directional_derivative = dp;
        if (!(dp < 0.0)) {
            report.message = "iteration " + std::to_string(k) + ": Newton direction is not a descent direction for P";
            report.trace.push_back(rec);
            break;
        }

        const double bg0 = bg.squaredNorm();
        const double bu0 = bu.squaredNorm();
        const double lb0 = lambda.dot(bu);
        rec.armijo_slack = armijo_rounding_slack(rec.merit + 0.5 * (mu - rec.mu_prev) * bu0);
        const ArmijoResult ls = armijo_backtrack(
            [&](double alpha) {
                try {
                    const Vector step_u = alpha * du;
                    const Vector ut = u + step_u;
                    const Vector lt = lambda + alpha * dl;
                    const Vector but = bu + alpha * b_du;
                    const Vector bgt = b * (problem.gradient(ut) + b.transpose() * lt);
                    return problem.objective_change(u, step_u) + (lt.dot(but) - lb0) +
                           0.5 * mu * (but.squaredNorm() - bu0) + (bgt.squaredNorm() - bg0);
                } catch (const InadmissibleDeformation&) {
                    return kInf;
                }
            },
            dp, config.sigma, config.beta, config.alpha_min, rec.armijo_slack);
        if (!ls.accepted) {
            report.message = "iteration " + std::to_string(k) + ": line search on P failed";
            report.trace.push_back(rec);
            break;
        }
        rec.alpha = ls.alpha;
        rec.merit_change = ls.merit_change;
        rec.backtracks = ls.evaluations - 1;
        rec.relaxed_armijo = ls.merit_change > config.sigma * ls.alpha * dp;

        const Vector u_next = u + ls.alpha * du;
        const Vector lambda_next = lambda + ls.alpha * dl;
        if (observer) observer(IterationView{rec, u, lambda, du, step.delta_lambda, u_next, lambda_next});
        u = u_next;
        lambda = lambda_next;
        grad_j = problem.gradient(u);
        bu = b * u;
        grad_l = grad_j + b.transpose() * lambda;
        grad_norm = std::max(inf_norm(grad_l), inf_norm(bu));
        ++report.outer_iterations;
        report.trace.push_back(rec);
    }

    report.final_grad_norm = grad_norm;
    report.final_constraint_norm = inf_norm(bu);
    report.solve_seconds = seconds_since(start);
    result.u = std::move(u);
    result.lambda = std::move(lambda);
    return result;
}

}  // namespace feti_sqp
