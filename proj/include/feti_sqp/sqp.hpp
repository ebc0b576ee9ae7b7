#pragma once

#include "feti_sqp/kkt.hpp"
#include "feti_sqp/linalg.hpp"
#include "feti_sqp/problem.hpp"
#include "feti_sqp/qn.hpp"

#include <functional>
#include <string>
#include <vector>

namespace feti_sqp {

/// Which inequality decides "insufficient gradient decrease" in the restart test.
enum class RestartRule {
    /// |grad L^(k+1)| > (1 - eta2) |grad L^(k)|: the gradient did not shrink enough.
    InsufficientDecrease,
    /// (1 - eta2) |grad L^(k+1)| < |grad L^(k)|, taken literally.
    AsPrinted,
};

struct SqpConfig {
    double eps_tol = 1e-8;      ///< stop when max(|grad_u L|_inf, |B u|_inf) <= eps_tol
    double eps_update = 1.0;    ///< penalty margin over |delta lambda|_inf
    double mu0 = 10.0;          ///< initial penalty parameter
    double eta1 = 0.25;         ///< merit stagnation threshold; 0 disables restarts
    double eta2 = 0.25;         ///< gradient stagnation threshold
    double sigma = 1e-4;        ///< Armijo sufficient-decrease factor
    double beta = 0.5;          ///< backtracking contraction
    double alpha_min = 1.0 / (1 << 20);
    int max_outer = 200;
    RestartRule restart_rule = RestartRule::InsufficientDecrease;
    bool use_preconditioner = true;
    QnOptions qn;
    KrylovConfig krylov;

    /// Throws ConfigError naming every violated range.
    void validate() const;
};

/// One outer iteration k: the step from (u^(k), lambda^(k)) to (u^(k+1), lambda^(k+1)).
struct IterationRecord {
    int k = 0;
    double merit = 0.0;            ///< P(u^(k); mu_k) of the solver's merit function
    double grad_norm = 0.0;        ///< max(|grad_u L^(k)|_inf, |B u^(k)|_inf)
    double constraint_norm = 0.0;  ///< |B u^(k)|_inf
    double mu_prev = 0.0;          ///< mu_k
    double mu = 0.0;               ///< mu_{k+1}, used for the line search
    double delta_lambda_norm = 0.0;
    double directional_derivative = 0.0;
    double alpha = 0.0;
    double merit_change = 0.0;     ///< P(u^(k) + alpha d; mu_{k+1}) - P(u^(k); mu_{k+1})
    double sigma = 0.0;
    int backtracks = 0;
    int krylov = 0;                ///< Krylov iterations of the accepted solve
    int krylov_total = 0;          ///< including solves discarded by forced restarts
    bool fresh_hessian = false;    ///< the accepted solve used an exact Hessian without pairs
    int forced_restarts = 0;
    bool restart = false;          ///< insufficient-decrease test fired after the step
    int preconditioner_builds = 0; ///< builds performed during this iteration
    int hessian_factorizations = 0;
    bool pair_accepted = false;
    double armijo_slack = 0.0;     ///< rounding allowance added to the Armijo bound
    bool relaxed_armijo = false;   ///< accepted only thanks to armijo_slack
};

struct SolveReport {
    std::string solver;
    bool converged = false;
    std::string message;
    int outer_iterations = 0;
    long total_krylov_iterations = 0;
    int hessian_recomputations = 0;
    int preconditioner_builds = 0;
    double solve_seconds = 0.0;
    double final_grad_norm = 0.0;
    double final_constraint_norm = 0.0;
    std::vector<IterationRecord> trace;
};

struct SolveResult {
    Vector u;
    Vector lambda;
    SolveReport report;
};

/// Full-vector view of one accepted step, for tests and diagnostics.
struct IterationView {
    const IterationRecord& record;
    const Vector& u;
    const Vector& lambda;
    const Vector& delta_u;
    const Vector& delta_lambda;
    const Vector& u_next;
    const Vector& lambda_next;
};

using IterationObserver = std::function<void(const IterationView&)>;

/// grad_u L(u, lambda) = grad J(u) + B^T lambda.
Vector lagrangian_grad(const ConstrainedProblem& problem, const Vector& u, const Vector& lambda);

/// P1(u; mu) = J(u) + mu |B u|_1, +inf if u is inadmissible.
double merit_p1(const ConstrainedProblem& problem, const Vector& u, double mu);

/// DP1(u; d, mu) = grad J^T d - mu |B u|_1 for an SQP step d.
double dir_derivative_p1(const Vector& grad_j, const Vector& d, const Vector& bu, double mu);

/// mu_{k+1} = max(mu_k, |delta lambda|_inf + eps_update).
double penalty_update(double mu, double delta_lambda_norm_inf, double eps_update);
double penalty_update(double mu, const Vector& delta_lambda, double eps_update);

/// Insufficient-decrease test on merit values and gradient norms.
bool restart_check(double merit_prev, double merit_next, double grad_prev, double grad_next, double eta1, double eta2,
                   RestartRule rule = RestartRule::InsufficientDecrease);
/// Same test with the merit change supplied directly.
bool restart_check_change(double merit_change, double merit_prev, double grad_prev, double grad_next, double eta1,
                          double eta2, RestartRule rule = RestartRule::InsufficientDecrease);

struct ArmijoResult {
    bool accepted = false;
    double alpha = 0.0;
    double merit_change = 0.0;
    int evaluations = 0;
};

/// Largest alpha in {1, beta, beta^2, ...} with alpha >= alpha_min and
/// merit_change(alpha) <= sigma * alpha * dp + slack. merit_change returns
/// +inf for rejected (inadmissible) trial points. Throws ParameterError unless
/// dp < 0 and slack >= 0.
ArmijoResult armijo_backtrack(const std::function<double(double)>& merit_change, double dp, double sigma, double beta,
                              double alpha_min, double slack = 0.0);

/// Armijo on P1 along d from u.
ArmijoResult armijo_backtrack(const ConstrainedProblem& problem, const Vector& u, const Vector& d, double mu, double dp,
                              double sigma, double beta, double alpha_min, double slack = 0.0);

/// Rounding allowance for merit comparisons: 10 eps |merit|.
double armijo_rounding_slack(double merit);

/// P(u, lambda; mu) = L(u, lambda) + mu/2 |B u|_2^2 + |B grad_u L(u, lambda)|_2^2.
double merit_dp(const ConstrainedProblem& problem, const Vector& u, const Vector& lambda, double mu);

/// Globalized SQP with inverse-BFGS Hessian approximations and exact-Hessian
/// restarts.
SolveResult sqp_solve(const ConstrainedProblem& problem, const SqpConfig& config, Vector u0 = {}, Vector lambda0 = {},
                      const IterationObserver& observer = {});

/// Newton-like method: exact Hessian every iteration, line search on merit_dp.
SolveResult newton_baseline_solve(const ConstrainedProblem& problem, const SqpConfig& config, Vector u0 = {},
                                  Vector lambda0 = {}, const IterationObserver& observer = {});

}  // namespace feti_sqp
