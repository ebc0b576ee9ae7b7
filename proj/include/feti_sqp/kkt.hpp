#pragma once

#include "feti_sqp/decomp.hpp"
#include "feti_sqp/linalg.hpp"

#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace feti_sqp {

/// Hessian blocks of one subdomain in torn ordering:
///   [ K_BB  K_BP ]   rows/cols of u_B^(i) (interior first, then dual)
///   [ K_PB  K_PP ]   local primal slots, mapped to global primal dofs
struct SubdomainHessian {
    Index offset = 0;
    int n_interior = 0;
    int n_dual = 0;
    SparseMatrix k_bb;
    SparseMatrix k_bp;  ///< n_b x n_primal_local
    Matrix k_pp;        ///< n_primal_local x n_primal_local
    std::vector<int> primal_global;

    int n_b() const { return n_interior + n_dual; }
};

/// The full torn Hessian: block diagonal in the subdomains, coupled only
/// through the assembled primal block.
struct BlockHessian {
    std::vector<SubdomainHessian> subdomains;
    Index primal_offset = 0;
    int n_primal = 0;

    Index size() const { return primal_offset + n_primal; }
    Vector apply(const Vector& x, int threads = 1) const;
    /// Assembled dense matrix; only for tests and small oracles.
    Matrix to_dense() const;
};

/// Splits a subdomain's local Hessian (local dof order) into torn blocks.
SubdomainHessian split_subdomain_hessian(const SubdomainLayout& layout, const SparseMatrix& local_hessian);

/// Sparse LDL^T of one symmetric block; rejects (near-)zero pivots.
class SparseSymmetricFactor {
public:
    SparseSymmetricFactor() = default;
    explicit SparseSymmetricFactor(const SparseMatrix& a);

    Index size() const { return n_; }
    Vector solve(const Vector& b) const;
    Matrix solve(const Matrix& b) const;

private:
    Index n_ = 0;
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

/// Factored block Hessian: per-subdomain factors of K_BB plus the dense
/// factored primal Schur complement S_PP = K_PP - sum K_PB K_BB^{-1} K_BP.
class BlockFactorization final : public LinearSolve {
public:
    Index size() const override { return size_; }
    Vector solve(const Vector& v) const override;

    int n_primal() const { return n_primal_; }
    const Matrix& primal_schur() const { return schur_; }

    friend BlockFactorization factor_block_hessian(const BlockHessian& hessian, int threads);

private:
    struct Local {
        Index offset = 0;
        SparseSymmetricFactor k_bb;
        SparseMatrix k_bp;
        Matrix z;  ///< K_BB^{-1} K_BP
        std::vector<int> primal_global;
    };
    std::vector<Local> local_;
    Index primal_offset_ = 0;
    int n_primal_ = 0;
    Index size_ = 0;
    Matrix schur_;
    Eigen::LDLT<Matrix> schur_ldlt_;
    int threads_ = 1;
};

/// Throws FactorizationError if a subdomain block or S_PP is singular.
BlockFactorization factor_block_hessian(const BlockHessian& hessian, int threads = 1);

/// M^{-1} mu = B_D blockdiag(S^(i)) B_D^T mu with S^(i) the Schur complement
/// of K_BB^(i) onto its dual dofs. Applied matrix-free.
class DirichletPreconditioner final : public LinearOperator {
public:
    Index size() const override { return scaled_jump_.rows(); }
    Vector apply(const Vector& mu) const override;

    friend DirichletPreconditioner build_dirichlet_preconditioner(const BlockHessian& hessian,
                                                                  const ScaledJump& scaled_jump, int threads);

private:
    struct Local {
        Index dual_offset = 0;  ///< torn index of the first dual dof
        int n_dual = 0;
        SparseSymmetricFactor k_ii;
        SparseMatrix k_ig;
        SparseMatrix k_gg;
    };
    std::vector<Local> local_;
    RowSparseMatrix scaled_jump_;
    int threads_ = 1;
};

/// Throws FactorizationError if an interior block is singular.
DirichletPreconditioner build_dirichlet_preconditioner(const BlockHessian& hessian, const ScaledJump& scaled_jump,
                                                       int threads = 1);

struct KrylovConfig {
    double tol = 1e-10;
    int max_iters = 500;
};

struct PcgResult {
    Vector x;
    int iterations = 0;
};

/// Preconditioned CG. Stops when sqrt(r^T M^{-1} r) <= tol * sqrt(b^T M^{-1} b).
/// precond == nullptr means identity. Throws KrylovError on breakdown
/// (p^T A p <= 0 or r^T M^{-1} r < 0) or when max_iters is exceeded.
PcgResult pcg(const LinearOperator& op, const LinearOperator* precond, const Vector& rhs, const KrylovConfig& config);

struct KktStep {
    Vector delta_u;
    Vector delta_lambda;
    int krylov_iterations = 0;
};

/// Solves [H B^T; B 0] [du; dl] = -[grad; Bu] by eliminating du and running
/// PCG on B H^{-1} B^T dl = Bu - B H^{-1} grad.
KktStep solve_kkt(const LinearSolve& h_inverse, const RowSparseMatrix& b, const Vector& grad, const Vector& bu,
                  const LinearOperator* precond, const KrylovConfig& config);

}  // namespace feti_sqp
