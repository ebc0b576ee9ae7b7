#pragma once

#include "feti_sqp/decomp.hpp"
#include "feti_sqp/fem.hpp"
#include "feti_sqp/kkt.hpp"
#include "feti_sqp/linalg.hpp"
#include "feti_sqp/mesh.hpp"

#include <memory>
#include <vector>

namespace feti_sqp {

/// Exact Hessian of the objective at some point, factored.
class ExactHessian : public LinearSolve, public LinearOperator {
public:
    /// Preconditioner for the dual operator B H^{-1} B^T built from this
    /// Hessian, or nullptr for none.
    virtual std::shared_ptr<const LinearOperator> build_preconditioner() const { return nullptr; }
};

/// min J(u) s.t. B u = 0 with linear constraints B.
class ConstrainedProblem {
public:
    virtual ~ConstrainedProblem() = default;

    virtual Index size() const = 0;
    virtual const RowSparseMatrix& constraints() const = 0;
    /// Throws InadmissibleDeformation outside the admissible set.
    virtual double objective(const Vector& u) const = 0;
    virtual Vector gradient(const Vector& u) const = 0;
    /// J(u + step) - J(u). Overridden where a cancellation-free form exists.
    virtual double objective_change(const Vector& u, const Vector& step) const {
        return objective(u + step) - objective(u);
    }
    virtual std::shared_ptr<const ExactHessian> exact_hessian(const Vector& u) const = 0;
};

/// Torn Neo-Hookean cantilever: J~(u~) = sum_i J^(i)(u_B^(i), R^(i) u_Pi)
/// subject to B u~ = 0.
class FetiProblem final : public ConstrainedProblem {
public:
    FetiProblem(StructuredMesh mesh, const Material& material, int n1, int n2, double traction, int threads = 1);

    Index size() const override { return layout_.size; }
    const RowSparseMatrix& constraints() const override { return jump_.matrix(); }
    double objective(const Vector& u) const override;
    Vector gradient(const Vector& u) const override;
    double objective_change(const Vector& u, const Vector& step) const override;
    std::shared_ptr<const ExactHessian> exact_hessian(const Vector& u) const override;

    /// Hessian blocks of the torn problem at u (unfactored).
    BlockHessian hessian_blocks(const Vector& u) const;

    const StructuredMesh& mesh() const { return mesh_; }
    const Material& material() const { return material_; }
    const Decomposition& decomposition() const { return decomposition_; }
    const DofClassification& classification() const { return classification_; }
    const TornLayout& layout() const { return layout_; }
    const JumpOperator& jump() const { return jump_; }
    const ScaledJump& scaled_jump() const { return scaled_jump_; }
    const Vector& subdomain_load(int i) const { return loads_[static_cast<std::size_t>(i)]; }
    double traction() const { return traction_; }
    int threads() const { return threads_; }

private:
    StructuredMesh mesh_;
    Material material_;
    double traction_;
    int threads_;
    Decomposition decomposition_;
    DofClassification classification_;
    TornLayout layout_;
    JumpOperator jump_;
    ScaledJump scaled_jump_;
    std::vector<Vector> loads_;
};

/// Factored torn Hessian of a FetiProblem.
class FetiHessian final : public ExactHessian {
public:
    FetiHessian(BlockHessian blocks, const ScaledJump& scaled_jump, int threads);

    Index size() const override { return blocks_.size(); }
    Vector solve(const Vector& b) const override { return factorization_.solve(b); }
    Vector apply(const Vector& x) const override { return blocks_.apply(x, threads_); }
    std::shared_ptr<const LinearOperator> build_preconditioner() const override;

    const BlockHessian& blocks() const { return blocks_; }
    const BlockFactorization& factorization() const { return factorization_; }

private:
    BlockHessian blocks_;
    BlockFactorization factorization_;
    const ScaledJump& scaled_jump_;
    int threads_;
};

/// Quadratic J(u) = 1/2 u^T A u - b^T u with dense data; used for synthetic
/// problems and tests.
class QuadraticProblem final : public ConstrainedProblem {
public:
    QuadraticProblem(Matrix a, Vector b, RowSparseMatrix constraints);

    Index size() const override { return a_.rows(); }
    const RowSparseMatrix& constraints() const override { return constraints_; }
    double objective(const Vector& u) const override { return 0.5 * u.dot(a_ * u) - b_.dot(u); }
    Vector gradient(const Vector& u) const override { return a_ * u - b_; }
    std::shared_ptr<const ExactHessian> exact_hessian(const Vector& u) const override;

private:
    Matrix a_;
    Vector b_;
    RowSparseMatrix constraints_;
};

}  // namespace feti_sqp
