#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <functional>
#include <memory>

namespace feti_sqp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

/// y = A x for some symmetric operator A.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual Index size() const = 0;
    virtual Vector apply(const Vector& x) const = 0;
};

/// x = A^{-1} b for some factored symmetric operator A.
class LinearSolve {
public:
    virtual ~LinearSolve() = default;
    virtual Index size() const = 0;
    virtual Vector solve(const Vector& b) const = 0;
};

/// Dense symmetric matrix with a pivoted LDL^T factorization.
/// Used for small synthetic problems and as a test oracle backend.
class DenseSymmetricSolve final : public LinearSolve, public LinearOperator {
public:
    explicit DenseSymmetricSolve(Matrix a);

    Index size() const override { return a_.rows(); }
    Vector solve(const Vector& b) const override;
    Vector apply(const Vector& x) const override { return a_ * x; }
    const Matrix& matrix() const { return a_; }

private:
    Matrix a_;
    Eigen::LDLT<Matrix> ldlt_;
};

/// Operator defined by a dense matrix.
class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(Matrix a) : a_(std::move(a)) {}
    Index size() const override { return a_.rows(); }
    Vector apply(const Vector& x) const override { return a_ * x; }

private:
    Matrix a_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled by exactly one worker; callers write only to slot i.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Resolves a requested worker count (<= 0 means "use FETI_SQP_THREADS or 1").
int resolve_threads(int requested);

}  // namespace feti_sqp
