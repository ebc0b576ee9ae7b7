#include "feti_sqp/kkt.hpp"

#include "feti_sqp/errors.hpp"

#include <cmath>
#include <string>

namespace feti_sqp {

namespace {

Vector primal_restrict(const Vector& primal, const std::vector<int>& slots) {
    Vector r(static_cast<Index>(slots.size()));
    for (std::size_t k = 0; k < slots.size(); ++k) r[static_cast<Index>(k)] = primal[slots[k]];
    return r;
}

}  // namespace

Vector BlockHessian::apply(const Vector& x, int threads) const {
    Vector y = Vector::Zero(size());
    const Vector xp = x.segment(primal_offset, n_primal);
    std::vector<Vector> primal_parts(subdomains.size());
    parallel_for(subdomains.size(), threads, [&](std::size_t i) {
        const auto& s = subdomains[i];
        const Vector xb = x.segment(s.offset, s.n_b());
        const Vector xpl = primal_restrict(xp, s.primal_global);
        y.segment(s.offset, s.n_b()) = s.k_bb * xb + s.k_bp * xpl;
        primal_parts[i] = s.k_bp.transpose() * xb + s.k_pp * xpl;
    });
    for (std::size_t i = 0; i < subdomains.size(); ++i) {
        const auto& s = subdomains[i];
        for (std::size_t k = 0; k < s.primal_global.size(); ++k)
            y[primal_offset + s.primal_global[k]] += primal_parts[i][static_cast<Index>(k)];
    }
    return y;
}

Matrix BlockHessian::to_dense() const {
    Matrix a = Matrix::Zero(size(), size());
    for (const auto& s : subdomains) {
        a.block(s.offset, s.offset, s.n_b(), s.n_b()) = Matrix(s.k_bb);
        const Matrix kbp(s.k_bp);
        for (std::size_t k = 0; k < s.primal_global.size(); ++k) {
            const Index pk = primal_offset + s.primal_global[k];
            a.block(s.offset, pk, s.n_b(), 1) += kbp.col(static_cast<Index>(k));
            a.block(pk, s.offset, 1, s.n_b()) += kbp.col(static_cast<Index>(k)).transpose();
            for (std::size_t l = 0; l < s.primal_global.size(); ++l)
                a(pk, primal_offset + s.primal_global[l]) += s.k_pp(static_cast<Index>(k), static_cast<Index>(l));
        }
    }
    return a;
}

SubdomainHessian split_subdomain_hessian(const SubdomainLayout& layout, const SparseMatrix& local_hessian) {
    SubdomainHessian h;
    h.offset = layout.offset;
    h.n_interior = layout.n_interior;
    h.n_dual = layout.n_dual;
    h.primal_global = layout.primal_global;
    const int np = layout.n_primal_local();
    std::vector<int> slot_of(layout.global_dof.size(), -1);
    for (int p = 0; p < np; ++p) slot_of[layout.primal_local[p]] = p;

    std::vector<Triplet> bb, bp;
    h.k_pp = Matrix::Zero(np, np);
    for (Index col = 0; col < local_hessian.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(local_hessian, col); it; ++it) {
            const int rb = layout.b_index[it.row()];
            const int cb = layout.b_index[it.col()];
            if (rb >= 0 && cb >= 0) {
                bb.emplace_back(rb, cb, it.value());
            } else if (rb >= 0) {
                bp.emplace_back(rb, slot_of[it.col()], it.value());
            } else if (cb < 0) {
                h.k_pp(slot_of[it.row()], slot_of[it.col()]) += it.value();
            }
        }
    }
    h.k_bb.resize(h.n_b(), h.n_b());
    h.k_bb.setFromTriplets(bb.begin(), bb.end());
    h.k_bp.resize(h.n_b(), np);
    h.k_bp.setFromTriplets(bp.begin(), bp.end());
    return h;
}

SparseSymmetricFactor::SparseSymmetricFactor(const SparseMatrix& a)
    : n_(a.rows()), ldlt_(std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>()) {
    if (n_ == 0) return;
    ldlt_->compute(a);
    if (ldlt_->info() != Eigen::Success) throw FactorizationError("sparse LDL^T factorization failed");
    const Vector d = ldlt_->vectorD();
    const double scale = d.cwiseAbs().maxCoeff();
    if (!std::isfinite(scale) || scale == 0.0) throw FactorizationError("sparse block is zero or not finite");
    for (Index i = 0; i < d.size(); ++i) {
        if (!(std::abs(d[i]) > 1e-13 * scale)) {
            throw FactorizationError("sparse block is numerically singular (pivot " + std::to_string(i) + ")");
        }
    }
}

Vector SparseSymmetricFactor::solve(const Vector& b) const {
    if (n_ == 0) return Vector(0);
    return ldlt_->solve(b);
}

Matrix SparseSymmetricFactor::solve(const Matrix& b) const {
    if (n_ == 0) return Matrix(0, b.cols());
    return ldlt_->solve(b);
}

BlockFactorization factor_block_hessian(const BlockHessian& hessian, int threads) {
    BlockFactorization f;
    f.primal_offset_ = hessian.primal_offset;
    f.n_primal_ = hessian.n_primal;
    f.size_ = hessian.size();
    f.threads_ = threads;
    f.local_.resize(hessian.subdomains.size());

    std::vector<Matrix> corrections(hessian.subdomains.size());
    parallel_for(hessian.subdomains.size(), threads, [&](std::size_t i) {
        const auto& s = hessian.subdomains[i];
        auto& l = f.local_[i];
        l.offset = s.offset;
        l.k_bb = SparseSymmetricFactor(s.k_bb);
        l.k_bp = s.k_bp;
        l.primal_global = s.primal_global;
        l.z = l.k_bb.solve(Matrix(s.k_bp));
        corrections[i] = s.k_pp - Matrix(s.k_bp.transpose() * l.z);
    });

    f.schur_ = Matrix::Zero(f.n_primal_, f.n_primal_);
    for (std::size_t i = 0; i < hessian.subdomains.size(); ++i) {
        const auto& slots = hessian.subdomains[i].primal_global;
        for (std::size_t a = 0; a < slots.size(); ++a)
            for (std::size_t b = 0; b < slots.size(); ++b)
                f.schur_(slots[a], slots[b]) += corrections[i](static_cast<Index>(a), static_cast<Index>(b));
    }
    if (f.n_primal_ > 0) {
        f.schur_ = 0.5 * (f.schur_ + f.schur_.transpose()).eval();
        f.schur_ldlt_.compute(f.schur_);
        if (f.schur_ldlt_.info() != Eigen::Success) throw FactorizationError("primal Schur complement factorization failed");
        const Vector d = f.schur_ldlt_.vectorD();
        const double scale = d.cwiseAbs().maxCoeff();
        for (Index i = 0; i < d.size(); ++i) {
            if (!(std::abs(d[i]) > 1e-13 * scale)) throw FactorizationError("primal Schur complement is singular");
        }
    }
    return f;
}

Vector BlockFactorization::solve(const Vector& v) const {
    Vector x(size_);
    std::vector<Vector> primal_parts(local_.size());
    parallel_for(local_.size(), threads_, [&](std::size_t i) {
        const auto& l = local_[i];
        const Vector y = l.k_bb.solve(Vector(v.segment(l.offset, l.k_bb.size())));
        x.segment(l.offset, l.k_bb.size()) = y;
        primal_parts[i] = l.k_bp.transpose() * y;
    });
    if (n_primal_ == 0) return x;

    Vector rhs = v.segment(primal_offset_, n_primal_);
    for (std::size_t i = 0; i < local_.size(); ++i) {
        const auto& slots = local_[i].primal_global;
        for (std::size_t k = 0; k < slots.size(); ++k) rhs[slots[k]] -= primal_parts[i][static_cast<Index>(k)];
    }
    const Vector up = schur_ldlt_.solve(rhs);
    x.segment(primal_offset_, n_primal_) = up;
    parallel_for(local_.size(), threads_, [&](std::size_t i) {
        const auto& l = local_[i];
        if (l.primal_global.empty()) return;
        x.segment(l.offset, l.k_bb.size()) -= l.z * primal_restrict(up, l.primal_global);
    });
    return x;
}

DirichletPreconditioner build_dirichlet_preconditioner(const BlockHessian& hessian, const ScaledJump& scaled_jump,
                                                       int threads) {
    DirichletPreconditioner p;
    p.scaled_jump_ = scaled_jump.matrix;
    p.threads_ = threads;
    p.local_.resize(hessian.subdomains.size());
    parallel_for(hessian.subdomains.size(), threads, [&](std::size_t i) {
        const auto& s = hessian.subdomains[i];
        auto& l = p.local_[i];
        l.dual_offset = s.offset + s.n_interior;
        l.n_dual = s.n_dual;
        if (s.n_dual == 0) return;
        l.k_ii = SparseSymmetricFactor(SparseMatrix(s.k_bb.topLeftCorner(s.n_interior, s.n_interior)));
        l.k_ig = s.k_bb.block(0, s.n_interior, s.n_interior, s.n_dual);
        l.k_gg = s.k_bb.bottomRightCorner(s.n_dual, s.n_dual);
    });
    return p;
}

Vector DirichletPreconditioner::apply(const Vector& mu) const {
    const Vector w = scaled_jump_.transpose() * mu;
    Vector z = Vector::Zero(w.size());
    parallel_for(local_.size(), threads_, [&](std::size_t i) {
        const auto& l = local_[i];
        if (l.n_dual == 0) return;
        const Vector wg = w.segment(l.dual_offset, l.n_dual);
        Vector s = l.k_gg * wg;
        if (l.k_ii.size() > 0) s -= l.k_ig.transpose() * l.k_ii.solve(Vector(l.k_ig * wg));
        z.segment(l.dual_offset, l.n_dual) = s;
    });
    return scaled_jump_ * z;
}

PcgResult pcg(const LinearOperator& op, const LinearOperator* precond, const Vector& rhs, const KrylovConfig& config) {
    PcgResult result;
    result.x = Vector::Zero(rhs.size());
    if (rhs.size() == 0) return result;
    Vector r = rhs;
    Vector z = precond ? precond->apply(r) : r;
    double rz = r.dot(z);
    if (rz < 0.0) throw KrylovError(KrylovError::Kind::Breakdown, "preconditioner is not positive", 0);
    if (rz == 0.0) return result;
    const double stop = config.tol * config.tol * rz;
    Vector p = z;
    for (int it = 1; it <= config.max_iters; ++it) {
        const Vector ap = op.apply(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            throw KrylovError(KrylovError::Kind::Breakdown,
                              "nonpositive curvature p^T A p = " + std::to_string(pap) + " in CG", it);
        }
        const double alpha = rz / pap;
        result.x += alpha * p;
        r -= alpha * ap;
        z = precond ? precond->apply(r) : r;
        const double rz_next = r.dot(z);
        if (rz_next < 0.0) throw KrylovError(KrylovError::Kind::Breakdown, "preconditioner is not positive", it);
        result.iterations = it;
        if (rz_next <= stop) return result;
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    throw KrylovError(KrylovError::Kind::MaxIterations,
                      "CG did not converge in " + std::to_string(config.max_iters) + " iterations", config.max_iters);
}

namespace {

class DualOperator final : public LinearOperator {
public:
    DualOperator(const LinearSolve& h_inverse, const RowSparseMatrix& b) : h_inverse_(h_inverse), b_(b) {}
    Index size() const override { return b_.rows(); }
    Vector apply(const Vector& x) const override { return b_ * h_inverse_.solve(b_.transpose() * x); }

private:
    const LinearSolve& h_inverse_;
    const RowSparseMatrix& b_;
};

}  // namespace

KktStep solve_kkt(const LinearSolve& h_inverse, const RowSparseMatrix& b, const Vector& grad, const Vector& bu,
                  const LinearOperator* precond, const KrylovConfig& config) {
    if (grad.size() != h_inverse.size() || b.cols() != grad.size() || bu.size() != b.rows()) {
        throw ParameterError("solve_kkt: inconsistent dimensions");
    }
    KktStep step;
    const Vector h_grad = h_inverse.solve(grad);
    if (b.rows() == 0) {
        step.delta_lambda = Vector(0);
        step.delta_u = -h_grad;
        return step;
    }
    const DualOperator dual(h_inverse, b);
    const Vector g = bu - b * h_grad;
    PcgResult cg = pcg(dual, precond, g, config);
    step.krylov_iterations = cg.iterations;
    step.delta_lambda = std::move(cg.x);
    step.delta_u = -h_inverse.solve(grad + b.transpose() * step.delta_lambda);
    return step;
}

}  // namespace feti_sqp
