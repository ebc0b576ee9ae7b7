#include "feti_sqp/problem.hpp"

#include "feti_sqp/errors.hpp"

namespace feti_sqp {

FetiProblem::FetiProblem(StructuredMesh mesh, const Material& material, int n1, int n2, double traction, int threads)
    : mesh_(std::move(mesh)),
      material_(material),
      traction_(traction),
      threads_(resolve_threads(threads)),
      decomposition_(partition(mesh_, n1, n2)),
      classification_(classify_dofs(mesh_, decomposition_)),
      layout_(build_layout(decomposition_, classification_)),
      jump_(build_jump(layout_, classification_)),
      scaled_jump_(build_scaled_jump(jump_)) {
    for (const auto& s : decomposition_.subdomains) loads_.push_back(right_edge_traction_load(mesh_, s.part, traction_));
}

double FetiProblem::objective(const Vector& u) const {
    std::vector<double> parts(decomposition_.subdomains.size());
    parallel_for(parts.size(), threads_, [&](std::size_t i) {
        const int s = static_cast<int>(i);
        parts[i] = assemble_subdomain(decomposition_.subdomains[i].part, material_, loads_[i],
                                      layout_.extract_local(s, u), EvalMode::Energy)
                       .energy;
    });
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

double FetiProblem::objective_change(const Vector& u, const Vector& step) const {
    std::vector<double> parts(decomposition_.subdomains.size());
    parallel_for(parts.size(), threads_, [&](std::size_t i) {
        const int s = static_cast<int>(i);
        parts[i] = subdomain_energy_change(decomposition_.subdomains[i].part, material_, loads_[i],
                                           layout_.extract_local(s, u), layout_.extract_local(s, step));
    });
    double total = 0.0;
    for (double p : parts) total += p;
    return total;
}

Vector FetiProblem::gradient(const Vector& u) const {
    std::vector<Vector> parts(decomposition_.subdomains.size());
    parallel_for(parts.size(), threads_, [&](std::size_t i) {
        const int s = static_cast<int>(i);
        parts[i] = assemble_subdomain(decomposition_.subdomains[i].part, material_, loads_[i],
                                      layout_.extract_local(s, u), EvalMode::Gradient)
                       .grad;
    });
    Vector g = Vector::Zero(layout_.size);
    for (std::size_t i = 0; i < parts.size(); ++i) layout_.accumulate_local(static_cast<int>(i), parts[i], g);
    return g;
}

BlockHessian FetiProblem::hessian_blocks(const Vector& u) const {
    BlockHessian h;
    h.primal_offset = layout_.primal_offset;
    h.n_primal = layout_.n_primal;
    h.subdomains.resize(decomposition_.subdomains.size());
    parallel_for(h.subdomains.size(), threads_, [&](std::size_t i) {
        const int s = static_cast<int>(i);
        const PartEvaluation ev = assemble_subdomain(decomposition_.subdomains[i].part, material_, loads_[i],
                                                     layout_.extract_local(s, u), EvalMode::Hessian);
        h.subdomains[i] = split_subdomain_hessian(layout_.subdomains[i], ev.hess);
    });
    return h;
}

std::shared_ptr<const ExactHessian> FetiProblem::exact_hessian(const Vector& u) const {
    return std::make_shared<FetiHessian>(hessian_blocks(u), scaled_jump_, threads_);
}

FetiHessian::FetiHessian(BlockHessian blocks, const ScaledJump& scaled_jump, int threads)
    : blocks_(std::move(blocks)),
      factorization_(factor_block_hessian(blocks_, threads)),
      scaled_jump_(scaled_jump),
      threads_(threads) {}

std::shared_ptr<const LinearOperator> FetiHessian::build_preconditioner() const {
    return std::make_shared<DirichletPreconditioner>(build_dirichlet_preconditioner(blocks_, scaled_jump_, threads_));
}

namespace {

class DenseHessian final : public ExactHessian {
public:
    explicit DenseHessian(const Matrix& a) : solve_(a) {}
    Index size() const override { return solve_.size(); }
    Vector solve(const Vector& b) const override { return solve_.solve(b); }
    Vector apply(const Vector& x) const override { return solve_.apply(x); }

private:
    DenseSymmetricSolve solve_;
};

}  // namespace

QuadraticProblem::QuadraticProblem(Matrix a, Vector b, RowSparseMatrix constraints)
    : a_(std::move(a)), b_(std::move(b)), constraints_(std::move(constraints)) {
    if (a_.rows() != a_.cols() || b_.size() != a_.rows() || constraints_.cols() != a_.rows()) {
        throw ParameterError("quadratic problem has inconsistent dimensions");
    }
}

std::shared_ptr<const ExactHessian> QuadraticProblem::exact_hessian(const Vector&) const {
    return std::make_shared<DenseHessian>(a_);
}

}  // namespace feti_sqp
