#include "feti_sqp/oracle.hpp"

#include "feti_sqp/errors.hpp"
#include "feti_sqp/kkt.hpp"

#include <limits>
#include <numeric>

namespace feti_sqp {

namespace {

// make_part numbers nodes by ascending global id, so the whole-mesh part keeps
// the global numbering.
MeshPart whole_mesh(const StructuredMesh& mesh) {
    std::vector<int> elements(mesh.num_elements());
    std::iota(elements.begin(), elements.end(), 0);
    return make_part(mesh, std::move(elements));
}

}  // namespace

OracleResult oracle_newton_solve(const StructuredMesh& mesh, const Material& material, double traction,
                                 double eps_tol, int max_iters) {
    const MeshPart part = whole_mesh(mesh);
    const Vector load = right_edge_traction_load(mesh, part, traction);
    OracleResult r;
    r.u = Vector::Zero(part.num_dofs());
    for (;;) {
        const PartEvaluation ev = assemble_subdomain(part, material, load, r.u, EvalMode::Hessian);
        r.grad_norm = ev.grad.cwiseAbs().maxCoeff();
        if (r.grad_norm <= eps_tol) {
            r.converged = true;
            r.message = "converged";
            return r;
        }
        if (r.iterations >= max_iters) {
            r.message = "oracle Newton did not converge";
            return r;
        }
        const SparseSymmetricFactor factor(ev.hess);
        const Vector du = factor.solve(Vector(-ev.grad));
        const double slope = ev.grad.dot(du);
        if (!(slope < 0.0)) {
            r.message = "oracle Newton direction is not a descent direction";
            return r;
        }
        double alpha = 1.0;
        bool accepted = false;
        for (; alpha >= 1.0 / (1 << 20); alpha *= 0.5) {
            double change = std::numeric_limits<double>::infinity();
            try {
                change = subdomain_energy_change(part, material, load, r.u, alpha * du);
            } catch (const InadmissibleDeformation&) {
            }
            if (change <= 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            r.message = "oracle line search failed";
            return r;
        }
        r.u += alpha * du;
        ++r.iterations;
    }
}

Vector linear_elastic_solve(const StructuredMesh& mesh, const Material& material, double traction) {
    const MeshPart part = whole_mesh(mesh);
    const Vector load = right_edge_traction_load(mesh, part, traction);
    const Vector zero = Vector::Zero(part.num_dofs());
    const PartEvaluation ev = assemble_subdomain(part, material, load, zero, EvalMode::Hessian);
    return SparseSymmetricFactor(ev.hess).solve(load);
}

}  // namespace feti_sqp
