#include "feti_sqp/mesh.hpp"

#include "feti_sqp/errors.hpp"

#include <algorithm>
#include <string>

namespace feti_sqp {

StructuredMesh make_beam_mesh(double lx, double ly, int nx, int ny, int order) {
    if (nx <= 0 || ny <= 0) throw ConfigError("element counts must be positive");
    if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("beam extents must be positive");
    if (order != 1 && order != 2) {
        throw ConfigError("element order must be 1 or 2, got " + std::to_string(order));
    }
    StructuredMesh m;
    m.nx = nx;
    m.ny = ny;
    m.lx = lx;
    m.ly = ly;
    m.order = order;

    const int npx = m.nodes_x();
    const int npy = m.nodes_y();
    m.coords.resize(m.num_nodes(), 2);
    for (int j = 0; j < npy; ++j) {
        for (int i = 0; i < npx; ++i) {
            m.coords(m.node_id(i, j), 0) = lx * i / (npx - 1);
            m.coords(m.node_id(i, j), 1) = ly * j / (npy - 1);
        }
    }

    const int npe = m.nodes_per_element();
    m.connectivity.resize(static_cast<std::size_t>(m.num_elements()) * npe);
    for (int ey = 0; ey < ny; ++ey) {
        for (int ex = 0; ex < nx; ++ex) {
            int* conn = &m.connectivity[static_cast<std::size_t>(m.element_id(ex, ey)) * npe];
            for (int b = 0; b <= order; ++b)
                for (int a = 0; a <= order; ++a)
                    conn[b * (order + 1) + a] = m.node_id(order * ex + a, order * ey + b);
        }
    }

    m.dirichlet.assign(m.num_dofs(), 0);
    for (int j = 0; j < npy; ++j) {
        const int node = m.node_id(0, j);
        m.dirichlet[2 * node] = 1;
        m.dirichlet[2 * node + 1] = 1;
    }
    return m;
}

MeshPart make_part(const StructuredMesh& mesh, std::vector<int> elements) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    MeshPart part;
    part.order = mesh.order;
    part.elements = std::move(elements);

    const int npe = mesh.nodes_per_element();
    std::vector<int> nodes;
    nodes.reserve(part.elements.size() * npe);
    for (int e : part.elements) {
        if (e < 0 || e >= mesh.num_elements()) throw ConfigError("element id out of range");
        for (int k = 0; k < npe; ++k) nodes.push_back(mesh.connectivity[static_cast<std::size_t>(e) * npe + k]);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    part.global_node = nodes;

    std::vector<int> local_of(mesh.num_nodes(), -1);
    for (int l = 0; l < part.num_nodes(); ++l) local_of[part.global_node[l]] = l;

    part.coords.resize(part.num_nodes(), 2);
    part.fixed.resize(part.num_dofs());
    for (int l = 0; l < part.num_nodes(); ++l) {
        const int g = part.global_node[l];
        part.coords.row(l) = mesh.coords.row(g);
        part.fixed[2 * l] = mesh.dirichlet[2 * g];
        part.fixed[2 * l + 1] = mesh.dirichlet[2 * g + 1];
    }
    part.connectivity.reserve(part.elements.size() * npe);
    for (int e : part.elements)
        for (int k = 0; k < npe; ++k)
            part.connectivity.push_back(local_of[mesh.connectivity[static_cast<std::size_t>(e) * npe + k]]);
    return part;
}

Vector right_edge_traction_load(const StructuredMesh& mesh, const MeshPart& part, double traction) {
    Vector f = Vector::Zero(part.num_dofs());
    if (traction == 0.0) return f;
    const int order = mesh.order;
    const LagrangeQuad shape(order);
    std::vector<double> pts, wts;
    gauss_legendre_1d(order + 1, pts, wts);
    const double h = mesh.ly / mesh.ny;
    const int npe = part.nodes_per_element();

    for (int k = 0; k < part.num_elements(); ++k) {
        const int ex = part.elements[k] % mesh.nx;
        if (ex != mesh.nx - 1) continue;
        const int* conn = &part.connectivity[static_cast<std::size_t>(k) * npe];
        for (std::size_t q = 0; q < pts.size(); ++q) {
            double value[3], deriv[3];
            shape.basis_1d(pts[q], value, deriv);
            // Edge xi = +1: local nodes (a = order, b).
            for (int b = 0; b <= order; ++b) {
                const int node = conn[b * (order + 1) + order];
                f[2 * node + 1] -= traction * value[b] * wts[q] * 0.5 * h;
            }
        }
    }
    for (int d = 0; d < part.num_dofs(); ++d)
        if (part.fixed[d]) f[d] = 0.0;
    return f;
}

PartEvaluation assemble_subdomain(const MeshPart& part, const Material& mat, const Vector& load,
                                  const Vector& u_local, EvalMode mode) {
    const int ndof = part.num_dofs();
    if (u_local.size() != ndof || load.size() != ndof) {
        throw ParameterError("subdomain vector size does not match its dof count");
    }
    const int npe = part.nodes_per_element();
    const Quadrature quad = Quadrature::for_order(part.order);
    const bool want_grad = mode != EvalMode::Energy;
    const bool want_hess = mode == EvalMode::Hessian;

    PartEvaluation out;
    if (want_grad) out.grad = Vector::Zero(ndof);
    std::vector<Triplet> triplets;
    if (want_hess) triplets.reserve(static_cast<std::size_t>(part.num_elements()) * 4 * npe * npe);

    Eigen::Matrix<double, Eigen::Dynamic, 2> xe(npe, 2);
    Vector ue(2 * npe);
    std::vector<int> dofs(2 * npe);
    for (int k = 0; k < part.num_elements(); ++k) {
        const int* conn = &part.connectivity[static_cast<std::size_t>(k) * npe];
        for (int a = 0; a < npe; ++a) {
            xe.row(a) = part.coords.row(conn[a]);
            dofs[2 * a] = 2 * conn[a];
            dofs[2 * a + 1] = 2 * conn[a] + 1;
            ue[2 * a] = u_local[dofs[2 * a]];
            ue[2 * a + 1] = u_local[dofs[2 * a + 1]];
        }
        const ElementResult er = element_energy_grad_hess(xe, ue, mat, quad, mode);
        out.energy += er.energy;
        if (want_grad) {
            for (int r = 0; r < 2 * npe; ++r) out.grad[dofs[r]] += er.grad[r];
        }
        if (want_hess) {
            for (int r = 0; r < 2 * npe; ++r) {
                if (part.fixed[dofs[r]]) continue;
                for (int c = 0; c < 2 * npe; ++c) {
                    if (part.fixed[dofs[c]]) continue;
                    triplets.emplace_back(dofs[r], dofs[c], er.hess(r, c));
                }
            }
        }
    }
    out.energy -= load.dot(u_local);
    if (want_grad) {
        out.grad -= load;
        for (int d = 0; d < ndof; ++d)
            if (part.fixed[d]) out.grad[d] = 0.0;
    }
    if (want_hess) {
        for (int d = 0; d < ndof; ++d)
            if (part.fixed[d]) triplets.emplace_back(d, d, 1.0);
        out.hess.resize(ndof, ndof);
        out.hess.setFromTriplets(triplets.begin(), triplets.end());
    }
    return out;
}

double subdomain_energy_change(const MeshPart& part, const Material& mat, const Vector& load, const Vector& u_local,
                               const Vector& du_local) {
    const int npe = part.nodes_per_element();
    const Quadrature quad = Quadrature::for_order(part.order);
    Eigen::Matrix<double, Eigen::Dynamic, 2> xe(npe, 2);
    Vector ue(2 * npe), due(2 * npe);
    double change = 0.0;
    for (int k = 0; k < part.num_elements(); ++k) {
        const int* conn = &part.connectivity[static_cast<std::size_t>(k) * npe];
        for (int a = 0; a < npe; ++a) {
            xe.row(a) = part.coords.row(conn[a]);
            for (int c = 0; c < 2; ++c) {
                ue[2 * a + c] = u_local[2 * conn[a] + c];
                due[2 * a + c] = du_local[2 * conn[a] + c];
            }
        }
        change += element_energy_change(xe, ue, due, mat, quad);
    }
    return change - load.dot(du_local);
}

}  // namespace feti_sqp
