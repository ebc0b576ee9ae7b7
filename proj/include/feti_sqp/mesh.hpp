#pragma once

#include "feti_sqp/fem.hpp"
#include "feti_sqp/linalg.hpp"

#include <vector>

namespace feti_sqp {

/// Structured nx x ny grid of Q1 or Q2 quadrilaterals on [0, lx] x [0, ly].
/// Nodes form a (order*nx + 1) x (order*ny + 1) lattice numbered row by row
/// (x fastest). Two dofs per node, node-major: dof = 2 * node + component.
struct StructuredMesh {
    int nx = 0;
    int ny = 0;
    double lx = 0.0;
    double ly = 0.0;
    int order = 1;

    Eigen::Matrix<double, Eigen::Dynamic, 2> coords;
    /// Element-to-node table, nodes_per_element() entries per element in
    /// LagrangeQuad order.
    std::vector<int> connectivity;
    /// One flag per dof; clamped dofs carry u = 0.
    std::vector<char> dirichlet;

    int nodes_x() const { return order * nx + 1; }
    int nodes_y() const { return order * ny + 1; }
    int num_nodes() const { return nodes_x() * nodes_y(); }
    int num_dofs() const { return 2 * num_nodes(); }
    int num_elements() const { return nx * ny; }
    int nodes_per_element() const { return (order + 1) * (order + 1); }
    int node_id(int i, int j) const { return j * nodes_x() + i; }
    int element_id(int ex, int ey) const { return ey * nx + ex; }
};

/// Cantilever mesh: the edge x = 0 is fully clamped.
StructuredMesh make_beam_mesh(double lx, double ly, int nx, int ny, int order);

/// A set of elements of a StructuredMesh with its own compact node numbering.
/// Serves both as a subdomain and (with all elements) as the monolithic problem.
struct MeshPart {
    int order = 1;
    std::vector<int> elements;     ///< global element ids, ascending
    std::vector<int> global_node;  ///< local node -> global node
    Eigen::Matrix<double, Eigen::Dynamic, 2> coords;
    std::vector<int> connectivity;  ///< local node ids
    std::vector<char> fixed;        ///< per local dof

    int num_nodes() const { return static_cast<int>(global_node.size()); }
    int num_dofs() const { return 2 * num_nodes(); }
    int num_elements() const { return static_cast<int>(elements.size()); }
    int nodes_per_element() const { return (order + 1) * (order + 1); }
};

/// Builds a part from the given global elements (any order; stored sorted).
/// Local nodes are numbered by ascending global id.
MeshPart make_part(const StructuredMesh& mesh, std::vector<int> elements);

/// Consistent nodal load of a uniform traction (force per unit reference
/// length, acting in -y) on the x = lx edge, restricted to the elements of
/// the part. Zero on fixed dofs.
Vector right_edge_traction_load(const StructuredMesh& mesh, const MeshPart& part, double traction);

/// Energy J = sum of element energies - load^T u together with gradient and
/// Hessian. Fixed dofs are eliminated symmetrically: their gradient entries
/// are 0 and their Hessian rows/columns are unit vectors.
struct PartEvaluation {
    double energy = 0.0;
    Vector grad;
    SparseMatrix hess;
};

PartEvaluation assemble_subdomain(const MeshPart& part, const Material& mat, const Vector& load,
                                  const Vector& u_local, EvalMode mode = EvalMode::Hessian);

/// J(u_local + du_local) - J(u_local) for the same energy, accumulated from
/// pointwise increments. Fixed dofs of du_local must be zero.
double subdomain_energy_change(const MeshPart& part, const Material& mat, const Vector& load, const Vector& u_local,
                               const Vector& du_local);

}  // namespace feti_sqp
