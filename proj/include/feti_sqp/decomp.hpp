#pragma once

#include "feti_sqp/linalg.hpp"
#include "feti_sqp/mesh.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace feti_sqp {

/// One rectangular block of elements of the global mesh.
struct Subdomain {
    int ix = 0;  ///< position in the subdomain grid along x
    int iy = 0;
    MeshPart part;
    /// Global node ids of the four geometric corners (SW, SE, NW, NE).
    std::array<int, 4> corner_nodes{};
};

struct Decomposition {
    int n1 = 1;
    int n2 = 1;
    int num_global_dofs = 0;
    std::vector<Subdomain> subdomains;  ///< ordered by (iy, ix), x fastest
    std::vector<int> node_multiplicity; ///< number of subdomains touching each global node

    int num_subdomains() const { return static_cast<int>(subdomains.size()); }
};

/// Tears the mesh into an n1 x n2 grid of subdomains. n1 must divide nx and
/// n2 must divide ny.
Decomposition partition(const StructuredMesh& mesh, int n1, int n2);

enum class DofKind : std::uint8_t { Fixed, Interior, Dual, Primal };

/// Interior, dual and primal sets partition the non-Dirichlet dofs. Primal
/// dofs sit on subdomain corner vertices shared by at least two subdomains;
/// dual dofs are the remaining shared dofs.
struct DofClassification {
    std::vector<DofKind> kind;  ///< per global dof
    std::vector<int> interior;  ///< sorted global dofs
    std::vector<int> dual;
    std::vector<int> primal;
    std::vector<int> fixed;
};

DofClassification classify_dofs(const StructuredMesh& mesh, const Decomposition& decomposition);

/// Placement of one subdomain inside a torn vector.
struct SubdomainLayout {
    Index offset = 0;         ///< start of u_B^(i)
    int n_interior = 0;       ///< interior and fixed dofs, stored first
    int n_dual = 0;           ///< dual dofs, stored after the interior block
    std::vector<int> global_dof;     ///< local dof -> global dof
    std::vector<int> b_index;        ///< local dof -> position in u_B^(i), -1 if primal
    std::vector<int> primal_local;   ///< primal slot -> local dof
    std::vector<int> primal_global;  ///< primal slot -> global primal index

    int n_b() const { return n_interior + n_dual; }
    int n_primal_local() const { return static_cast<int>(primal_local.size()); }
};

/// Fixed dof layout of u~ = [u_B^(1), ..., u_B^(N), u_Pi].
struct TornLayout {
    std::vector<SubdomainLayout> subdomains;
    Index primal_offset = 0;
    int n_primal = 0;
    Index size = 0;
    int num_global_dofs = 0;
    std::vector<int> primal_dofs;  ///< global primal index -> global dof

    /// Local subdomain vector [u_B^(i), R^(i) u_Pi] in local dof order.
    Vector extract_local(int i, const Vector& torn) const;
    /// torn_B^(i) = local_B, torn_Pi += R^(i)T local_Pi.
    void accumulate_local(int i, const Vector& local, Vector& torn) const;
};

TornLayout build_layout(const Decomposition& decomposition, const DofClassification& classification);

/// Signed boolean constraint operator B. Each row couples two copies of one
/// dual dof: +1 on the copy in the lower-numbered subdomain, -1 on the other.
class JumpOperator {
public:
    struct Row {
        Index plus = 0;   ///< torn index with coefficient +1
        Index minus = 0;  ///< torn index with coefficient -1
        int global_dof = 0;
    };

    JumpOperator() = default;
    JumpOperator(std::vector<Row> rows, Index cols);

    Index rows() const { return static_cast<Index>(rows_.size()); }
    Index cols() const { return cols_; }
    const std::vector<Row>& row_pairs() const { return rows_; }
    const RowSparseMatrix& matrix() const { return matrix_; }

    Vector apply(const Vector& u) const;
    Vector apply_transpose(const Vector& lambda) const;

private:
    std::vector<Row> rows_;
    Index cols_ = 0;
    RowSparseMatrix matrix_;
};

JumpOperator build_jump(const TornLayout& layout, const DofClassification& classification);

/// Jump operator with entries scaled by the inverse multiplicity of the dof
/// (+-1/2 for the two copies of a dual dof). Same sparsity as B.
struct ScaledJump {
    RowSparseMatrix matrix;
};

ScaledJump build_scaled_jump(const JumpOperator& jump);

/// Copies global values into every torn copy; the result satisfies B u = 0.
Vector scatter_global(const TornLayout& layout, const Vector& global);
/// Averages all torn copies of each global dof.
Vector gather_average(const TornLayout& layout, const Vector& torn);

}  // namespace feti_sqp
