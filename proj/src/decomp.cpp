#include "feti_sqp/decomp.hpp"

#include "feti_sqp/errors.hpp"

#include <algorithm>
#include <string>

namespace feti_sqp {

Decomposition partition(const StructuredMesh& mesh, int n1, int n2) {
    if (n1 <= 0 || n2 <= 0) throw ConfigError("subdomain counts must be positive");
    if (mesh.nx % n1 != 0) {
        throw ConfigError("subdomains.n1 = " + std::to_string(n1) + " does not divide geometry.nx = " +
                          std::to_string(mesh.nx));
    }
    if (mesh.ny % n2 != 0) {
        throw ConfigError("subdomains.n2 = " + std::to_string(n2) + " does not divide geometry.ny = " +
                          std::to_string(mesh.ny));
    }
    Decomposition d;
    d.n1 = n1;
    d.n2 = n2;
    d.num_global_dofs = mesh.num_dofs();
    d.node_multiplicity.assign(mesh.num_nodes(), 0);

    const int sx = mesh.nx / n1;
    const int sy = mesh.ny / n2;
    for (int iy = 0; iy < n2; ++iy) {
        for (int ix = 0; ix < n1; ++ix) {
            std::vector<int> elements;
            elements.reserve(static_cast<std::size_t>(sx) * sy);
            for (int ey = iy * sy; ey < (iy + 1) * sy; ++ey)
                for (int ex = ix * sx; ex < (ix + 1) * sx; ++ex) elements.push_back(mesh.element_id(ex, ey));
            Subdomain s;
            s.ix = ix;
            s.iy = iy;
            s.part = make_part(mesh, std::move(elements));
            const int x0 = mesh.order * ix * sx;
            const int x1 = mesh.order * (ix + 1) * sx;
            const int y0 = mesh.order * iy * sy;
            const int y1 = mesh.order * (iy + 1) * sy;
            s.corner_nodes = {mesh.node_id(x0, y0), mesh.node_id(x1, y0), mesh.node_id(x0, y1),
                              mesh.node_id(x1, y1)};
            for (int g : s.part.global_node) ++d.node_multiplicity[g];
            d.subdomains.push_back(std::move(s));
        }
    }
    return d;
}

DofClassification classify_dofs(const StructuredMesh& mesh, const Decomposition& decomposition) {
    const int nnodes = mesh.num_nodes();
    std::vector<char> corner(nnodes, 0);
    for (const auto& s : decomposition.subdomains)
        for (int c : s.corner_nodes) corner[c] = 1;

    DofClassification c;
    c.kind.resize(mesh.num_dofs());
    for (int node = 0; node < nnodes; ++node) {
        const int mult = decomposition.node_multiplicity[node];
        for (int comp = 0; comp < 2; ++comp) {
            const int dof = 2 * node + comp;
            DofKind k;
            if (mesh.dirichlet[dof]) {
                k = DofKind::Fixed;
            } else if (mult <= 1) {
                k = DofKind::Interior;
            } else if (corner[node]) {
                k = DofKind::Primal;
            } else {
                k = DofKind::Dual;
            }
            c.kind[dof] = k;
            switch (k) {
                case DofKind::Fixed: c.fixed.push_back(dof); break;
                case DofKind::Interior: c.interior.push_back(dof); break;
                case DofKind::Dual: c.dual.push_back(dof); break;
                case DofKind::Primal: c.primal.push_back(dof); break;
            }
        }
    }
    return c;
}

TornLayout build_layout(const Decomposition& decomposition, const DofClassification& classification) {
    TornLayout layout;
    layout.num_global_dofs = decomposition.num_global_dofs;
    layout.primal_dofs = classification.primal;
    layout.n_primal = static_cast<int>(classification.primal.size());
    std::vector<int> primal_index(decomposition.num_global_dofs, -1);
    for (int p = 0; p < layout.n_primal; ++p) primal_index[classification.primal[p]] = p;

    Index offset = 0;
    for (const auto& s : decomposition.subdomains) {
        SubdomainLayout sl;
        sl.offset = offset;
        const int nloc = s.part.num_dofs();
        sl.global_dof.resize(nloc);
        sl.b_index.assign(nloc, -1);
        std::vector<int> dual_local;
        int next = 0;
        for (int l = 0; l < nloc; ++l) {
            const int g = 2 * s.part.global_node[l / 2] + l % 2;
            sl.global_dof[l] = g;
            switch (classification.kind[g]) {
                case DofKind::Fixed:
                case DofKind::Interior: sl.b_index[l] = next++; break;
                case DofKind::Dual: dual_local.push_back(l); break;
                case DofKind::Primal:
                    sl.primal_local.push_back(l);
                    sl.primal_global.push_back(primal_index[g]);
                    break;
            }
        }
        sl.n_interior = next;
        for (int l : dual_local) sl.b_index[l] = next++;
        sl.n_dual = static_cast<int>(dual_local.size());
        offset += sl.n_b();
        layout.subdomains.push_back(std::move(sl));
    }
    layout.primal_offset = offset;
    layout.size = offset + layout.n_primal;
    return layout;
}

Vector TornLayout::extract_local(int i, const Vector& torn) const {
    const auto& sl = subdomains[i];
    Vector local(static_cast<Index>(sl.global_dof.size()));
    for (std::size_t l = 0; l < sl.global_dof.size(); ++l)
        if (sl.b_index[l] >= 0) local[l] = torn[sl.offset + sl.b_index[l]];
    for (int p = 0; p < sl.n_primal_local(); ++p)
        local[sl.primal_local[p]] = torn[primal_offset + sl.primal_global[p]];
    return local;
}

void TornLayout::accumulate_local(int i, const Vector& local, Vector& torn) const {
    const auto& sl = subdomains[i];
    for (std::size_t l = 0; l < sl.global_dof.size(); ++l)
        if (sl.b_index[l] >= 0) torn[sl.offset + sl.b_index[l]] = local[l];
    for (int p = 0; p < sl.n_primal_local(); ++p)
        torn[primal_offset + sl.primal_global[p]] += local[sl.primal_local[p]];
}

JumpOperator::JumpOperator(std::vector<Row> rows, Index cols) : rows_(std::move(rows)), cols_(cols) {
    std::vector<Triplet> t;
    t.reserve(2 * rows_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        t.emplace_back(static_cast<Index>(r), rows_[r].plus, 1.0);
        t.emplace_back(static_cast<Index>(r), rows_[r].minus, -1.0);
    }
    matrix_.resize(static_cast<Index>(rows_.size()), cols_);
    matrix_.setFromTriplets(t.begin(), t.end());
}

Vector JumpOperator::apply(const Vector& u) const {
    Vector r(rows());
    for (std::size_t k = 0; k < rows_.size(); ++k) r[static_cast<Index>(k)] = u[rows_[k].plus] - u[rows_[k].minus];
    return r;
}

Vector JumpOperator::apply_transpose(const Vector& lambda) const {
    Vector r = Vector::Zero(cols_);
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        r[rows_[k].plus] += lambda[static_cast<Index>(k)];
        r[rows_[k].minus] -= lambda[static_cast<Index>(k)];
    }
    return r;
}

JumpOperator build_jump(const TornLayout& layout, const DofClassification& classification) {
    // Collect the torn copies of every dual dof in subdomain order.
    std::vector<std::vector<Index>> copies(layout.num_global_dofs);
    for (const auto& sl : layout.subdomains) {
        for (std::size_t l = 0; l < sl.global_dof.size(); ++l) {
            const int g = sl.global_dof[l];
            if (classification.kind[g] == DofKind::Dual) copies[g].push_back(sl.offset + sl.b_index[l]);
        }
    }
    std::vector<JumpOperator::Row> rows;
    rows.reserve(classification.dual.size());
    for (int g : classification.dual) {
        if (copies[g].size() != 2) {
            throw InternalError("dual dof " + std::to_string(g) + " has multiplicity " +
                                std::to_string(copies[g].size()) + ", expected 2");
        }
        rows.push_back({copies[g][0], copies[g][1], g});
    }
    return JumpOperator(std::move(rows), layout.size);
}

ScaledJump build_scaled_jump(const JumpOperator& jump) {
    // Dual dofs always have multiplicity 2 with vertex primal constraints in 2D.
    ScaledJump s;
    s.matrix = 0.5 * jump.matrix();
    return s;
}

Vector scatter_global(const TornLayout& layout, const Vector& global) {
    Vector torn = Vector::Zero(layout.size);
    for (const auto& sl : layout.subdomains)
        for (std::size_t l = 0; l < sl.global_dof.size(); ++l)
            if (sl.b_index[l] >= 0) torn[sl.offset + sl.b_index[l]] = global[sl.global_dof[l]];
    for (int p = 0; p < layout.n_primal; ++p) torn[layout.primal_offset + p] = global[layout.primal_dofs[p]];
    return torn;
}

Vector gather_average(const TornLayout& layout, const Vector& torn) {
    Vector sum = Vector::Zero(layout.num_global_dofs);
    Vector count = Vector::Zero(layout.num_global_dofs);
    for (const auto& sl : layout.subdomains) {
        for (std::size_t l = 0; l < sl.global_dof.size(); ++l) {
            if (sl.b_index[l] < 0) continue;
            sum[sl.global_dof[l]] += torn[sl.offset + sl.b_index[l]];
            count[sl.global_dof[l]] += 1.0;
        }
    }
    for (int p = 0; p < layout.n_primal; ++p) {
        sum[layout.primal_dofs[p]] = torn[layout.primal_offset + p];
        count[layout.primal_dofs[p]] = 1.0;
    }
    for (Index g = 0; g < sum.size(); ++g)
        if (count[g] > 0.0) sum[g] /= count[g];
    return sum;
}

}  // namespace feti_sqp
