#include "feti_sqp/decomp.hpp"
#include "feti_sqp/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace feti_sqp;
using namespace test_support;

TEST_CASE("partition geometry") {
    const StructuredMesh m = make_beam_mesh(8.0, 4.0, 8, 4, 1);
    const Decomposition d = partition(m, 2, 1);
    REQUIRE(d.num_subdomains() == 2);
    for (const auto& s : d.subdomains) CHECK(s.part.num_elements() == 16);
    // Each element in exactly one subdomain.
    std::vector<int> owner(m.num_elements(), 0);
    for (const auto& s : d.subdomains) {
        for (int e : s.part.elements) ++owner[e];
    }
    CHECK(std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; }));
    // The shared interface is the vertical line x = 4.
    for (int n = 0; n < m.num_nodes(); ++n) CHECK((d.node_multiplicity[n] == 2) == (m.coords(n, 0) == 4.0));

    try {
        partition(m, 3, 1);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("n1") != std::string::npos);
    }
    CHECK_THROWS_AS(partition(m, 1, 3), ConfigError);
}

TEST_CASE("cross point multiplicity") {
    const StructuredMesh m = make_beam_mesh(4.0, 4.0, 4, 4, 2);
    const Decomposition d = partition(m, 2, 2);
    // Brute force: count subdomains whose element nodes contain each node.
    std::vector<int> count(m.num_nodes(), 0);
    for (const auto& s : d.subdomains) {
        std::set<int> nodes(s.part.global_node.begin(), s.part.global_node.end());
        for (int n : nodes) ++count[n];
    }
    CHECK(count == d.node_multiplicity);
    CHECK(d.node_multiplicity[m.node_id(4, 4)] == 4);
}

TEST_CASE("dof classification") {
    SUBCASE("2x1 Q1 interface with five nodes") {
        const StructuredMesh m = make_beam_mesh(8.0, 4.0, 8, 4, 1);
        const Decomposition d = partition(m, 2, 1);
        const DofClassification c = classify_dofs(m, d);
        CHECK(c.primal.size() == 4);
        CHECK(c.dual.size() == 6);
        for (int dof : c.primal) CHECK(m.coords(dof / 2, 0) == 4.0);
        const TornLayout layout = build_layout(d, c);
        CHECK(layout.subdomains[0].n_dual == 6);
        CHECK(layout.subdomains[1].n_dual == 6);
        CHECK(layout.n_primal == 4);
        const JumpOperator b = build_jump(layout, c);
        CHECK(b.rows() == 6);
    }
    SUBCASE("single subdomain") {
        const StructuredMesh m = make_beam_mesh(8.0, 1.0, 8, 2, 2);
        const Decomposition d = partition(m, 1, 1);
        const DofClassification c = classify_dofs(m, d);
        CHECK(c.primal.empty());
        CHECK(c.dual.empty());
        CHECK(c.interior.size() + c.fixed.size() == std::size_t(m.num_dofs()));
    }
    SUBCASE("sets partition the free dofs") {
        const StructuredMesh m = make_beam_mesh(8.0, 2.0, 8, 4, 2);
        const Decomposition d = partition(m, 4, 2);
        const DofClassification c = classify_dofs(m, d);
        std::vector<int> seen(m.num_dofs(), 0);
        for (const auto* set : {&c.interior, &c.dual, &c.primal, &c.fixed}) {
            for (int dof : *set) ++seen[dof];
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
        for (int dof : c.fixed) CHECK(m.dirichlet[dof]);
        for (int dof : c.dual) CHECK(d.node_multiplicity[dof / 2] == 2);
        // Coarse dofs: subdomain grid vertices off the clamped edge that touch
        // at least two subdomains, counted from the geometry.
        int corners = 0;
        for (int iy = 0; iy <= 2; ++iy) {
            for (int ix = 1; ix <= 4; ++ix) {
                const int gx = ix * (m.nodes_x() - 1) / 4;
                const int gy = iy * (m.nodes_y() - 1) / 2;
                if (d.node_multiplicity[m.node_id(gx, gy)] >= 2) ++corners;
            }
        }
        CHECK(int(c.primal.size()) == 2 * corners);
        CHECK(build_layout(d, c).n_primal == 2 * corners);
    }
}

TEST_CASE("torn layout") {
    const StructuredMesh m = make_beam_mesh(8.0, 2.0, 8, 4, 2);
    const Decomposition d = partition(m, 2, 2);
    const DofClassification c = classify_dofs(m, d);
    const TornLayout layout = build_layout(d, c);

    Index expected = 0;
    for (const auto& s : layout.subdomains) {
        CHECK(s.offset == expected);
        expected += s.n_b();
        // Interior-first ordering within u_B.
        for (std::size_t l = 0; l < s.global_dof.size(); ++l) {
            const int bi = s.b_index[l];
            const DofKind k = c.kind[s.global_dof[l]];
            if (k == DofKind::Primal) {
                CHECK(bi == -1);
            } else if (k == DofKind::Dual) {
                CHECK(bi >= s.n_interior);
            } else {
                CHECK((bi >= 0 && bi < s.n_interior));
            }
        }
    }
    CHECK(layout.primal_offset == expected);
    CHECK(layout.size == expected + layout.n_primal);

    // extract_local / accumulate_local roundtrip on the B part.
    std::mt19937_64 rng(1);
    const Vector torn = random_vector(rng, layout.size);
    Vector rebuilt = Vector::Zero(layout.size);
    for (int i = 0; i < d.num_subdomains(); ++i) layout.accumulate_local(i, layout.extract_local(i, torn), rebuilt);
    CHECK((rebuilt.head(layout.primal_offset) - torn.head(layout.primal_offset)).cwiseAbs().maxCoeff() == 0.0);
    // Primal entries are summed once per touching subdomain.
    Vector touches = Vector::Zero(layout.n_primal);
    for (const auto& s : layout.subdomains) {
        for (int g : s.primal_global) touches[g] += 1.0;
    }
    CHECK((rebuilt.tail(layout.n_primal) - touches.cwiseProduct(torn.tail(layout.n_primal))).cwiseAbs().maxCoeff() <
          1e-14);
}

TEST_CASE("jump operator") {
    const StructuredMesh m = make_beam_mesh(8.0, 2.0, 8, 4, 2);
    const Decomposition d = partition(m, 2, 2);
    const DofClassification c = classify_dofs(m, d);
    const TornLayout layout = build_layout(d, c);
    const JumpOperator b = build_jump(layout, c);
    CHECK(b.rows() == Index(c.dual.size()));

    const Matrix dense = Matrix(b.matrix());
    for (Index r = 0; r < dense.rows(); ++r) {
        CHECK((dense.row(r).array() != 0.0).count() == 2);
        CHECK(dense.row(r).sum() == 0.0);
        CHECK(dense.row(r).maxCoeff() == 1.0);
        CHECK(dense.row(r).minCoeff() == -1.0);
    }
    Eigen::FullPivLU<Matrix> lu(dense);
    CHECK(lu.rank() == dense.rows());

    std::mt19937_64 rng(2);
    const Vector global = random_vector(rng, m.num_dofs());
    const Vector torn = scatter_global(layout, global);
    CHECK(b.apply(torn).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.matrix() * torn == b.apply(torn));

    // Perturbing one copy of one dual dof produces a single +-delta entry.
    const auto& s = layout.subdomains[1];
    Index pos = s.offset + s.n_interior;  // first dual dof of subdomain 1
    Vector bumped = torn;
    bumped[pos] += 0.25;
    const Vector jump = b.apply(bumped);
    CHECK((jump.array() != 0.0).count() == 1);
    CHECK(jump.cwiseAbs().maxCoeff() == doctest::Approx(0.25));

    const Vector lambda = random_vector(rng, b.rows());
    CHECK(rel_err(b.apply_transpose(lambda), Vector(b.matrix().transpose() * lambda)) < 1e-15);

    const ScaledJump bd = build_scaled_jump(b);
    CHECK((Matrix(bd.matrix) - 0.5 * dense).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scatter and gather") {
    const StructuredMesh m = make_beam_mesh(8.0, 2.0, 8, 4, 2);
    const Decomposition d = partition(m, 4, 2);
    const DofClassification c = classify_dofs(m, d);
    const TornLayout layout = build_layout(d, c);
    std::mt19937_64 rng(4);
    Vector global = random_vector(rng, m.num_dofs());
    for (int dof : c.fixed) global[dof] = 0.0;
    CHECK(rel_err(gather_average(layout, scatter_global(layout, global)), global) < 1e-15);

    // Brute force average over all copies of each global dof.
    const Vector torn = random_vector(rng, layout.size);
    Vector sum = Vector::Zero(m.num_dofs());
    Vector count = Vector::Zero(m.num_dofs());
    for (const auto& s : layout.subdomains) {
        for (std::size_t l = 0; l < s.global_dof.size(); ++l) {
            if (s.b_index[l] < 0) continue;
            sum[s.global_dof[l]] += torn[s.offset + s.b_index[l]];
            count[s.global_dof[l]] += 1.0;
        }
    }
    for (int p = 0; p < layout.n_primal; ++p) {
        sum[layout.primal_dofs[p]] = torn[layout.primal_offset + p];
        count[layout.primal_dofs[p]] = 1.0;
    }
    const Vector expected = sum.cwiseQuotient(count);
    CHECK(rel_err(gather_average(layout, torn), expected) < 1e-15);
}
