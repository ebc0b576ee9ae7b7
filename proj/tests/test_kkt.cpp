#include "feti_sqp/errors.hpp"
#include "feti_sqp/kkt.hpp"
#include "feti_sqp/problem.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace feti_sqp;
using namespace test_support;

namespace {

Vector random_admissible_torn(const FetiProblem& p, std::mt19937_64& rng, double amplitude) {
    Vector global = random_vector(rng, p.mesh().num_dofs(), amplitude);
    for (int dof : p.classification().fixed) global[dof] = 0.0;
    return scatter_global(p.layout(), global);
}

int pcg_iterations(const LinearOperator& op, const LinearOperator* precond, const Vector& rhs) {
    return pcg(op, precond, rhs, KrylovConfig{1e-10, 1000}).iterations;
}

class DualOp final : public LinearOperator {
public:
    DualOp(const LinearSolve& h, const RowSparseMatrix& b) : h_(h), b_(b) {}
    Index size() const override { return b_.rows(); }
    Vector apply(const Vector& x) const override { return b_ * h_.solve(b_.transpose() * x); }

private:
    const LinearSolve& h_;
    const RowSparseMatrix& b_;
};

}  // namespace

TEST_CASE("block factorization matches a dense solve") {
    std::mt19937_64 rng(21);
    // 2x2 subdomains, Q2: 8x4 elements give 2 * 17 * 9 = 306 global dofs.
    const FetiProblem p(make_beam_mesh(4.0, 1.0, 8, 4, 2), Material::from_E_nu(210.0, 0.3), 2, 2, 0.1);
    REQUIRE(p.size() <= 600);
    for (double amplitude : {0.0, 1e-2}) {
        const Vector u = random_admissible_torn(p, rng, amplitude);
        const BlockHessian h = p.hessian_blocks(u);
        const Matrix dense = h.to_dense();
        CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * dense.cwiseAbs().maxCoeff());
        const BlockFactorization f = factor_block_hessian(h);
        for (int trial = 0; trial < 3; ++trial) {
            const Vector v = random_vector(rng, p.size());
            const Vector oracle = dense.ldlt().solve(v);
            CHECK(rel_err(f.solve(v), oracle) <= 1e-10);
            CHECK(rel_err(f.solve(dense * v), v) <= 1e-10);
            CHECK(rel_err(h.apply(v), Vector(dense * v)) <= 1e-14);
            CHECK(rel_err(h.apply(v, 3), Vector(dense * v)) <= 1e-14);
        }
    }
}

TEST_CASE("block factorization edge cases") {
    SUBCASE("single subdomain without primal dofs") {
        const FetiProblem p(make_beam_mesh(4.0, 1.0, 4, 2, 2), Material::from_E_nu(210.0, 0.3), 1, 1, 0.1);
        const BlockHessian h = p.hessian_blocks(Vector::Zero(p.size()));
        CHECK(h.n_primal == 0);
        const BlockFactorization f = factor_block_hessian(h);
        std::mt19937_64 rng(1);
        const Vector v = random_vector(rng, p.size());
        CHECK(rel_err(f.solve(v), Vector(h.to_dense().ldlt().solve(v))) <= 1e-10);
    }
    SUBCASE("identity blocks") {
        BlockHessian h;
        for (int i = 0; i < 2; ++i) {
            SubdomainHessian s;
            s.offset = 3 * i;
            s.n_interior = 2;
            s.n_dual = 1;
            s.k_bb.resize(3, 3);
            s.k_bb.setIdentity();
            s.k_bp.resize(3, 1);
            s.k_pp = Matrix::Identity(1, 1) * 0.5;
            s.primal_global = {0};
            h.subdomains.push_back(s);
        }
        h.primal_offset = 6;
        h.n_primal = 1;
        const BlockFactorization f = factor_block_hessian(h);
        const Vector v = Vector::LinSpaced(7, 1.0, 7.0);
        CHECK(rel_err(f.solve(v), v) < 1e-15);
    }
    SUBCASE("singular block is reported") {
        BlockHessian h;
        SubdomainHessian s;
        s.n_interior = 2;
        s.k_bb.resize(2, 2);
        s.k_bb.insert(0, 0) = 1.0;
        s.k_bp.resize(2, 0);
        s.k_pp.resize(0, 0);
        h.subdomains.push_back(s);
        h.primal_offset = 2;
        CHECK_THROWS_AS(factor_block_hessian(h), FactorizationError);
    }
}

TEST_CASE("indefinite blocks are factored") {
    BlockHessian h;
    SubdomainHessian s;
    s.n_interior = 2;
    s.k_bb.resize(2, 2);
    s.k_bb.insert(0, 0) = 2.0;
    s.k_bb.insert(1, 1) = -3.0;
    s.k_bp.resize(2, 0);
    s.k_pp.resize(0, 0);
    h.subdomains.push_back(s);
    h.primal_offset = 2;
    const BlockFactorization f = factor_block_hessian(h);
    CHECK(rel_err(f.solve(Vector::Ones(2)), Vector(Eigen::Vector2d(0.5, -1.0 / 3.0))) < 1e-15);
}

TEST_CASE("dirichlet preconditioner") {
    const FetiProblem p(make_beam_mesh(8.0, 1.0, 16, 4, 2), Material::from_E_nu(210.0, 0.3), 2, 1, 0.1);
    const BlockHessian h = p.hessian_blocks(Vector::Zero(p.size()));
    const DirichletPreconditioner m = build_dirichlet_preconditioner(h, p.scaled_jump());
    REQUIRE(m.size() == p.jump().rows());
    std::mt19937_64 rng(8);
    const Vector a = random_vector(rng, m.size());
    const Vector b = random_vector(rng, m.size());
    CHECK(std::abs(a.dot(m.apply(b)) - b.dot(m.apply(a))) <= 1e-12 * std::abs(a.dot(m.apply(b))));
    CHECK(a.dot(m.apply(a)) > 0.0);
    CHECK(rel_err(build_dirichlet_preconditioner(h, p.scaled_jump(), 4).apply(a), m.apply(a)) < 1e-14);

    // Preconditioned CG on the dual system needs no more iterations.
    const BlockFactorization f = factor_block_hessian(h);
    const DualOp dual(f, p.constraints());
    const Vector rhs = random_vector(rng, m.size());
    const int with = pcg_iterations(dual, &m, rhs);
    const int without = pcg_iterations(dual, nullptr, rhs);
    CHECK(with <= without);
}

TEST_CASE("dirichlet preconditioner on one interface pair") {
    // One subdomain-pair with a single dual dof: M^{-1} is a positive scalar.
    BlockHessian h;
    for (int i = 0; i < 2; ++i) {
        SubdomainHessian s;
        s.offset = 2 * i;
        s.n_interior = 1;
        s.n_dual = 1;
        s.k_bb.resize(2, 2);
        s.k_bb.insert(0, 0) = 2.0;
        s.k_bb.insert(0, 1) = -1.0;
        s.k_bb.insert(1, 0) = -1.0;
        s.k_bb.insert(1, 1) = 2.0;
        s.k_bp.resize(2, 0);
        s.k_pp.resize(0, 0);
        h.subdomains.push_back(s);
    }
    h.primal_offset = 4;
    ScaledJump bd;
    bd.matrix.resize(1, 4);
    bd.matrix.insert(0, 1) = 0.5;
    bd.matrix.insert(0, 3) = -0.5;
    const DirichletPreconditioner m = build_dirichlet_preconditioner(h, bd);
    // S = 2 - 1/2 = 1.5 per side; M^{-1} = 0.25 * (1.5 + 1.5).
    CHECK(m.apply(Vector::Ones(1))[0] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("pcg") {
    const KrylovConfig config{1e-12, 100};
    SUBCASE("identity") {
        const DenseOperator id(Matrix::Identity(5, 5));
        const Vector rhs = Vector::LinSpaced(5, -1.0, 3.0);
        const PcgResult r = pcg(id, nullptr, rhs, config);
        CHECK(r.iterations == 1);
        CHECK(rel_err(r.x, rhs) < 1e-15);
    }
    SUBCASE("2x2 system") {
        Matrix a(2, 2);
        a << 4.0, 1.0, 1.0, 3.0;
        const Vector rhs = Eigen::Vector2d(1.0, 2.0);
        const PcgResult r = pcg(DenseOperator(a), nullptr, rhs, config);
        CHECK(r.iterations <= 2);
        CHECK(rel_err(r.x, Vector(a.ldlt().solve(rhs))) < 1e-12);
    }
    SUBCASE("zero rhs") {
        const PcgResult r = pcg(DenseOperator(Matrix::Identity(3, 3)), nullptr, Vector::Zero(3), config);
        CHECK(r.iterations == 0);
        CHECK(r.x.isZero(0.0));
    }
    SUBCASE("breakdown on negative curvature") {
        Matrix a = Matrix::Identity(2, 2);
        a(1, 1) = -1.0;
        try {
            pcg(DenseOperator(a), nullptr, Eigen::Vector2d(0.0, 1.0), config);
            FAIL("expected a breakdown");
        } catch (const KrylovError& e) {
            CHECK(e.kind() == KrylovError::Kind::Breakdown);
        }
    }
    SUBCASE("iteration limit") {
        const Matrix a = Vector::LinSpaced(6, 1.0, 6.0).asDiagonal();
        try {
            pcg(DenseOperator(a), nullptr, Vector::Ones(6), KrylovConfig{1e-12, 2});
            FAIL("expected the iteration limit");
        } catch (const KrylovError& e) {
            CHECK(e.kind() == KrylovError::Kind::MaxIterations);
            CHECK(e.iterations() == 2);
        }
    }
}

TEST_CASE("solve_kkt") {
    const KrylovConfig config{1e-12, 100};
    SUBCASE("hand-solved 2x2 system") {
        const DenseSymmetricSolve h(Matrix::Identity(2, 2));
        RowSparseMatrix b(1, 2);
        b.insert(0, 0) = 1.0;
        b.insert(0, 1) = -1.0;
        const KktStep s = solve_kkt(h, b, Eigen::Vector2d(-2.0, 0.0), Vector::Zero(1), nullptr, config);
        CHECK(s.delta_lambda[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(s.delta_u[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(s.delta_u[1] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("stationary point") {
        const DenseSymmetricSolve h(Matrix::Identity(3, 3));
        RowSparseMatrix b(1, 3);
        b.insert(0, 0) = 1.0;
        b.insert(0, 2) = -1.0;
        const KktStep s = solve_kkt(h, b, Vector::Zero(3), Vector::Zero(1), nullptr, config);
        CHECK(s.delta_u.isZero(0.0));
        CHECK(s.delta_lambda.isZero(0.0));
        CHECK(s.krylov_iterations == 0);
    }
    SUBCASE("random saddle systems against a dense solve") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 4 + trial % 9;
            const int m = 1 + trial % 3;
            const Matrix hm = random_spd(rng, n);
            RowSparseMatrix b(m, n);
            for (int r = 0; r < m; ++r) {
                b.insert(r, r) = 1.0;
                b.insert(r, n - 1 - r) = -1.0;
            }
            const Vector grad = random_vector(rng, n);
            const Vector bu = random_vector(rng, m);
            Matrix kkt = Matrix::Zero(n + m, n + m);
            kkt.topLeftCorner(n, n) = hm;
            kkt.topRightCorner(n, m) = Matrix(b.transpose());
            kkt.bottomLeftCorner(m, n) = Matrix(b);
            Vector rhs(n + m);
            rhs << -grad, -bu;
            const Vector oracle = kkt.fullPivLu().solve(rhs);
            const KktStep s = solve_kkt(DenseSymmetricSolve(hm), b, grad, bu, nullptr, config);
            Vector got(n + m);
            got << s.delta_u, s.delta_lambda;
            CHECK(rel_err(got, oracle) <= 1e-8);
            CHECK((kkt * got - rhs).cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
    SUBCASE("dimension mismatch") {
        const DenseSymmetricSolve h(Matrix::Identity(2, 2));
        RowSparseMatrix b(1, 3);
        CHECK_THROWS_AS(solve_kkt(h, b, Vector::Zero(2), Vector::Zero(1), nullptr, config), ParameterError);
    }
}

TEST_CASE("torn KKT step on the beam satisfies both equations") {
    const FetiProblem p(make_beam_mesh(8.0, 1.0, 16, 4, 2), Material::from_E_nu(210.0, 0.3), 4, 2, 0.1);
    const Vector u = Vector::Zero(p.size());
    const auto h = p.exact_hessian(u);
    const auto precond = h->build_preconditioner();
    REQUIRE(precond);
    const Vector grad = p.gradient(u);
    const auto& b = p.constraints();
    const Vector bu = b * u;
    const KktStep s = solve_kkt(*h, b, grad, bu, precond.get(), KrylovConfig{});
    const double scale = grad.cwiseAbs().maxCoeff();
    CHECK((h->apply(s.delta_u) + b.transpose() * s.delta_lambda + grad).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK((b * (u + s.delta_u)).cwiseAbs().maxCoeff() <= 1e-9 * s.delta_u.cwiseAbs().maxCoeff());
    CHECK(s.krylov_iterations > 0);
}
