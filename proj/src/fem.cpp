#include "feti_sqp/fem.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace feti_sqp {

std::pair<double, double> lame_from_E_nu(double E, double nu) {
    if (!(E > 0.0)) {
        throw ParameterError("Young's modulus must be positive, got " + std::to_string(E));
    }
    if (!(nu >= 0.0 && nu < 0.5)) {
        std::ostringstream os;
        os << "Poisson ratio must lie in [0, 0.5) for a compressible material, got " << nu;
        throw ParameterError(os.str());
    }
    return {E / (2.0 * (1.0 + nu)), E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))};
}

Material Material::from_E_nu(double E, double nu) {
    const auto [mu, lambda] = lame_from_E_nu(E, nu);
    return Material{E, nu, mu, lambda};
}

PointResponse neo_hookean_response(const Eigen::Matrix2d& F, const Material& mat, bool with_tangent) {
    PointResponse r;
    const double psi = F.determinant();
    if (!(psi > 0.0)) {
        throw InadmissibleDeformation("det F = " + std::to_string(psi) + " <= 0");
    }
    const double log_psi = std::log(psi);
    // Plane strain: the out-of-plane stretch is 1, so tr(C) = F:F + 1.
    r.psi = 0.5 * mat.mu * (F.squaredNorm() - 2.0) - mat.mu * log_psi + 0.5 * mat.lambda * log_psi * log_psi;

    const Eigen::Matrix2d Finv = F.inverse();
    const Eigen::Matrix2d FinvT = Finv.transpose();
    r.P = mat.mu * (F - FinvT) + mat.lambda * log_psi * FinvT;
    if (!with_tangent) return r;

    const double c1 = mat.mu - mat.lambda * log_psi;
    for (int i = 0; i < 2; ++i) {
        for (int J = 0; J < 2; ++J) {
            for (int k = 0; k < 2; ++k) {
                for (int L = 0; L < 2; ++L) {
                    double a = c1 * Finv(L, i) * Finv(J, k) + mat.lambda * Finv(J, i) * Finv(L, k);
                    if (i == k && J == L) a += mat.mu;
                    r.A(2 * i + J, 2 * k + L) = a;
                }
            }
        }
    }
    return r;
}

void gauss_legendre_1d(int n, std::vector<double>& points, std::vector<double>& weights) {
    switch (n) {
        case 1:
            points = {0.0};
            weights = {2.0};
            return;
        case 2: {
            const double a = 1.0 / std::sqrt(3.0);
            points = {-a, a};
            weights = {1.0, 1.0};
            return;
        }
        case 3: {
            const double a = std::sqrt(0.6);
            points = {-a, 0.0, a};
            weights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            return;
        }
        case 4: {
            const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
            const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
            const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
            points = {-b, -a, a, b};
            weights = {wb, wa, wa, wb};
            return;
        }
        case 5: {
            const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
            const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
            points = {-b, -a, 0.0, a, b};
            weights = {wb, wa, 128.0 / 225.0, wa, wb};
            return;
        }
        default:
            throw ParameterError("Gauss rule with " + std::to_string(n) + " points is not available");
    }
}

Quadrature Quadrature::gauss(int n) {
    std::vector<double> p, w;
    gauss_legendre_1d(n, p, w);
    Quadrature q;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            q.points.emplace_back(p[i], p[j]);
            q.weights.push_back(w[i] * w[j]);
        }
    }
    return q;
}

LagrangeQuad::LagrangeQuad(int order) : order_(order) {
    if (order != 1 && order != 2) {
        throw ParameterError("element order must be 1 or 2, got " + std::to_string(order));
    }
}

void LagrangeQuad::basis_1d(double t, double* value, double* derivative) const {
    if (order_ == 1) {
        value[0] = 0.5 * (1.0 - t);
        value[1] = 0.5 * (1.0 + t);
        derivative[0] = -0.5;
        derivative[1] = 0.5;
        return;
    }
    value[0] = 0.5 * t * (t - 1.0);
    value[1] = 1.0 - t * t;
    value[2] = 0.5 * t * (t + 1.0);
    derivative[0] = t - 0.5;
    derivative[1] = -2.0 * t;
    derivative[2] = t + 0.5;
}

Vector LagrangeQuad::values(const Eigen::Vector2d& xi) const {
    std::array<double, 3> nx{}, ny{}, dx{}, dy{};
    basis_1d(xi[0], nx.data(), dx.data());
    basis_1d(xi[1], ny.data(), dy.data());
    Vector n(nodes());
    for (int b = 0; b <= order_; ++b)
        for (int a = 0; a <= order_; ++a) n[b * (order_ + 1) + a] = nx[a] * ny[b];
    return n;
}

Eigen::Matrix<double, Eigen::Dynamic, 2> LagrangeQuad::gradients(const Eigen::Vector2d& xi) const {
    std::array<double, 3> nx{}, ny{}, dx{}, dy{};
    basis_1d(xi[0], nx.data(), dx.data());
    basis_1d(xi[1], ny.data(), dy.data());
    Eigen::Matrix<double, Eigen::Dynamic, 2> g(nodes(), 2);
    for (int b = 0; b <= order_; ++b) {
        for (int a = 0; a <= order_; ++a) {
            const int k = b * (order_ + 1) + a;
            g(k, 0) = dx[a] * ny[b];
            g(k, 1) = nx[a] * dy[b];
        }
    }
    return g;
}

ElementResult element_energy_grad_hess(const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords,
                                       const Vector& u_elem, const Material& mat,
                                       const Quadrature& quadrature, EvalMode mode) {
    const int n = static_cast<int>(coords.rows());
    const int order = n == 4 ? 1 : n == 9 ? 2 : 0;
    if (order == 0) throw ParameterError("element must have 4 or 9 nodes");
    if (u_elem.size() != 2 * n) throw ParameterError("element displacement has wrong size");
    const LagrangeQuad shape(order);

    ElementResult out;
    const bool want_grad = mode != EvalMode::Energy;
    const bool want_hess = mode == EvalMode::Hessian;
    if (want_grad) out.grad = Vector::Zero(2 * n);
    if (want_hess) out.hess = Matrix::Zero(2 * n, 2 * n);

    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> u(u_elem.data(), n, 2);

    for (std::size_t q = 0; q < quadrature.points.size(); ++q) {
        const Eigen::Matrix<double, Eigen::Dynamic, 2> dN_ref = shape.gradients(quadrature.points[q]);
        const Eigen::Matrix2d jac = coords.transpose() * dN_ref;  // dX/dxi
        const double det_jac = jac.determinant();
        if (!(det_jac > 0.0)) throw ParameterError("element has nonpositive Jacobian");
        // dN/dX = dN/dxi * (dX/dxi)^{-1}
        const Eigen::Matrix<double, Eigen::Dynamic, 2> dN = dN_ref * jac.inverse();
        const Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + u.transpose() * dN;
        const double w = quadrature.weights[q] * det_jac;

        const PointResponse r = neo_hookean_response(F, mat, want_hess);
        out.energy += w * r.psi;
        if (!want_grad) continue;

        // g_{a i} = P_iJ dN_a/dX_J
        const Eigen::Matrix<double, Eigen::Dynamic, 2> PdN = dN * r.P.transpose();
        for (int a = 0; a < n; ++a) {
            out.grad[2 * a] += w * PdN(a, 0);
            out.grad[2 * a + 1] += w * PdN(a, 1);
        }
        if (!want_hess) continue;

        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                for (int i = 0; i < 2; ++i) {
                    for (int k = 0; k < 2; ++k) {
                        double s = 0.0;
                        for (int J = 0; J < 2; ++J)
                            for (int L = 0; L < 2; ++L) s += dN(a, J) * r.A(2 * i + J, 2 * k + L) * dN(b, L);
                        out.hess(2 * a + i, 2 * b + k) += w * s;
                    }
                }
            }
        }
    }
    if (want_hess) out.hess = 0.5 * (out.hess + out.hess.transpose()).eval();
    return out;
}

double energy_density_change(const Eigen::Matrix2d& F, const Eigen::Matrix2d& dF, const Material& mat) {
    const double psi = F.determinant();
    // det(F + dF) = det F + tr(adj(F) dF) + det dF in 2D.
    const double d_psi = F(1, 1) * dF(0, 0) - F(1, 0) * dF(0, 1) - F(0, 1) * dF(1, 0) + F(0, 0) * dF(1, 1) +
                         dF.determinant();
    if (!(psi > 0.0) || !(psi + d_psi > 0.0)) {
        throw InadmissibleDeformation("det F <= 0 along the step");
    }
    const double log_psi = std::log(psi);
    const double d_log = std::log1p(d_psi / psi);
    const double d_trace = (dF.array() * (2.0 * F + dF).array()).sum();
    return 0.5 * mat.mu * d_trace - mat.mu * d_log + 0.5 * mat.lambda * d_log * (2.0 * log_psi + d_log);
}

double element_energy_change(const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords, const Vector& u_elem,
                             const Vector& du_elem, const Material& mat, const Quadrature& quadrature) {
    const int n = static_cast<int>(coords.rows());
    const LagrangeQuad shape(n == 4 ? 1 : 2);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> u(u_elem.data(), n, 2);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> du(du_elem.data(), n, 2);
    double change = 0.0;
    for (std::size_t q = 0; q < quadrature.points.size(); ++q) {
        const Eigen::Matrix<double, Eigen::Dynamic, 2> dN_ref = shape.gradients(quadrature.points[q]);
        const Eigen::Matrix2d jac = coords.transpose() * dN_ref;
        const double det_jac = jac.determinant();
        const Eigen::Matrix<double, Eigen::Dynamic, 2> dN = dN_ref * jac.inverse();
        const Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + u.transpose() * dN;
        const Eigen::Matrix2d dF = du.transpose() * dN;
        change += quadrature.weights[q] * det_jac * energy_density_change(F, dF, mat);
    }
    return change;
}

}  // namespace feti_sqp
