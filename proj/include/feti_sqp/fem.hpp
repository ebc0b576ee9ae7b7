#pragma once

#include "feti_sqp/errors.hpp"
#include "feti_sqp/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace feti_sqp {

/// Compressible Neo-Hookean material.
struct Material {
    double E = 210.0;
    double nu = 0.3;
    double mu = 0.0;      ///< first Lame constant (shear modulus)
    double lambda = 0.0;  ///< second Lame constant

    /// Validates (E, nu) and fills the Lame constants.
    static Material from_E_nu(double E, double nu);
};

/// (mu, lambda) for Young's modulus E and Poisson ratio nu.
/// Throws ParameterError unless E > 0 and 0 <= nu < 0.5.
std::pair<double, double> lame_from_E_nu(double E, double nu);

/// Psi(F) = mu/2 (tr(F^T F) - offset) - mu log det F + lambda/2 (log det F)^2.
/// With offset equal to the dimension, Psi(I) = 0. Throws
/// InadmissibleDeformation if det F <= 0.
template <int Dim>
double energy_density(const Eigen::Matrix<double, Dim, Dim>& F, const Material& mat, double trace_offset) {
    const double psi = F.determinant();
    if (!(psi > 0.0)) {
        throw InadmissibleDeformation("det F = " + std::to_string(psi) + " <= 0");
    }
    const double log_psi = std::log(psi);
    return 0.5 * mat.mu * (F.squaredNorm() - trace_offset) - mat.mu * log_psi +
           0.5 * mat.lambda * log_psi * log_psi;
}

/// Plane-strain Neo-Hookean response at one point: energy, first
/// Piola-Kirchhoff stress and the material tangent dP/dF.
/// Tangent is indexed A(2*i+J, 2*k+L) = d P_iJ / d F_kL.
struct PointResponse {
    double psi = 0.0;
    Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
};

PointResponse neo_hookean_response(const Eigen::Matrix2d& F, const Material& mat, bool with_tangent);

/// Tensor-product Gauss-Legendre rule on [-1, 1]^2.
struct Quadrature {
    std::vector<Eigen::Vector2d> points;
    std::vector<double> weights;

    /// n x n rule, 1 <= n <= 5.
    static Quadrature gauss(int n);
    /// Full integration: 2x2 for Q1, 3x3 for Q2.
    static Quadrature for_order(int order) { return gauss(order + 1); }
};

/// 1D Gauss-Legendre points and weights on [-1, 1].
void gauss_legendre_1d(int n, std::vector<double>& points, std::vector<double>& weights);

/// Tensor-product Lagrange shape functions of order 1 (4 nodes) or 2 (9 nodes).
/// Local node (a, b) along (xi, eta) has index b * (order + 1) + a with
/// a, b = 0 .. order from the -1 side.
class LagrangeQuad {
public:
    explicit LagrangeQuad(int order);

    int order() const { return order_; }
    int nodes() const { return (order_ + 1) * (order_ + 1); }

    Vector values(const Eigen::Vector2d& xi) const;
    /// nodes() x 2 matrix of reference derivatives.
    Eigen::Matrix<double, Eigen::Dynamic, 2> gradients(const Eigen::Vector2d& xi) const;

    /// 1D Lagrange basis (order+1 functions) and derivatives at t.
    void basis_1d(double t, double* value, double* derivative) const;

private:
    int order_;
};

/// What an assembly routine computes.
enum class EvalMode { Energy, Gradient, Hessian };

struct ElementResult {
    double energy = 0.0;
    Vector grad;
    Matrix hess;
};

/// Energy of one element and its exact derivatives with respect to the
/// element displacement vector (node-major, 2 dofs per node).
/// coords: nodes x 2 reference coordinates in LagrangeQuad node order.
ElementResult element_energy_grad_hess(const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords,
                                       const Vector& u_elem, const Material& mat,
                                       const Quadrature& quadrature, EvalMode mode = EvalMode::Hessian);

/// Psi(F + dF) - Psi(F) evaluated from the increment dF directly, so that
/// tiny changes are not lost to cancellation. Throws InadmissibleDeformation
/// if either state has det <= 0.
double energy_density_change(const Eigen::Matrix2d& F, const Eigen::Matrix2d& dF, const Material& mat);

/// Element energy at u_elem + du_elem minus element energy at u_elem.
double element_energy_change(const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords, const Vector& u_elem,
                             const Vector& du_elem, const Material& mat, const Quadrature& quadrature);

}  // namespace feti_sqp
