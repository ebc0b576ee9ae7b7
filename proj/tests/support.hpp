#pragma once

#include "feti_sqp/linalg.hpp"
#include "feti_sqp/mesh.hpp"

#include <random>

namespace test_support {

using feti_sqp::Index;
using feti_sqp::Matrix;
using feti_sqp::Vector;

inline double rel_err(const Vector& a, const Vector& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double amplitude = 1.0) {
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

/// Random symmetric positive definite matrix with eigenvalues in [1, 1 + spread].
inline Matrix random_spd(std::mt19937_64& rng, Index n, double spread = 4.0) {
    const Matrix q = Matrix(random_vector(rng, n * n).reshaped(n, n)).householderQr().householderQ();
    Vector eig(n);
    std::uniform_real_distribution<double> dist(1.0, 1.0 + spread);
    for (Index i = 0; i < n; ++i) eig[i] = dist(rng);
    return q * eig.asDiagonal() * q.transpose();
}

/// Random displacement of the free dofs of a part, zero on fixed dofs.
inline Vector random_part_displacement(std::mt19937_64& rng, const feti_sqp::MeshPart& part, double amplitude) {
    Vector u = random_vector(rng, part.num_dofs(), amplitude);
    for (int d = 0; d < part.num_dofs(); ++d) {
        if (part.fixed[d]) u[d] = 0.0;
    }
    return u;
}

}  // namespace test_support
