#pragma once

#include "feti_sqp/fem.hpp"
#include "feti_sqp/mesh.hpp"

#include <string>

namespace feti_sqp {

/// Monolithic reference solver: assembled Newton with Armijo backtracking on
/// the global energy. No tearing, no multipliers.
struct OracleResult {
    Vector u;  ///< global displacement, node-major
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    std::string message;
};

/// Reference tolerance: well below the FETI-DP stopping tolerance, so that
/// comparisons measure the decomposed solver and not the reference.
inline constexpr double kOracleTolerance = 1e-11;

OracleResult oracle_newton_solve(const StructuredMesh& mesh, const Material& material, double traction,
                                 double eps_tol = kOracleTolerance, int max_iters = 100);

/// Solution of the linearized problem K(0) u = f.
Vector linear_elastic_solve(const StructuredMesh& mesh, const Material& material, double traction);

}  // namespace feti_sqp
