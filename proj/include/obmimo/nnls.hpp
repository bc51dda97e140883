#pragma once

#include "obmimo/linalg.hpp"

namespace obmimo {

struct NnlsProblem {
    RMat design;
    RVec target;
    // Relative KKT tolerance, scaled by ||design^T target||_inf.
    double tolerance = 1e-10;
    // 0 means 10 * columns.
    int max_iterations = 0;
};

enum class NnlsStatus { converged, max_iterations };

struct NnlsSolution {
    RVec x;
    NnlsStatus status = NnlsStatus::converged;
    double objective = 0.0; // ||design * x - target||^2
    int iterations = 0;
};

// min_x ||A x - b||^2 subject to x >= 0.
//
// Lawson-Hanson active-set iteration seeded by a few projected-gradient
// sweeps (the sweeps land near the optimal support, the active-set phase
// then converges in a handful of exact steps). Fully deterministic: ties
// break toward the lowest column index and no randomness is involved, so a
// given problem always produces the same solution path.
NnlsSolution nnls_solve(const NnlsProblem& p);

// Checks the first-order optimality conditions at x with the problem's
// tolerance: gradient g = A^T(Ax - b) must satisfy |g_i| <= tol for x_i > 0
// and g_i >= -tol otherwise, with tol scaled by ||A^T b||_inf.
bool nnls_kkt_satisfied(const NnlsProblem& p, const RVec& x);

} // namespace obmimo
