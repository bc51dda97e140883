#pragma once

#include <Eigen/Dense>
#include <complex>

namespace obmimo {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using cd = std::complex<double>;

// Default guards for the quantized-covariance pipeline. diag_floor rejects
// covariance diagonals too small to normalize; cond_cap is the condition
// number beyond which Hermitian solves get a stabilizing ridge.
inline constexpr double kDiagFloor = 1e-8;
inline constexpr double kCondCap = 1e12;

bool is_hermitian(const CMat& a, double tol = 1e-12);

// (A + A^H) / 2, exactly Hermitian entry by entry.
CMat hermitian_part(const CMat& a);

double max_abs(const CMat& a);

bool all_finite(const CMat& a);
bool all_finite(const RMat& a);

// Result of a guarded Hermitian linear solve.
struct HermitianSolve {
    CMat solution;
    bool ridge_applied = false;
    double condition = 0.0; // of the matrix actually inverted
};

// Solves C X = B for Hermitian positive definite C via eigendecomposition.
// If cond(C) exceeds cond_cap, a ridge of 1e-10 * trace(C)/n is added and the
// solve retried once. Returns false (no throw; callers own the error type)
// when C is numerically singular, indefinite, or still too ill-conditioned
// after the ridge.
bool solve_hermitian_guarded(const CMat& c, const CMat& rhs, double cond_cap,
                             HermitianSolve& out);

} // namespace obmimo
