#include "obmimo/linalg.hpp"

#include <cmath>
#include <limits>

namespace obmimo {

bool is_hermitian(const CMat& a, double tol) {
    if (a.rows() != a.cols())
        return false;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

CMat hermitian_part(const CMat& a) {
    const Eigen::Index n = a.rows();
    CMat h(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        h(j, j) = cd(a(j, j).real(), 0.0);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const cd v = 0.5 * (a(i, j) + std::conj(a(j, i)));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h;
}

double max_abs(const CMat& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

bool all_finite(const CMat& a) {
    return a.allFinite();
}

bool all_finite(const RMat& a) {
    return a.allFinite();
}

bool solve_hermitian_guarded(const CMat& c, const CMat& rhs, double cond_cap,
                             HermitianSolve& out) {
    const Eigen::Index n = c.rows();
    if (n == 0 || c.cols() != n || rhs.rows() != n)
        return false;
    if (!c.allFinite() || !rhs.allFinite())
        return false;

    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    if (es.info() != Eigen::Success)
        return false;
    const RVec& lam = es.eigenvalues(); // ascending
    const double lam_min = lam(0);
    const double lam_max = lam(n - 1);
    const double sing_tol = double(n) * std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(lam_max), std::abs(lam_min));
    if (!std::isfinite(lam_min) || !std::isfinite(lam_max))
        return false;
    if (lam_min <= sing_tol)
        return false; // singular or indefinite; a ridge would only mask it

    double shift = 0.0;
    double cond = lam_max / lam_min;
    if (cond > cond_cap) {
        shift = 1e-10 * c.real().trace() / double(n);
        cond = (lam_max + shift) / (lam_min + shift);
        if (!(shift > 0.0) || cond > cond_cap)
            return false;
        out.ridge_applied = true;
    } else {
        out.ridge_applied = false;
    }
    out.condition = cond;

    RVec inv_lam(n);
    for (Eigen::Index i = 0; i < n; ++i)
        inv_lam(i) = 1.0 / (lam(i) + shift);
    const CMat& v = es.eigenvectors();
    out.solution.noalias() = v * (inv_lam.asDiagonal() * (v.adjoint() * rhs));
    return out.solution.allFinite();
}

} // namespace obmimo
