#include "obmimo/bussgang.hpp"

#include "obmimo/errors.hpp"

#include <cmath>

namespace obmimo {

namespace {

constexpr double kTwoOverPi = 0.63661977236758134308;
constexpr double kSqrtTwoOverPi = 0.79788456080286535588;

RVec checked_diagonal(const CMat& c_y, double diag_floor, const char* who) {
    if (c_y.rows() != c_y.cols() || c_y.rows() == 0)
        throw DimensionMismatch(std::string(who) + ": square matrix required");
    RVec d = c_y.diagonal().real();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!std::isfinite(d(i)))
            throw NonFinite(std::string(who) + ": covariance diagonal is not finite");
        if (d(i) <= diag_floor)
            throw DiagonalUnderflow(std::string(who) +
                                    ": covariance diagonal entry at or below floor");
    }
    return d;
}

// Clips v to [-1, 1]; values beyond 1 + clip_tol are an input error.
double clip_unit(double v, double clip_tol, const char* who) {
    if (!std::isfinite(v) || std::abs(v) > 1.0 + clip_tol)
        throw NormalizationOverflow(std::string(who) +
                                    ": normalized correlation beyond unit circle");
    return v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v);
}

} // namespace

RVec bussgang_gain(const CMat& c_y, double diag_floor) {
    const RVec d = checked_diagonal(c_y, diag_floor, "bussgang_gain");
    return kSqrtTwoOverPi * d.cwiseSqrt().cwiseInverse();
}

CMat arcsine_map(const CMat& c_y, double diag_floor, double clip_tol) {
    const RVec d = checked_diagonal(c_y, diag_floor, "arcsine_map");
    const Eigen::Index m = c_y.rows();
    const RVec dinv = d.cwiseSqrt().cwiseInverse();
    CMat out(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        out(j, j) = cd(1.0, 0.0);
        for (Eigen::Index i = j + 1; i < m; ++i) {
            const double scale = dinv(i) * dinv(j);
            const double re = clip_unit(c_y(i, j).real() * scale, clip_tol, "arcsine_map");
            const double im = clip_unit(c_y(i, j).imag() * scale, clip_tol, "arcsine_map");
            const cd v(kTwoOverPi * std::asin(re), kTwoOverPi * std::asin(im));
            out(i, j) = v;
            out(j, i) = std::conj(v);
        }
    }
    return out;
}

BlmmseFilter build_blmmse_filter(const CMat& c_y, double noise_power,
                                 FilterProvenance provenance, double diag_floor,
                                 double cond_cap) {
    if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
        throw NonFinite("build_blmmse_filter: noise power must be finite and >= 0");
    const RVec gain = bussgang_gain(c_y, diag_floor);
    const CMat c_r = arcsine_map(c_y, diag_floor);

    // W = (C_y - N0 I) A C_r^{-1}; with C_r Hermitian this is the adjoint of
    // the solution of C_r X = A (C_y - N0 I)^H.
    CMat c_h = c_y;
    c_h.diagonal().array() -= noise_power;
    const CMat rhs = gain.asDiagonal() * c_h.adjoint();

    HermitianSolve solve;
    if (!solve_hermitian_guarded(c_r, rhs, cond_cap, solve))
        throw SingularArcsineMatrix(
            "build_blmmse_filter: arcsine-law matrix is numerically singular");

    BlmmseFilter f;
    f.matrix = solve.solution.adjoint();
    f.provenance = provenance;
    f.ridge_applied = solve.ridge_applied;
    f.arcsine_condition = solve.condition;
    return f;
}

CVec estimate_channel(const BlmmseFilter& f, const CVec& r) {
    if (r.size() != f.matrix.cols())
        throw DimensionMismatch("estimate_channel: sample length mismatch");
    return f.matrix * r;
}

} // namespace obmimo
