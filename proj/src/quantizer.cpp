#include "obmimo/quantizer.hpp"

#include "obmimo/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace obmimo {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

// sign convention: nonnegative maps to +1 (so sign(0) = +1, and -0.0 too
// since -0.0 >= 0.0 holds).
inline double sgn(double x) {
    return x >= 0.0 ? 1.0 : -1.0;
}

} // namespace

CVec csign(const CVec& y) {
    CVec r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const cd v = y(i);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NonFinite("csign: input entry is not finite");
        r(i) = cd(sgn(v.real()) * kInvSqrt2, sgn(v.imag()) * kInvSqrt2);
    }
    return r;
}

DitheredSnapshot dithered_csign(const CVec& y, double lambda, RngStream& rng) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("dithered_csign: lambda must be positive");
    const Eigen::Index m = y.size();
    if (!y.allFinite())
        throw NonFinite("dithered_csign: input entry is not finite");
    DitheredSnapshot s;
    s.re.resize(m);
    s.im.resize(m);
    s.re_alt.resize(m);
    s.im_alt.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
        s.re(i) = sgn(y(i).real() + rng.uniform(-lambda, lambda));
    for (Eigen::Index i = 0; i < m; ++i)
        s.im(i) = sgn(y(i).imag() + rng.uniform(-lambda, lambda));
    for (Eigen::Index i = 0; i < m; ++i)
        s.re_alt(i) = sgn(y(i).real() + rng.uniform(-lambda, lambda));
    for (Eigen::Index i = 0; i < m; ++i)
        s.im_alt(i) = sgn(y(i).imag() + rng.uniform(-lambda, lambda));
    return s;
}

DitheredSampleBatch::DitheredSampleBatch(int num_antennas, int num_snapshots,
                                         double lambda_in) {
    if (num_antennas < 1 || num_snapshots < 0)
        throw DimensionMismatch("DitheredSampleBatch: bad shape");
    if (!(lambda_in > 0.0))
        throw std::invalid_argument("DitheredSampleBatch: lambda must be positive");
    re.resize(num_antennas, num_snapshots);
    im.resize(num_antennas, num_snapshots);
    re_alt.resize(num_antennas, num_snapshots);
    im_alt.resize(num_antennas, num_snapshots);
    lambda = lambda_in;
}

void DitheredSampleBatch::set(int n, const DitheredSnapshot& s) {
    if (n < 0 || n >= count())
        throw DimensionMismatch("DitheredSampleBatch::set: index out of range");
    if (s.re.size() != re.rows())
        throw DimensionMismatch("DitheredSampleBatch::set: antenna count mismatch");
    re.col(n) = s.re;
    im.col(n) = s.im;
    re_alt.col(n) = s.re_alt;
    im_alt.col(n) = s.im_alt;
}

} // namespace obmimo
