#pragma once

#include "obmimo/linalg.hpp"

namespace obmimo {

// Diagonal of the Bussgang gain for the one-bit quantizer applied to a
// signal with covariance c_y: sqrt(2/pi) / sqrt(diag(c_y)). Throws
// DiagonalUnderflow if any diagonal entry is <= diag_floor.
RVec bussgang_gain(const CMat& c_y, double diag_floor = kDiagFloor);

// Arcsine law: maps the covariance of a complex Gaussian input to the
// covariance of its one-bit quantized output,
//   C_r = (2/pi) [ asin(D^-1/2 Re(C_y) D^-1/2) + j asin(D^-1/2 Im(C_y) D^-1/2) ],
// with D = diag(C_y). Output has exactly unit diagonal. Normalized entries
// beyond 1 + clip_tol raise NormalizationOverflow; entries inside the band
// are clipped to [-1, 1].
CMat arcsine_map(const CMat& c_y, double diag_floor = kDiagFloor,
                 double clip_tol = 1e-9);

enum class FilterProvenance { oracle, plug_in };

// Linear MMSE channel estimator for one-bit data under the Bussgang
// decomposition: W = (C_y - N0 I) A C_r^{-1}, applied as h_hat = W r.
// The oracle variant is built from the true C_y, the plug-in variant from an
// estimate; the construction is identical.
struct BlmmseFilter {
    CMat matrix;
    FilterProvenance provenance = FilterProvenance::oracle;
    bool ridge_applied = false;  // arcsine matrix needed a stabilizing ridge
    double arcsine_condition = 0.0;
};

BlmmseFilter build_blmmse_filter(const CMat& c_y, double noise_power,
                                 FilterProvenance provenance,
                                 double diag_floor = kDiagFloor,
                                 double cond_cap = kCondCap);

CVec estimate_channel(const BlmmseFilter& f, const CVec& r);

} // namespace obmimo
