#pragma once

#include "obmimo/linalg.hpp"
#include "obmimo/rng.hpp"

namespace obmimo {

// One-bit complex quantizer: (sign(Re y) + j sign(Im y)) / sqrt(2), with
// sign(0) = +1. Every output entry has unit modulus.
CVec csign(const CVec& y);

// The four +/-1 sign streams produced by dithered one-bit sampling of one
// snapshot. Two independent dither pairs quantize the same signal so the
// product of the two streams averages to an unbiased covariance estimate.
struct DitheredSnapshot {
    RVec re, im;         // sign(Re y + tau_re), sign(Im y + tau_im)
    RVec re_alt, im_alt; // same with the second dither pair
};

// Quantizes y with four fresh uniform dithers on [-lambda, lambda]^M, drawn
// from rng in the order re, im, re_alt, im_alt.
DitheredSnapshot dithered_csign(const CVec& y, double lambda, RngStream& rng);

// Column-per-snapshot storage of dithered sign streams.
struct DitheredSampleBatch {
    RMat re, im, re_alt, im_alt; // M x N, entries +/-1
    double lambda = 0.0;

    DitheredSampleBatch() = default;
    DitheredSampleBatch(int num_antennas, int num_snapshots, double lambda);

    int antennas() const { return int(re.rows()); }
    int count() const { return int(re.cols()); }
    void set(int n, const DitheredSnapshot& s);
};

} // namespace obmimo
