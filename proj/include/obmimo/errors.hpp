#pragma once

#include <stdexcept>

namespace obmimo {

// Covariance diagonal entry at or below the configured floor. The arcsine
// normalization divides by sqrt of these entries, so tiny values are fatal.
struct DiagonalUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A normalized correlation landed outside [-1, 1] by more than the clip
// tolerance. Values inside the tolerance band are silently clipped.
struct NormalizationOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Arcsine-law output matrix is numerically singular even after the ridge.
struct SingularArcsineMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An estimator was finalized with zero accumulated snapshots.
struct EmptyBatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN or infinity where a finite value is required.
struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A coefficient that must be nonnegative came out negative.
struct NegativeCoefficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gram matrix of the channel estimate is rank deficient (zero-forcing).
struct SingularGram : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed experiment configuration (unknown key, bad value, missing field).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace obmimo
