#pragma once

#include "obmimo/linalg.hpp"
#include "obmimo/quantizer.hpp"

namespace obmimo {

enum class CovMethod { unquantized, nondithered, dithered };

struct CovarianceEstimate {
    CMat matrix; // exactly Hermitian
    CovMethod method = CovMethod::unquantized;
    long long sample_count = 0;
    double lambda = 0.0; // dithered only
};

// Streaming sum of x x^H over complex snapshots. Columns are buffered and
// flushed through a matrix product so large N stays cheap. Merging partial
// accumulators reassociates floating-point sums; results agree to roundoff,
// not bit-exactly.
class OuterProductAccumulator {
  public:
    explicit OuterProductAccumulator(int num_antennas, int block = 256);

    void add(const CVec& x);
    void merge(const OuterProductAccumulator& other);
    long long count() const { return count_; }
    // (sum of x x^H) / count, exactly Hermitian. Throws EmptyBatch at 0.
    CMat mean() const;

  private:
    void flush() const;

    mutable CMat sum_;
    mutable CMat buf_;
    mutable int pending_ = 0;
    long long count_ = 0;
};

// Sample covariance of unquantized snapshots y.
class SampleCovAccumulator {
  public:
    explicit SampleCovAccumulator(int num_antennas);
    void add(const CVec& y);
    void merge(const SampleCovAccumulator& other);
    long long count() const { return inner_.count(); }
    CovarianceEstimate finalize() const;

  private:
    OuterProductAccumulator inner_;
};

// Covariance estimate from non-dithered one-bit samples r = csign(y):
// inverts the arcsine law entrywise on the sign-sample covariance,
//   C_y = sin(pi/2 Re C_r) + j sin(pi/2 Im C_r).
// The output has exactly unit diagonal whatever the true signal power; that
// lost per-antenna scale is the inherent defect of this estimator.
class SignCovAccumulator {
  public:
    explicit SignCovAccumulator(int num_antennas);
    void add(const CVec& r); // a csign output
    void merge(const SignCovAccumulator& other);
    long long count() const { return inner_.count(); }
    CovarianceEstimate finalize() const;

  private:
    OuterProductAccumulator inner_;
};

// Covariance estimate from dithered one-bit samples: lambda^2 / N times the
// sum of r r~^H over the two independently dithered sign streams, then
// Hermitian-symmetrized. Unbiased up to an exponentially small term once
// lambda covers the signal range; may be indefinite and is never projected
// to the PSD cone.
class DitheredCovAccumulator {
  public:
    DitheredCovAccumulator(int num_antennas, double lambda, int block = 256);

    void add(const DitheredSnapshot& s);
    void merge(const DitheredCovAccumulator& other);
    long long count() const { return count_; }
    double lambda() const { return lambda_; }
    CovarianceEstimate finalize() const;

  private:
    void flush() const;

    mutable CMat sum_;
    mutable CMat buf_r_, buf_t_;
    mutable int pending_ = 0;
    long long count_ = 0;
    double lambda_ = 0.0;
};

// One-shot wrappers over the accumulators; snapshots are matrix columns.
CovarianceEstimate sample_covariance(const CMat& y_columns);
CovarianceEstimate nondithered_estimate(const CMat& r_columns);
CovarianceEstimate dithered_estimate(const DitheredSampleBatch& batch);

// C_h = C_y - N0 I. May be indefinite; refinement happens downstream.
CMat channel_cov_from_signal_cov(const CMat& c_y, double noise_power);

} // namespace obmimo
