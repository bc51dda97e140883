#include "obmimo/cov_estimation.hpp"

#include "obmimo/errors.hpp"

#include <cmath>

namespace obmimo {

namespace {

constexpr double kHalfPi = 1.5707963267948966192;

} // namespace

OuterProductAccumulator::OuterProductAccumulator(int num_antennas, int block) {
    if (num_antennas < 1 || block < 1)
        throw DimensionMismatch("OuterProductAccumulator: bad shape");
    sum_ = CMat::Zero(num_antennas, num_antennas);
    buf_.resize(num_antennas, block);
}

void OuterProductAccumulator::flush() const {
    if (pending_ == 0)
        return;
    sum_.noalias() += buf_.leftCols(pending_) * buf_.leftCols(pending_).adjoint();
    pending_ = 0;
}

void OuterProductAccumulator::add(const CVec& x) {
    if (x.size() != buf_.rows())
        throw DimensionMismatch("OuterProductAccumulator::add: length mismatch");
    buf_.col(pending_++) = x;
    ++count_;
    if (pending_ == buf_.cols())
        flush();
}

void OuterProductAccumulator::merge(const OuterProductAccumulator& other) {
    if (other.sum_.rows() != sum_.rows())
        throw DimensionMismatch("OuterProductAccumulator::merge: shape mismatch");
    flush();
    other.flush();
    sum_ += other.sum_;
    count_ += other.count_;
}

CMat OuterProductAccumulator::mean() const {
    if (count_ == 0)
        throw EmptyBatch("OuterProductAccumulator: no snapshots accumulated");
    flush();
    return hermitian_part(sum_ / double(count_));
}

SampleCovAccumulator::SampleCovAccumulator(int num_antennas) : inner_(num_antennas) {}

void SampleCovAccumulator::add(const CVec& y) {
    if (!y.allFinite())
        throw NonFinite("SampleCovAccumulator::add: snapshot is not finite");
    inner_.add(y);
}

void SampleCovAccumulator::merge(const SampleCovAccumulator& other) {
    inner_.merge(other.inner_);
}

CovarianceEstimate SampleCovAccumulator::finalize() const {
    CovarianceEstimate est;
    est.matrix = inner_.mean();
    est.method = CovMethod::unquantized;
    est.sample_count = inner_.count();
    return est;
}

SignCovAccumulator::SignCovAccumulator(int num_antennas) : inner_(num_antennas) {}

void SignCovAccumulator::add(const CVec& r) {
    // Entries of a csign output are (+/-1 +/- j)/sqrt(2).
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (std::abs(std::abs(r(i).real()) - M_SQRT1_2) > 1e-12 ||
            std::abs(std::abs(r(i).imag()) - M_SQRT1_2) > 1e-12)
            throw NonFinite("SignCovAccumulator::add: not a one-bit sample");
    }
    inner_.add(r);
}

void SignCovAccumulator::merge(const SignCovAccumulator& other) {
    inner_.merge(other.inner_);
}

CovarianceEstimate SignCovAccumulator::finalize() const {
    const CMat c_r = inner_.mean();
    const Eigen::Index m = c_r.rows();
    CMat c_y(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        c_y(j, j) = cd(1.0, 0.0);
        for (Eigen::Index i = j + 1; i < m; ++i) {
            const cd v(std::sin(kHalfPi * c_r(i, j).real()),
                       std::sin(kHalfPi * c_r(i, j).imag()));
            c_y(i, j) = v;
            c_y(j, i) = std::conj(v);
        }
    }
    CovarianceEstimate est;
    est.matrix = std::move(c_y);
    est.method = CovMethod::nondithered;
    est.sample_count = inner_.count();
    return est;
}

DitheredCovAccumulator::DitheredCovAccumulator(int num_antennas, double lambda,
                                               int block)
    : lambda_(lambda) {
    if (num_antennas < 1 || block < 1)
        throw DimensionMismatch("DitheredCovAccumulator: bad shape");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("DitheredCovAccumulator: lambda must be positive");
    sum_ = CMat::Zero(num_antennas, num_antennas);
    buf_r_.resize(num_antennas, block);
    buf_t_.resize(num_antennas, block);
}

void DitheredCovAccumulator::flush() const {
    if (pending_ == 0)
        return;
    sum_.noalias() +=
        buf_r_.leftCols(pending_) * buf_t_.leftCols(pending_).adjoint();
    pending_ = 0;
}

void DitheredCovAccumulator::add(const DitheredSnapshot& s) {
    if (s.re.size() != buf_r_.rows())
        throw DimensionMismatch("DitheredCovAccumulator::add: length mismatch");
    buf_r_.col(pending_).real() = s.re;
    buf_r_.col(pending_).imag() = s.im;
    buf_t_.col(pending_).real() = s.re_alt;
    buf_t_.col(pending_).imag() = s.im_alt;
    ++pending_;
    ++count_;
    if (pending_ == buf_r_.cols())
        flush();
}

void DitheredCovAccumulator::merge(const DitheredCovAccumulator& other) {
    if (other.sum_.rows() != sum_.rows())
        throw DimensionMismatch("DitheredCovAccumulator::merge: shape mismatch");
    if (other.lambda_ != lambda_)
        throw DimensionMismatch("DitheredCovAccumulator::merge: lambda mismatch");
    flush();
    other.flush();
    sum_ += other.sum_;
    count_ += other.count_;
}

CovarianceEstimate DitheredCovAccumulator::finalize() const {
    if (count_ == 0)
        throw EmptyBatch("DitheredCovAccumulator: no snapshots accumulated");
    flush();
    const double scale = lambda_ * lambda_ / double(count_);
    CovarianceEstimate est;
    est.matrix = hermitian_part(scale * sum_);
    est.method = CovMethod::dithered;
    est.sample_count = count_;
    est.lambda = lambda_;
    return est;
}

CovarianceEstimate sample_covariance(const CMat& y_columns) {
    SampleCovAccumulator acc(int(y_columns.rows()));
    for (Eigen::Index n = 0; n < y_columns.cols(); ++n)
        acc.add(y_columns.col(n));
    return acc.finalize();
}

CovarianceEstimate nondithered_estimate(const CMat& r_columns) {
    SignCovAccumulator acc(int(r_columns.rows()));
    for (Eigen::Index n = 0; n < r_columns.cols(); ++n)
        acc.add(r_columns.col(n));
    return acc.finalize();
}

CovarianceEstimate dithered_estimate(const DitheredSampleBatch& batch) {
    DitheredCovAccumulator acc(batch.antennas(), batch.lambda);
    DitheredSnapshot s;
    for (int n = 0; n < batch.count(); ++n) {
        s.re = batch.re.col(n);
        s.im = batch.im.col(n);
        s.re_alt = batch.re_alt.col(n);
        s.im_alt = batch.im_alt.col(n);
        acc.add(s);
    }
    return acc.finalize();
}

CMat channel_cov_from_signal_cov(const CMat& c_y, double noise_power) {
    if (c_y.rows() != c_y.cols())
        throw DimensionMismatch("channel_cov_from_signal_cov: square matrix required");
    if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
        throw NonFinite("channel_cov_from_signal_cov: bad noise power");
    CMat c_h = c_y;
    c_h.diagonal().array() -= noise_power;
    return c_h;
}

} // namespace obmimo
