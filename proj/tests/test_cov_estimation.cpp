#include <doctest.h>

#include "obmimo/cov_estimation.hpp"
#include "obmimo/errors.hpp"

#include <cmath>

using namespace obmimo;

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

CMat cov_factor(const CMat& c) {
    Eigen::SelfAdjointEigenSolver<CMat> es(c);
    REQUIRE(es.info() == Eigen::Success);
    RVec lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam(i) = std::sqrt(std::max(lam(i), 0.0));
    return es.eigenvectors() * lam.asDiagonal();
}

CVec draw_gaussian(const CMat& factor, RngStream& rng) {
    CVec w(factor.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w(i) = rng.cgaussian(1.0);
    return factor * w;
}

} // namespace

TEST_CASE("outer product accumulator basics") {
    OuterProductAccumulator acc(3);
    CHECK_THROWS_AS(acc.mean(), EmptyBatch);
    CVec e1 = CVec::Zero(3);
    e1(0) = cd(1.0, 0.0);
    acc.add(e1);
    const CMat m1 = acc.mean();
    CHECK(m1(0, 0) == cd(1.0, 0.0));
    CHECK(m1.cwiseAbs().sum() == 1.0);
    CHECK(acc.count() == 1);

    CVec y(3);
    y << cd(1.0, -1.0), cd(0.5, 2.0), cd(-0.25, 0.0);
    OuterProductAccumulator acc2(3);
    for (int i = 0; i < 700; ++i) // crosses the flush block boundary
        acc2.add(y);
    const CMat want = y * y.adjoint();
    CHECK((acc2.mean() - want).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(acc2.count() == 700);

    CVec wrong(2);
    wrong << cd(1, 0), cd(0, 1);
    CHECK_THROWS_AS(acc2.add(wrong), DimensionMismatch);
}

TEST_CASE("accumulator mean is exactly Hermitian") {
    RngStream rng(41);
    OuterProductAccumulator acc(5);
    for (int i = 0; i < 333; ++i) {
        CVec y(5);
        for (int j = 0; j < 5; ++j)
            y(j) = rng.cgaussian(1.0);
        acc.add(y);
    }
    const CMat m = acc.mean();
    for (int i = 0; i < 5; ++i) {
        CHECK(m(i, i).imag() == 0.0);
        for (int j = 0; j < 5; ++j)
            CHECK(m(i, j) == std::conj(m(j, i)));
    }
}

TEST_CASE("merge reassociates within roundoff") {
    RngStream rng(42);
    std::vector<CVec> ys;
    for (int i = 0; i < 1000; ++i) {
        CVec y(4);
        for (int j = 0; j < 4; ++j)
            y(j) = rng.cgaussian(1.5);
        ys.push_back(y);
    }
    OuterProductAccumulator whole(4);
    for (const CVec& y : ys)
        whole.add(y);
    // Uneven split leaves partial buffers on both sides of the merge.
    OuterProductAccumulator a(4), b(4), c(4);
    for (int i = 0; i < 311; ++i)
        a.add(ys[std::size_t(i)]);
    for (int i = 311; i < 700; ++i)
        b.add(ys[std::size_t(i)]);
    for (int i = 700; i < 1000; ++i)
        c.add(ys[std::size_t(i)]);
    a.merge(b);
    a.merge(c);
    CHECK(a.count() == 1000);
    const double scale = whole.mean().cwiseAbs().maxCoeff();
    CHECK((a.mean() - whole.mean()).cwiseAbs().maxCoeff() < 1e-9 * scale);
}

TEST_CASE("sample covariance converges on a known matrix") {
    CMat c(4, 4);
    c << cd(1.0, 0.0), cd(0.4, 0.2), cd(0.0, -0.3), cd(0.1, 0.0),
         cd(0.4, -0.2), cd(0.8, 0.0), cd(0.2, 0.1), cd(0.0, 0.0),
         cd(0.0, 0.3), cd(0.2, -0.1), cd(0.6, 0.0), cd(-0.1, 0.05),
         cd(0.1, 0.0), cd(0.0, 0.0), cd(-0.1, -0.05), cd(0.5, 0.0);
    c = hermitian_part(c);
    const CMat f = cov_factor(c);
    RngStream rng(43);
    SampleCovAccumulator acc(4);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        acc.add(draw_gaussian(f, rng));
    const CovarianceEstimate est = acc.finalize();
    CHECK((est.matrix - c).cwiseAbs().maxCoeff() < 0.05);
    CHECK(est.method == CovMethod::unquantized);
    CHECK(est.sample_count == n);
}

TEST_CASE("sign covariance estimator fixed points") {
    // Two orthogonal sign patterns average to the identity, which the
    // arcsine inversion maps back to the identity.
    SignCovAccumulator acc(2);
    CVec r1(2), r2(2);
    r1 << cd(kInvSqrt2, kInvSqrt2), cd(kInvSqrt2, kInvSqrt2);
    r2 << cd(kInvSqrt2, kInvSqrt2), cd(-kInvSqrt2, -kInvSqrt2);
    acc.add(r1);
    acc.add(r2);
    const CovarianceEstimate est = acc.finalize();
    CHECK((est.matrix - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(est.method == CovMethod::nondithered);

    // Inputs that are not one-bit samples are rejected.
    CVec bad(2);
    bad << cd(0.5, 0.5), cd(kInvSqrt2, kInvSqrt2);
    CHECK_THROWS_AS(acc.add(bad), NonFinite);
}

TEST_CASE("sign covariance inverts the arcsine law") {
    // True correlation 0.5 quantizes to (2/pi) asin(0.5) = 1/3; the
    // estimator maps the sign statistics back to 0.5.
    CMat c(2, 2);
    c << cd(1.0, 0.0), cd(0.5, 0.0), cd(0.5, 0.0), cd(1.0, 0.0);
    const CMat f = cov_factor(c);
    RngStream rng(44);
    SignCovAccumulator acc(2);
    const int n = 1000000;
    for (int i = 0; i < n; ++i)
        acc.add(csign(draw_gaussian(f, rng)));
    const CMat est = acc.finalize().matrix;
    CHECK(std::abs(est(0, 1).real() - 0.5) < 0.01);
    CHECK(std::abs(est(0, 1).imag()) < 0.01);
}

TEST_CASE("sign covariance cannot see the diagonal") {
    // The estimate always has unit diagonal, so a non-constant true
    // diagonal leaves an error floor no sample count removes.
    CMat c = CMat::Zero(2, 2);
    c(0, 0) = 1.0;
    c(1, 1) = 0.3;
    const CMat f = cov_factor(c);
    RngStream rng(45);
    SignCovAccumulator acc(2);
    for (int i = 0; i < 200000; ++i)
        acc.add(csign(draw_gaussian(f, rng)));
    const CMat est = acc.finalize().matrix;
    CHECK(est(0, 0) == cd(1.0, 0.0));
    CHECK(est(1, 1) == cd(1.0, 0.0));
    CHECK((est - c).cwiseAbs().maxCoeff() >= 0.699);
}

TEST_CASE("dithered estimator is unbiased at zero signal") {
    RngStream rng(46);
    const double lambda = 2.0;
    const int m = 4, n = 100000;
    DitheredCovAccumulator acc(m, lambda);
    const CVec zero = CVec::Zero(m);
    for (int i = 0; i < n; ++i)
        acc.add(dithered_csign(zero, lambda, rng));
    const CMat est = acc.finalize().matrix;
    // Each accumulated product has modulus 2 lambda^2, zero mean.
    const double bound = 5.0 * 2.0 * lambda * lambda / std::sqrt(double(n));
    CHECK(est.cwiseAbs().maxCoeff() < bound);
}

TEST_CASE("dithered estimator recovers a non-constant diagonal") {
    RngStream geo_rng(47);
    CMat c(8, 8);
    // PSD with spread diagonal: two rank-one terms plus diagonal loading.
    {
        CVec u(8), v(8);
        RngStream r2(48);
        for (int i = 0; i < 8; ++i) {
            u(i) = r2.cgaussian(1.0);
            v(i) = r2.cgaussian(1.0);
        }
        c = 0.4 * (u * u.adjoint()) + 0.2 * (v * v.adjoint());
        RVec d(8);
        d << 0.9, 0.2, 0.5, 1.1, 0.3, 0.7, 0.15, 0.6;
        c += CMat(d.asDiagonal());
        c = hermitian_part(c);
    }
    const double lambda = 4.0 * std::sqrt(c.diagonal().real().maxCoeff());
    const CMat f = cov_factor(c);
    RngStream rng(49);
    DitheredCovAccumulator acc(8, lambda);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        acc.add(dithered_csign(draw_gaussian(f, rng), lambda, rng));
    const CovarianceEstimate est = acc.finalize();
    CHECK(est.lambda == lambda);
    CHECK(est.sample_count == n);
    // Frobenius-scale agreement, and the diagonal is recovered (unlike the
    // sign-only estimator, which would pin it at 1).
    const double err = (est.matrix - c).cwiseAbs().maxCoeff();
    CHECK(err < 0.05 * lambda * lambda);
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(est.matrix(i, i).real() - c(i, i).real()) <
              0.05 * lambda * lambda);
    CHECK(is_hermitian(est.matrix, 0.0));
}

TEST_CASE("dithered bias shrinks as the dither range grows") {
    // Scalar signal, lambda in {1, 2, 3} sigma: the clipped-tail bias of
    // lambda^2 E[r rt^H] decreases monotonically.
    const double sigma2 = 1.0;
    RngStream base(50);
    std::vector<CVec> ys;
    const int n = 1000000;
    ys.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        CVec y(1);
        y(0) = base.cgaussian(sigma2);
        ys.push_back(y);
    }
    std::vector<double> err;
    for (double mult : {1.0, 2.0, 3.0}) {
        const double lambda = mult * std::sqrt(sigma2);
        // Same signal draws and fresh dithers per lambda.
        RngStream dither(51);
        DitheredCovAccumulator acc(1, lambda);
        for (int i = 0; i < n; ++i)
            acc.add(dithered_csign(ys[std::size_t(i)], lambda, dither));
        err.push_back(std::abs(acc.finalize().matrix(0, 0).real() - sigma2));
    }
    // At lambda = sigma the clipping bias is macroscopic (~0.14); by
    // lambda = 2 sigma it is already below the Monte Carlo noise floor, so
    // only the first step of the decay is individually resolvable.
    CHECK(err[0] > err[1]);
    CHECK(err[0] > 0.05);
    CHECK(err[1] < 0.05);
    CHECK(err[2] < 0.05);
}

TEST_CASE("dithered accumulator merge") {
    RngStream rng(52);
    const double lambda = 1.5;
    CMat c = CMat::Identity(3, 3);
    const CMat f = cov_factor(c);
    std::vector<DitheredSnapshot> snaps;
    for (int i = 0; i < 600; ++i)
        snaps.push_back(dithered_csign(draw_gaussian(f, rng), lambda, rng));
    DitheredCovAccumulator whole(3, lambda);
    for (const auto& s : snaps)
        whole.add(s);
    DitheredCovAccumulator a(3, lambda), b(3, lambda);
    for (int i = 0; i < 259; ++i)
        a.add(snaps[std::size_t(i)]);
    for (int i = 259; i < 600; ++i)
        b.add(snaps[std::size_t(i)]);
    a.merge(b);
    CHECK(a.count() == 600);
    CHECK((a.finalize().matrix - whole.finalize().matrix).cwiseAbs().maxCoeff() <
          1e-9 * lambda * lambda);

    DitheredCovAccumulator other_lambda(3, 2.0);
    CHECK_THROWS_AS(a.merge(other_lambda), DimensionMismatch);
    DitheredCovAccumulator empty(3, lambda);
    CHECK_THROWS_AS(empty.finalize(), EmptyBatch);
}

TEST_CASE("one-shot wrappers match the accumulators") {
    RngStream rng(53);
    const int m = 3, n = 40;
    const double lambda = 1.2;
    CMat y_cols(m, n);
    DitheredSampleBatch batch(m, n, lambda);
    SampleCovAccumulator s_acc(m);
    SignCovAccumulator g_acc(m);
    DitheredCovAccumulator d_acc(m, lambda);
    for (int i = 0; i < n; ++i) {
        CVec y(m);
        for (int j = 0; j < m; ++j)
            y(j) = rng.cgaussian(1.0);
        y_cols.col(i) = y;
        s_acc.add(y);
        g_acc.add(csign(y));
        const DitheredSnapshot snap = dithered_csign(y, lambda, rng);
        batch.set(i, snap);
        d_acc.add(snap);
    }
    CMat r_cols(m, n);
    for (int i = 0; i < n; ++i)
        r_cols.col(i) = csign(y_cols.col(i));
    CHECK(sample_covariance(y_cols).matrix == s_acc.finalize().matrix);
    CHECK(nondithered_estimate(r_cols).matrix == g_acc.finalize().matrix);
    CHECK(dithered_estimate(batch).matrix == d_acc.finalize().matrix);
}

TEST_CASE("noise floor subtraction") {
    CMat c = CMat::Identity(3, 3);
    const CMat a = channel_cov_from_signal_cov(c, 0.1);
    for (int i = 0; i < 3; ++i)
        CHECK(a(i, i).real() == doctest::Approx(0.9).epsilon(1e-15));
    const CMat b = channel_cov_from_signal_cov(0.1 * CMat::Identity(3, 3), 0.1);
    CHECK(b.cwiseAbs().maxCoeff() < 1e-16);
    // Subtracting past zero is allowed; the result is just indefinite.
    CMat small = CMat::Identity(2, 2);
    small(0, 0) = cd(0.05, 0.0);
    const CMat neg = channel_cov_from_signal_cov(small, 0.1);
    CHECK(neg(0, 0).real() < 0.0);
    CHECK_THROWS_AS(channel_cov_from_signal_cov(c, -0.1), NonFinite);
}
