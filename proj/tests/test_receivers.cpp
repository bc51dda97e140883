#include <doctest.h>

#include "obmimo/channel_model.hpp"
#include "obmimo/errors.hpp"
#include "obmimo/quantizer.hpp"
#include "obmimo/receivers.hpp"
#include "obmimo/rng.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace obmimo;

namespace {

constexpr double kTwoOverPi = 0.63661977236758134308;

CMat random_channel(RngStream& rng, int m, int k, double scale = 1.0) {
    CMat h(m, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < m; ++i)
            h(i, j) = scale * rng.cgaussian(1.0);
    return h;
}

// Straight-line re-implementation of the data-phase statistics used as an
// independent oracle: arcsine map written out entrywise.
CMat oracle_quantizer_noise_cov(const CMat& h, double n0) {
    const int m = int(h.rows());
    const CMat c_y = h * h.adjoint() + n0 * CMat::Identity(m, m);
    CMat c_r(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double d = std::sqrt(c_y(i, i).real() * c_y(j, j).real());
            c_r(i, j) = kTwoOverPi * cd(std::asin(c_y(i, j).real() / d),
                                        std::asin(c_y(i, j).imag() / d));
        }
    CMat a_c_a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double ai = std::sqrt(kTwoOverPi / c_y(i, i).real());
            const double aj = std::sqrt(kTwoOverPi / c_y(j, j).real());
            a_c_a(i, j) = ai * c_y(i, j) * aj;
        }
    return c_r - a_c_a;
}

// Per-user SINR terms of the rate formula, expanded directly from the
// definition so sum_rate has something independent to match.
double oracle_sum_rate(const CMat& w_adjoint, const DataPhaseTruth& t) {
    const int k = int(w_adjoint.rows());
    double rate = 0.0;
    for (int u = 0; u < k; ++u) {
        const Eigen::RowVectorXcd wa =
            w_adjoint.row(u).cwiseProduct(t.gain.transpose().cast<cd>());
        const double sig = std::norm((wa * t.h.col(u)).value());
        double interference = 0.0;
        for (int i = 0; i < k; ++i)
            if (i != u)
                interference += std::norm((wa * t.h.col(i)).value());
        const double awgn = t.noise_power * wa.squaredNorm();
        const double quant =
            (w_adjoint.row(u) * t.q_cov * w_adjoint.row(u).adjoint()).value().real();
        const double denom = interference + awgn + std::max(quant, 0.0);
        if (sig <= 0.0 && denom <= 0.0)
            continue;
        rate += std::log2(1.0 + sig / denom);
    }
    return rate;
}

} // namespace

TEST_CASE("data-phase Bussgang gain") {
    const CMat h0 = CMat::Zero(4, 2);
    const RVec g0 = data_bussgang_gain(h0, 1.0);
    for (int i = 0; i < 4; ++i)
        CHECK(g0(i) == doctest::Approx(std::sqrt(kTwoOverPi)).epsilon(1e-14));

    // Single user on one antenna with no noise: the other rows carry zero
    // power and cannot be normalized.
    CMat e1 = CMat::Zero(4, 1);
    e1(0, 0) = 1.0;
    CHECK_THROWS_AS(data_bussgang_gain(e1, 0.0), DiagonalUnderflow);

    RngStream rng(90);
    const CMat h = random_channel(rng, 5, 2);
    const double n0 = 0.3;
    const RVec g = data_bussgang_gain(h, n0);
    for (int m = 0; m < 5; ++m) {
        const double row_power = h.row(m).squaredNorm() + n0;
        CHECK(g(m) == doctest::Approx(std::sqrt(kTwoOverPi / row_power)).epsilon(1e-13));
        CHECK(g(m) > 0.0);
    }

    const CMat c_y = data_signal_cov(h, n0);
    CHECK(max_abs(c_y - (h * h.adjoint() + n0 * CMat::Identity(5, 5))) < 1e-12);
}

TEST_CASE("quantizer noise covariance") {
    // H = 0, N0 = 1 makes C_yD the identity.
    const CMat q0 = quantizer_noise_cov(CMat::Zero(4, 2), 1.0);
    CHECK(max_abs(q0 - (1.0 - kTwoOverPi) * CMat::Identity(4, 4)) < 1e-14);

    RngStream rng(91);
    for (int rep = 0; rep < 10; ++rep) {
        const int m = 4;
        const CMat h = random_channel(rng, m, 1);
        const double n0 = 0.05 + 0.4 * rng.uniform();
        const CMat q = quantizer_noise_cov(h, n0);
        CHECK(max_abs(q - oracle_quantizer_noise_cov(h, n0)) < 1e-12);
        CHECK(is_hermitian(q, 1e-12));
        for (int i = 0; i < m; ++i)
            CHECK(q(i, i).real() == doctest::Approx(1.0 - kTwoOverPi).epsilon(1e-12));
        Eigen::SelfAdjointEigenSolver<CMat> es(q, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("MRC is the adjoint of the estimate") {
    RngStream rng(92);
    const CMat h = random_channel(rng, 6, 3);
    const LinearReceiver w = mrc_receiver(h);
    CHECK(w.method == ReceiverMethod::mrc);
    CHECK(max_abs(w.w_adjoint - h.adjoint()) == 0.0);
}

TEST_CASE("orthonormal columns make MRC and ZF coincide") {
    RngStream rng(93);
    const CMat raw = random_channel(rng, 6, 2);
    const CMat q = Eigen::HouseholderQR<CMat>(raw)
                       .householderQ() *
                   CMat::Identity(6, 2);
    const LinearReceiver mrc = mrc_receiver(q);
    const LinearReceiver zf = zf_receiver(q);
    CHECK(max_abs(mrc.w_adjoint - zf.w_adjoint) < 1e-12);
    CHECK(max_abs(zf.w_adjoint - q.adjoint()) < 1e-12);
}

TEST_CASE("ZF inverts the channel") {
    RngStream rng(94);
    const CMat h = random_channel(rng, 8, 3);
    const LinearReceiver zf = zf_receiver(h);
    CHECK(zf.method == ReceiverMethod::zf);
    CHECK(max_abs(zf.w_adjoint * h - CMat::Identity(3, 3)) < 1e-10);
    CHECK(!zf.ridge_applied);
}

TEST_CASE("ZF rejects degenerate channels") {
    RngStream rng(95);
    CMat h = random_channel(rng, 6, 3);
    h.col(2) = h.col(0); // rank deficient
    CHECK_THROWS_AS(zf_receiver(h), SingularGram);
    const CMat wide = random_channel(rng, 2, 4); // more users than antennas
    CHECK_THROWS_AS(zf_receiver(wide), SingularGram);
}

TEST_CASE("single-antenna support gives a matched-filter row") {
    const int m = 5;
    CMat h = CMat::Zero(m, 1);
    h(0, 0) = cd(0.8, -0.6);
    const LinearReceiver w = blmmse_receiver(h, 0.1);
    CHECK(w.method == ReceiverMethod::blmmse);
    REQUIRE(w.w_adjoint.rows() == 1);
    CHECK(std::abs(w.w_adjoint(0, 0)) > 1e-3);
    for (int i = 1; i < m; ++i)
        CHECK(std::abs(w.w_adjoint(0, i)) < 1e-12);
    // Direction matches h^H up to a positive real factor.
    const cd ratio = w.w_adjoint(0, 0) / std::conj(h(0, 0));
    CHECK(ratio.imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ratio.real() > 0.0);
}

TEST_CASE("perfect-CSI BLMMSE has the lowest symbol MSE") {
    const int m = 8, k = 2, n = 10000;
    const double n0 = 0.1;
    RngStream rng(96);
    const CMat h = random_channel(rng, m, k, 1.0 / std::sqrt(double(m)));
    const LinearReceiver mrc = mrc_receiver(h);
    const LinearReceiver zf = zf_receiver(h);
    const LinearReceiver blm = blmmse_receiver(h, n0);

    double mse_mrc = 0.0, mse_zf = 0.0, mse_blm = 0.0;
    for (int t = 0; t < n; ++t) {
        CVec s(k);
        for (int u = 0; u < k; ++u)
            s(u) = rng.cgaussian(1.0);
        CVec y = h * s;
        for (int i = 0; i < m; ++i)
            y(i) += rng.cgaussian(n0);
        const CVec r = csign(y);
        mse_mrc += (CVec(mrc.w_adjoint * r) - s).squaredNorm();
        mse_zf += (CVec(zf.w_adjoint * r) - s).squaredNorm();
        mse_blm += (CVec(blm.w_adjoint * r) - s).squaredNorm();
    }
    CHECK(mse_blm <= mse_mrc);
    CHECK(mse_blm <= mse_zf);
    CHECK(mse_blm / n < double(k)); // beats the trivial zero estimator
}

TEST_CASE("rate formula matches the expanded oracle") {
    RngStream rng(97);
    const int m = 6, k = 3;
    const CMat h = random_channel(rng, m, k);
    const double n0 = 0.2;
    const DataPhaseTruth truth = data_phase_truth(h, n0);

    const LinearReceiver mrc = mrc_receiver(h);
    CHECK(sum_rate(mrc, truth) ==
          doctest::Approx(oracle_sum_rate(mrc.w_adjoint, truth)).epsilon(1e-12));
    const LinearReceiver zf = zf_receiver(h);
    CHECK(sum_rate(zf, truth) ==
          doctest::Approx(oracle_sum_rate(zf.w_adjoint, truth)).epsilon(1e-12));
    const LinearReceiver blm = blmmse_receiver(h, n0);
    CHECK(sum_rate(blm, truth) ==
          doctest::Approx(oracle_sum_rate(blm.w_adjoint, truth)).epsilon(1e-12));
    CHECK(sum_rate(blm, h, n0) == sum_rate(blm, truth));
}

TEST_CASE("scalar single-user rate closed form") {
    CMat h(1, 1);
    h(0, 0) = 1.0;
    const double n0 = 0.1;
    const LinearReceiver w = mrc_receiver(h); // any nonzero scalar row works
    const double a2 = kTwoOverPi / 1.1;
    const double sinr = a2 / (n0 * a2 + 1.0 - kTwoOverPi);
    CHECK(sum_rate(w, h, n0) ==
          doctest::Approx(std::log2(1.0 + sinr)).epsilon(1e-12));
}

TEST_CASE("zero receiver earns zero rate") {
    RngStream rng(98);
    const CMat h = random_channel(rng, 4, 2);
    LinearReceiver w = mrc_receiver(h);
    w.w_adjoint.setZero();
    CHECK(sum_rate(w, h, 0.0) == 0.0);
    CHECK(sum_rate(w, h, 0.3) == 0.0);
}

TEST_CASE("rate is invariant to receiver row scaling") {
    RngStream rng(99);
    const CMat h = random_channel(rng, 5, 2);
    const DataPhaseTruth truth = data_phase_truth(h, 0.15);
    LinearReceiver w = zf_receiver(h);
    const double base = sum_rate(w, truth);
    CHECK(base > 0.0);
    w.w_adjoint.row(0) *= cd(0.3, -1.7);
    w.w_adjoint.row(1) *= cd(-42.0, 0.0);
    CHECK(sum_rate(w, truth) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("duplicate interferer never raises a user's SINR") {
    RngStream rng(100);
    const int m = 4;
    // Fixed gain and quantizer covariance, so only the interference term in
    // the denominator changes between the two evaluations.
    DataPhaseTruth one;
    one.gain = RVec::Constant(m, 0.7);
    one.q_cov = (1.0 - kTwoOverPi) * CMat::Identity(m, m);
    one.h = random_channel(rng, m, 1);
    one.noise_power = 0.1;

    DataPhaseTruth two = one;
    two.h = CMat(m, 2);
    two.h.col(0) = one.h.col(0);
    two.h.col(1) = one.h.col(0);

    LinearReceiver w1;
    w1.w_adjoint = one.h.adjoint();
    LinearReceiver w2;
    w2.w_adjoint = CMat(2, m);
    w2.w_adjoint.row(0) = w1.w_adjoint.row(0);
    w2.w_adjoint.row(1) = w1.w_adjoint.row(0);

    const double rate1 = sum_rate(w1, one);
    const double rate2 = sum_rate(w2, two);
    CHECK(rate2 / 2.0 < rate1);
}

TEST_CASE("unbounded SINR is rejected") {
    const int m = 2;
    DataPhaseTruth t;
    t.gain = RVec::Ones(m);
    t.q_cov = CMat::Zero(m, m);
    t.h = CMat::Zero(m, 1);
    t.h(0, 0) = 1.0;
    t.noise_power = 0.0;
    LinearReceiver w;
    w.w_adjoint = t.h.adjoint();
    CHECK_THROWS_AS(sum_rate(w, t), NonFinite);
}

TEST_CASE("rate is invariant to a consistent unit change") {
    RngStream rng(101);
    const int m = 6, k = 2;
    const CMat h = random_channel(rng, m, k);
    const double n0 = 0.2, c = 3.7;
    for (int which = 0; which < 3; ++which) {
        auto make = [&](const CMat& est, double noise) {
            if (which == 0)
                return mrc_receiver(est);
            if (which == 1)
                return zf_receiver(est);
            return blmmse_receiver(est, noise);
        };
        const double base = sum_rate(make(h, n0), h, n0);
        const double scaled = sum_rate(make(CMat(c * h), c * c * n0),
                                       CMat(c * h), c * c * n0);
        CHECK(scaled == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("perfect CSI rate ordering over channel draws") {
    const int m = 64, k = 4, draws = 200;
    const double n0 = 0.1; // 10 dB with unit peak channel power
    GeometrySpec spec;
    spec.num_antennas = m;
    spec.common_paths = 2;
    spec.common_power = 0.5;
    LocalClusterSpec ls;
    ls.num_paths = 2;
    ls.total_power = 0.5;
    ls.aoa_min_deg = -60.0;
    ls.aoa_max_deg = 60.0;
    for (int i = 0; i < m / 2; ++i)
        ls.antenna_mask.push_back(i);
    spec.locals = {ls};

    RngStream rng(102);
    std::vector<ClusterGeometry> geoms;
    for (int u = 0; u < k; ++u)
        geoms.push_back(random_geometry(spec, rng));

    double r_mrc = 0.0, r_zf = 0.0, r_blm = 0.0;
    for (int d = 0; d < draws; ++d) {
        CMat h(m, k);
        for (int u = 0; u < k; ++u)
            h.col(u) = sample_channel(geoms[std::size_t(u)], rng);
        const DataPhaseTruth truth = data_phase_truth(h, n0);
        r_mrc += sum_rate(mrc_receiver(h), truth);
        r_zf += sum_rate(zf_receiver(h), truth);
        r_blm += sum_rate(blmmse_receiver(h, n0), truth);
    }
    CHECK(r_blm >= r_zf);
    CHECK(r_blm >= r_mrc);
    CHECK(r_blm / draws > 0.5); // sanity: the link actually carries rate
}
