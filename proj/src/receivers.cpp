#include "obmimo/receivers.hpp"

#include "obmimo/bussgang.hpp"
#include "obmimo/errors.hpp"

#include <cmath>
#include <limits>

namespace obmimo {

namespace {

void check_channel(const CMat& h, double noise_power, const char* who) {
    if (h.rows() < 1 || h.cols() < 1)
        throw DimensionMismatch(std::string(who) + ": empty channel matrix");
    if (!h.allFinite())
        throw NonFinite(std::string(who) + ": channel contains a non-finite value");
    if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
        throw NonFinite(std::string(who) + ": bad noise power");
}

} // namespace

const char* receiver_name(ReceiverMethod m) {
    switch (m) {
    case ReceiverMethod::mrc:
        return "mrc";
    case ReceiverMethod::zf:
        return "zf";
    case ReceiverMethod::blmmse:
        return "blmmse";
    }
    return "?";
}

CMat data_signal_cov(const CMat& h, double noise_power) {
    check_channel(h, noise_power, "data_signal_cov");
    CMat c = CMat::Zero(h.rows(), h.rows());
    c.selfadjointView<Eigen::Lower>().rankUpdate(h, 1.0);
    CMat full = hermitian_part(CMat(c.selfadjointView<Eigen::Lower>()));
    full.diagonal().array() += noise_power;
    return full;
}

RVec data_bussgang_gain(const CMat& h, double noise_power, double diag_floor) {
    check_channel(h, noise_power, "data_bussgang_gain");
    return bussgang_gain(data_signal_cov(h, noise_power), diag_floor);
}

CMat quantizer_noise_cov(const CMat& h, double noise_power, double diag_floor) {
    check_channel(h, noise_power, "quantizer_noise_cov");
    const CMat c_y = data_signal_cov(h, noise_power);
    const RVec a = bussgang_gain(c_y, diag_floor);
    const CMat c_r = arcsine_map(c_y, diag_floor);
    return hermitian_part(c_r - CMat(a.asDiagonal() * c_y * a.asDiagonal()));
}

LinearReceiver mrc_receiver(const CMat& h_hat) {
    check_channel(h_hat, 0.0, "mrc_receiver");
    LinearReceiver w;
    w.w_adjoint = h_hat.adjoint();
    w.method = ReceiverMethod::mrc;
    return w;
}

LinearReceiver zf_receiver(const CMat& h_hat, double cond_cap) {
    check_channel(h_hat, 0.0, "zf_receiver");
    if (h_hat.cols() > h_hat.rows())
        throw SingularGram("zf_receiver: more users than antennas");
    const CMat gram = hermitian_part(h_hat.adjoint() * h_hat);
    HermitianSolve solve;
    if (!solve_hermitian_guarded(gram, h_hat.adjoint(), cond_cap, solve))
        throw SingularGram("zf_receiver: channel Gram matrix is rank deficient");
    LinearReceiver w;
    w.w_adjoint = std::move(solve.solution);
    w.method = ReceiverMethod::zf;
    w.ridge_applied = solve.ridge_applied;
    return w;
}

LinearReceiver blmmse_receiver(const CMat& h_hat, double noise_power,
                               double diag_floor, double cond_cap) {
    check_channel(h_hat, noise_power, "blmmse_receiver");
    const CMat c_y = data_signal_cov(h_hat, noise_power);
    const RVec a = bussgang_gain(c_y, diag_floor);
    const CMat c_r = arcsine_map(c_y, diag_floor);
    // W^H = H^H A^H C_r^{-1}  =>  solve C_r X = A H, take X^H.
    const CMat rhs = a.asDiagonal() * h_hat;
    HermitianSolve solve;
    if (!solve_hermitian_guarded(c_r, rhs, cond_cap, solve))
        throw SingularArcsineMatrix(
            "blmmse_receiver: arcsine-law matrix is numerically singular");
    LinearReceiver w;
    w.w_adjoint = solve.solution.adjoint();
    w.method = ReceiverMethod::blmmse;
    w.ridge_applied = solve.ridge_applied;
    return w;
}

DataPhaseTruth data_phase_truth(const CMat& h, double noise_power,
                                double diag_floor) {
    check_channel(h, noise_power, "data_phase_truth");
    DataPhaseTruth t;
    t.h = h;
    t.noise_power = noise_power;
    const CMat c_y = data_signal_cov(h, noise_power);
    t.gain = bussgang_gain(c_y, diag_floor);
    const CMat c_r = arcsine_map(c_y, diag_floor);
    t.q_cov = hermitian_part(c_r - CMat(t.gain.asDiagonal() * c_y * t.gain.asDiagonal()));
    return t;
}

double sum_rate(const LinearReceiver& w, const DataPhaseTruth& truth) {
    const Eigen::Index k_users = truth.h.cols();
    if (w.w_adjoint.rows() != k_users || w.w_adjoint.cols() != truth.h.rows())
        throw DimensionMismatch("sum_rate: receiver shape does not match channel");
    // Rows of W^H A; entry (k, i) is w_k^H A h_i.
    const CMat wa = w.w_adjoint * CMat(truth.gain.asDiagonal());
    const CMat cross = wa * truth.h;
    double rate = 0.0;
    for (Eigen::Index k = 0; k < k_users; ++k) {
        const double signal = std::norm(cross(k, k));
        double interference = 0.0;
        for (Eigen::Index i = 0; i < k_users; ++i)
            if (i != k)
                interference += std::norm(cross(k, i));
        const double awgn = truth.noise_power * wa.row(k).squaredNorm();
        const double quant =
            (w.w_adjoint.row(k) * truth.q_cov * w.w_adjoint.row(k).adjoint())(0, 0)
                .real();
        const double denom = interference + awgn + std::max(quant, 0.0);
        if (denom <= 0.0) {
            // Noise-free corner: only possible with N0 = 0 and a lone user.
            if (signal > 0.0)
                throw NonFinite("sum_rate: unbounded SINR");
            continue;
        }
        rate += std::log2(1.0 + signal / denom);
    }
    return rate;
}

double sum_rate(const LinearReceiver& w, const CMat& h_true, double noise_power) {
    return sum_rate(w, data_phase_truth(h_true, noise_power));
}

} // namespace obmimo
