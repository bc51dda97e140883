#pragma once

#include "obmimo/linalg.hpp"

namespace obmimo {

// Uplink data phase: K user channels as columns, unit-power symbols.
struct MultiUserChannel {
    CMat h; // M x K
    double noise_power = 0.0;
};

enum class ReceiverMethod { mrc, zf, blmmse };

const char* receiver_name(ReceiverMethod m);

struct LinearReceiver {
    CMat w_adjoint; // K x M, row k is w_k^H
    ReceiverMethod method = ReceiverMethod::mrc;
    bool ridge_applied = false;
};

// C_yD = H H^H + N0 I.
CMat data_signal_cov(const CMat& h, double noise_power);

// Bussgang gain diagonal of the one-bit quantizer in the data phase:
// sqrt(2/pi) / sqrt(diag(H H^H) + N0).
RVec data_bussgang_gain(const CMat& h, double noise_power,
                        double diag_floor = kDiagFloor);

// Covariance of the statistically equivalent quantizer noise,
// C_qD = arcsine(C_yD) - A_D C_yD A_D. PSD up to roundoff.
CMat quantizer_noise_cov(const CMat& h, double noise_power,
                         double diag_floor = kDiagFloor);

LinearReceiver mrc_receiver(const CMat& h_hat);

// (H^H H)^{-1} H^H. Throws SingularGram when the Gram matrix of h_hat is
// numerically rank deficient; merely ill-conditioned Grams get the standard
// ridge.
LinearReceiver zf_receiver(const CMat& h_hat, double cond_cap = kCondCap);

// One-bit aware receiver: H^H A_D^H arcsine(C_yD)^{-1} with A_D and C_yD
// computed from the channel estimate.
LinearReceiver blmmse_receiver(const CMat& h_hat, double noise_power,
                               double diag_floor = kDiagFloor,
                               double cond_cap = kCondCap);

// Quantities of the true data phase that every receiver is scored against.
// Computing them once per channel draw saves an arcsine map per receiver.
struct DataPhaseTruth {
    RVec gain;   // A_D diagonal
    CMat q_cov;  // C_qD
    CMat h;      // true channels
    double noise_power = 0.0;
};

DataPhaseTruth data_phase_truth(const CMat& h, double noise_power,
                                double diag_floor = kDiagFloor);

// Ergodic-rate contribution of one channel draw: treats quantizer noise as
// worst-case Gaussian, interference as noise,
//   sum_k log2(1 + |w_k^H A h_k|^2 /
//              (sum_{i != k} |w_k^H A h_i|^2 + N0 ||w_k^H A||^2 + w_k^H C_q w_k)).
// The receiver may come from an estimated channel; the truth does not.
double sum_rate(const LinearReceiver& w, const DataPhaseTruth& truth);
double sum_rate(const LinearReceiver& w, const CMat& h_true, double noise_power);

} // namespace obmimo
