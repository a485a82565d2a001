// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_CHANNEL_SIM_HPP
#define CSISTEG_CHANNEL_SIM_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "csisteg/types.hpp"

namespace csisteg::chan {

// Statistical description of the multipath environment plus the pacing and
// noise settings shared by a pair of consecutive packets.
struct ChannelProfile {
    std::vector<int> tap_delays;    // sample offsets, strictly increasing, >= 0
    std::vector<double> tap_powers; // linear mean powers, sum to 1
    double doppler_hz = 0.0;        // max Doppler shift
    double packet_interval_s = 158e-6;
    double snr_db = 30.0;

    void validate() const; // throws std::invalid_argument

    // Indoor-style default: 7 taps at one-sample (50 ns) spacing with an
    // exponentially decaying power profile, RMS delay spread 30 ns.
    static ChannelProfile tgn_like_default();
};

// One instantaneous impulse response, dense over the delay span.
struct ChannelRealization {
    ComplexSeq taps;
    int epoch_index = 0;
};

// Expected correlation between two realizations one packet interval apart:
// J0(2 pi f_d dt), clamped below at zero.
double correlation_coefficient(const ChannelProfile& profile);

// Draws the channel seen by packets 1 and 2. Taps are independent complex
// Gaussians scaled by sqrt(tap_power); the second realization is the
// Gauss-Markov blend rho*h1 + sqrt(1-rho^2)*fresh.
std::pair<ChannelRealization, ChannelRealization> draw_pair(const ChannelProfile& profile,
                                                            std::uint64_t seed);

// Convolves tx with the realization and adds circular complex AWGN sized
// against the post-channel signal power. snr_db = +infinity disables noise.
ComplexSeq apply(const ChannelRealization& ch, const ComplexSeq& tx, double snr_db,
                 std::uint64_t seed);

// Fixed-per-device front-end distortion: a small FIR (integer group delay
// plus spectral ripple) and an IQ gain imbalance. Identical for every packet
// of a device, so the linear part cancels in a CSI quotient while the IQ
// term survives as a device signature.
struct ImpairmentCfg {
    double ripple_amp = 0.0;  // bound on per-subcarrier |CSI| deviation
    int max_delay_samples = 0;
    double iq_imbalance = 0.0; // epsilon in I' = (1+eps)I, Q' = (1-eps)Q

    void validate() const;
    bool is_zero() const;
};

ComplexSeq hardware_overlay(const ComplexSeq& tx, const ImpairmentCfg& cfg,
                            std::uint64_t device_seed);

} // namespace csisteg::chan

#endif
