// SPDX-License-Identifier: Apache-2.0
//
// Complex-valued signal primitives shared by the OFDM PHY, the channel
// simulator and the codec training pipeline: linear convolution, the fixed
// 64-point DFT pair, and the 64-bin -> 52-subcarrier selection used by
// 20 MHz Wi-Fi.
#ifndef CSISTEG_COMPLEX_DSP_HPP
#define CSISTEG_COMPLEX_DSP_HPP

#include "csisteg/types.hpp"

namespace csisteg::dsp {

/// Selection of 52 bins out of a 64-bin spectrum after the half-spectrum
/// rotation (negative frequencies first). Indices are strictly increasing,
/// in [0, 63], and exclude the DC bin (index 32 after the shift).
struct SubcarrierMap {
    std::array<int, kNumSubcarriers> kept_indices;

    /// Standard 802.11 20 MHz layout: shifted indices 6..31 and 33..58,
    /// i.e. subcarriers -26..-1 and +1..+26 with DC excluded.
    static const SubcarrierMap& wifi20();

    void validate() const; // throws std::invalid_argument on violation
};

/// Full linear convolution; output length is len(a) + len(b) - 1.
ComplexSeq convolve(const ComplexSeq& a, const ComplexSeq& b);

/// 64-point DFT of x (zero-padded, len(x) <= 64). Unnormalized forward
/// transform: X[k] = sum_n x[n] exp(-2 pi i k n / 64).
Spectrum64 fft64(const ComplexSeq& x);

/// Inverse of fft64 (includes the 1/64 factor); returns 64 samples.
ComplexSeq ifft64(const Spectrum64& spectrum);

/// Rotates the spectrum so negative frequencies come first, then picks the
/// mapped bins. Pure permutation-projection: values are never altered.
CsiVec shift_and_select(const Spectrum64& s, const SubcarrierMap& map);

/// Inverse placement: writes the 52 values back at their mapped positions of
/// a shifted spectrum, zeros elsewhere, and undoes the rotation. Used by the
/// OFDM modulator; shift_and_select(place_subcarriers(v)) == v.
Spectrum64 place_subcarriers(const CsiVec& values, const SubcarrierMap& map);

} // namespace csisteg::dsp

#endif // CSISTEG_COMPLEX_DSP_HPP
