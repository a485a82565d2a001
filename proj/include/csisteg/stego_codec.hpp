// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_STEGO_CODEC_HPP
#define CSISTEG_STEGO_CODEC_HPP

#include <array>
#include <string>

#include "csisteg/neural.hpp"
#include "csisteg/ofdm_phy.hpp"
#include "csisteg/types.hpp"

namespace csisteg::codec {

// Magnitude floor applied to divider denominators; direction is preserved.
inline constexpr double kDivEpsilon = 1e-6;

// Bit decision threshold on the extractor's ReLU outputs (targets are {0,1}).
inline constexpr double kDefaultThreshold = 0.5;

struct SecretMessage {
    BitVec bits;
    void validate() const; // every element 0/1, at least one bit
};

struct FirTapsPair {
    ComplexSeq g1, g2;
    void validate() const; // equal non-zero length, components within [-1, 1]
};

struct CsiQuotient {
    CsiVec values;
    std::array<double, kNumSubcarriers> magnitudes;
    int guarded_count = 0; // subcarriers whose denominator hit the floor
};

// Runs the generator on the secret bits and reassembles its 4L outputs as
// [Re(g1) | Im(g1) | Re(g2) | Im(g2)]. The layout is part of the trained
// model contract and must match the trainer exactly.
FirTapsPair generate_taps(const SecretMessage& secret, const nn::DenseNet& gen);

// Convolves the taps with the packet waveform and scales the result to unit
// nominal average power. The scale uses the filter's energy on the 52 used
// subcarriers, which is payload-invariant, so two packets filtered by g1 and
// g2 end up with a CSI quotient of exactly (|G2|/|G1|-normalized) G1/G2.
// Throws DegenerateFilterError when the filter has no usable in-band energy.
ComplexSeq embed(const phy::PhyPacket& packet, const ComplexSeq& taps);

// In-band normalization factor used by embed; exposed so tests and the
// trainer can reproduce the exact deployed scaling.
double embed_scale(const ComplexSeq& taps);

CsiQuotient divide_csi(const CsiVec& c1, const CsiVec& c2);

SecretMessage extract(const CsiQuotient& q, const nn::DenseNet& ext,
                      double threshold = kDefaultThreshold);

// A trained generator/extractor pair with its dimensions and threshold,
// stored as one versioned binary file.
struct CodecModel {
    nn::DenseNet generator;
    nn::DenseNet extractor;
    int secret_len = 0; // N
    int tap_count = 0;  // L
    double threshold = kDefaultThreshold;

    void validate() const;
    void save(const std::string& path) const;
    static CodecModel load(const std::string& path); // throws FormatError
};

} // namespace csisteg::codec

#endif
