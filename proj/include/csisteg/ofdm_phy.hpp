// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_OFDM_PHY_HPP
#define CSISTEG_OFDM_PHY_HPP

#include <cstdint>
#include <vector>

#include "csisteg/complex_dsp.hpp"
#include "csisteg/types.hpp"

namespace csisteg::phy {

// One baseband packet: a fixed training preamble followed by BPSK data
// symbols, each with a 16-sample cyclic prefix.
//
// The preamble follows the long-training-field layout: a 32-sample guard
// (the tail of the training symbol) followed by two full repetitions,
// [GI32 | T | T], 160 samples total. Every sample in it satisfies
// preamble[p] = T[(p - 32) mod 64], so any 64-sample window taken at
// offset >= the channel memory sees a clean circular convolution. The
// estimator uses the windows at offsets 48 and 96, which keeps channel
// estimation exact for combined impulse responses up to 49 taps.
struct PhyPacket {
    ComplexSeq preamble;                 // 160 samples, identical for every packet
    std::vector<CsiVec> payload_symbols; // modulated subcarrier values per data symbol
    ComplexSeq waveform;                 // preamble + cyclic-prefixed data symbols
};

// Fixed +/-1 training values on the 52 used subcarriers, shared by all packets.
const CsiVec& training_vector();

// Builds a packet from payload bits (one bit per subcarrier per symbol, BPSK,
// bit 0 -> +1). Throws std::invalid_argument unless bits.size() % 52 == 0.
// The seed parameter is reserved for randomized framing; packets are currently
// fully determined by the payload.
PhyPacket build_packet(const BitVec& payload_bits, std::uint64_t seed);

// Least-squares per-subcarrier channel estimate from the two preamble
// repetitions of a frame-aligned receive buffer. Throws std::invalid_argument
// if rx is shorter than the preamble.
CsiVec estimate_csi(const ComplexSeq& rx);

// Equalizes the data symbols of rx by the given per-subcarrier gains and
// returns hard-decision BPSK bits. The number of data symbols is inferred
// from the buffer length (convolution tails shorter than one symbol are
// ignored). Throws DecodeError if any gain is exactly zero.
BitVec equalize_and_decode(const ComplexSeq& rx, const CsiVec& csi);

} // namespace csisteg::phy

#endif
