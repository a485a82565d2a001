// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_TYPES_HPP
#define CSISTEG_TYPES_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

namespace csisteg {

using Complex = std::complex<double>;

/// Time-domain complex baseband sample sequence.
using ComplexSeq = std::vector<Complex>;

/// Payload / secret bits, one per element, each 0 or 1.
using BitVec = std::vector<std::uint8_t>;

// 20 MHz OFDM grid constants.
inline constexpr int kFftSize = 64;
inline constexpr int kNumSubcarriers = 52;
inline constexpr int kCpLen = 16;
inline constexpr int kSymbolLen = kFftSize + kCpLen; // 80
inline constexpr int kPreambleLen = 2 * kSymbolLen;  // 160

/// 64-bin frequency-domain vector (one FFT frame).
using Spectrum64 = std::array<Complex, kFftSize>;

/// Per-subcarrier complex channel gains on the 52 used subcarriers.
using CsiVec = std::array<Complex, kNumSubcarriers>;

/// Mixes a base seed with stream/index identifiers into a fresh 64-bit seed
/// (splitmix64 finalizer). Used to derive independent deterministic RNG
/// streams for parallel trials.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace csisteg

#endif // CSISTEG_TYPES_HPP
