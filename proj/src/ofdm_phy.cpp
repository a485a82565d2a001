// SPDX-License-Identifier: Apache-2.0
#include "csisteg/ofdm_phy.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "csisteg/errors.hpp"

namespace csisteg::phy {

namespace {

// Offsets of the two estimation windows inside the 160-sample preamble.
constexpr int kWindow1Offset = 48;
constexpr int kWindow2Offset = 96;

const ComplexSeq& preamble_waveform() {
    static const ComplexSeq wf = [] {
        const Spectrum64 spec = dsp::place_subcarriers(training_vector(), dsp::SubcarrierMap::wifi20());
        const ComplexSeq t = dsp::ifft64(spec);
        ComplexSeq out;
        out.reserve(kPreambleLen);
        for (int n = kFftSize / 2; n < kFftSize; ++n) out.push_back(t[n]); // 32-sample guard
        for (int rep = 0; rep < 2; ++rep)
            for (int n = 0; n < kFftSize; ++n) out.push_back(t[n]);
        return out;
    }();
    return wf;
}

Spectrum64 fft_window(const ComplexSeq& rx, int offset) {
    ComplexSeq w(rx.begin() + offset, rx.begin() + offset + kFftSize);
    return dsp::fft64(w);
}

} // namespace

const CsiVec& training_vector() {
    static const CsiVec t = [] {
        // Fixed pseudo-random sign pattern; the seed is part of the air
        // interface and must never change.
        std::mt19937_64 rng(0x11f5'0c51ULL);
        CsiVec v{};
        for (auto& c : v) c = Complex((rng() & 1) ? 1.0 : -1.0, 0.0);
        return v;
    }();
    return t;
}

PhyPacket build_packet(const BitVec& payload_bits, std::uint64_t seed) {
    (void)seed;
    if (payload_bits.size() % kNumSubcarriers != 0)
        throw std::invalid_argument("build_packet: payload length " +
                                    std::to_string(payload_bits.size()) +
                                    " not divisible by " + std::to_string(kNumSubcarriers));
    for (auto b : payload_bits)
        if (b > 1) throw std::invalid_argument("build_packet: payload bits must be 0 or 1");

    PhyPacket pkt;
    pkt.preamble = preamble_waveform();
    pkt.waveform = pkt.preamble;

    const auto& map = dsp::SubcarrierMap::wifi20();
    const std::size_t num_symbols = payload_bits.size() / kNumSubcarriers;
    pkt.payload_symbols.reserve(num_symbols);
    pkt.waveform.reserve(kPreambleLen + num_symbols * kSymbolLen);
    for (std::size_t s = 0; s < num_symbols; ++s) {
        CsiVec mod{};
        for (int j = 0; j < kNumSubcarriers; ++j) {
            const auto bit = payload_bits[s * kNumSubcarriers + j];
            mod[j] = Complex(bit ? -1.0 : 1.0, 0.0);
        }
        pkt.payload_symbols.push_back(mod);
        const ComplexSeq t = dsp::ifft64(dsp::place_subcarriers(mod, map));
        for (int n = kFftSize - kCpLen; n < kFftSize; ++n) pkt.waveform.push_back(t[n]);
        for (int n = 0; n < kFftSize; ++n) pkt.waveform.push_back(t[n]);
    }
    return pkt;
}

CsiVec estimate_csi(const ComplexSeq& rx) {
    if (rx.size() < static_cast<std::size_t>(kPreambleLen))
        throw std::invalid_argument("estimate_csi: need at least " +
                                    std::to_string(kPreambleLen) + " samples, got " +
                                    std::to_string(rx.size()));

    const Spectrum64 w1 = fft_window(rx, kWindow1Offset);
    const Spectrum64 w2 = fft_window(rx, kWindow2Offset);

    // The first window starts 16 samples into a training period, so its
    // spectrum carries a phase ramp exp(+2*pi*i*k*16/64) that the second
    // window (a whole period later) does not. Remove it, average, and divide
    // by the known +/-1 training values.
    Spectrum64 averaged{};
    for (int k = 0; k < kFftSize; ++k) {
        const double phi = -2.0 * std::numbers::pi * k * (kWindow1Offset - kFftSize / 2) / kFftSize;
        const Complex derot(std::cos(phi), std::sin(phi));
        averaged[k] = 0.5 * (w1[k] * derot + w2[k]);
    }

    const auto& map = dsp::SubcarrierMap::wifi20();
    CsiVec est = dsp::shift_and_select(averaged, map);
    const CsiVec& train = training_vector();
    for (int j = 0; j < kNumSubcarriers; ++j) est[j] /= train[j];
    return est;
}

BitVec equalize_and_decode(const ComplexSeq& rx, const CsiVec& csi) {
    if (rx.size() < static_cast<std::size_t>(kPreambleLen))
        throw std::invalid_argument("equalize_and_decode: buffer shorter than the preamble");
    for (int j = 0; j < kNumSubcarriers; ++j)
        if (std::abs(csi[j]) == 0.0) throw DecodeError("zero channel gain", j);

    const std::size_t num_symbols = (rx.size() - kPreambleLen) / kSymbolLen;
    const auto& map = dsp::SubcarrierMap::wifi20();
    BitVec bits;
    bits.reserve(num_symbols * kNumSubcarriers);
    for (std::size_t s = 0; s < num_symbols; ++s) {
        const int offset = kPreambleLen + static_cast<int>(s) * kSymbolLen + kCpLen;
        const CsiVec vals = dsp::shift_and_select(fft_window(rx, offset), map);
        for (int j = 0; j < kNumSubcarriers; ++j) {
            const Complex eq = vals[j] / csi[j];
            bits.push_back(eq.real() >= 0.0 ? 0 : 1);
        }
    }
    return bits;
}

} // namespace csisteg::phy
