// SPDX-License-Identifier: Apache-2.0
#include "csisteg/complex_dsp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace csisteg::dsp {

namespace {

// Twiddle table W[k] = exp(-2 pi i k / 64), k = 0..63.
const std::array<Complex, kFftSize>& twiddles() {
    static const std::array<Complex, kFftSize> table = [] {
        std::array<Complex, kFftSize> t{};
        for (int k = 0; k < kFftSize; ++k) {
            const double phi = -2.0 * std::numbers::pi * k / kFftSize;
            t[k] = Complex(std::cos(phi), std::sin(phi));
        }
        return t;
    }();
    return table;
}

// In-place radix-2 DIT transform on 64 points. sign = -1 forward, +1 inverse.
void transform64(std::array<Complex, kFftSize>& a, int sign) {
    // bit-reversal permutation (6 bits)
    for (int i = 0; i < kFftSize; ++i) {
        int r = 0;
        for (int b = 0; b < 6; ++b)
            if (i & (1 << b)) r |= 1 << (5 - b);
        if (i < r) std::swap(a[i], a[r]);
    }
    const auto& w = twiddles();
    for (int len = 2; len <= kFftSize; len <<= 1) {
        const int stride = kFftSize / len;
        for (int start = 0; start < kFftSize; start += len) {
            for (int j = 0; j < len / 2; ++j) {
                Complex tw = w[static_cast<std::size_t>(j) * stride];
                if (sign > 0) tw = std::conj(tw);
                const Complex u = a[start + j];
                const Complex v = a[start + j + len / 2] * tw;
                a[start + j] = u + v;
                a[start + j + len / 2] = u - v;
            }
        }
    }
}

} // namespace

const SubcarrierMap& SubcarrierMap::wifi20() {
    static const SubcarrierMap map = [] {
        SubcarrierMap m{};
        int out = 0;
        for (int i = 6; i <= 31; ++i) m.kept_indices[out++] = i;
        for (int i = 33; i <= 58; ++i) m.kept_indices[out++] = i;
        m.validate();
        return m;
    }();
    return map;
}

void SubcarrierMap::validate() const {
    int prev = -1;
    for (int idx : kept_indices) {
        if (idx < 0 || idx >= kFftSize)
            throw std::invalid_argument("subcarrier index out of range: " + std::to_string(idx));
        if (idx <= prev)
            throw std::invalid_argument("subcarrier indices must be strictly increasing");
        if (idx == kFftSize / 2)
            throw std::invalid_argument("subcarrier map must exclude the DC bin (32)");
        prev = idx;
    }
}

ComplexSeq convolve(const ComplexSeq& a, const ComplexSeq& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("convolve: inputs must be non-empty");
    ComplexSeq out(a.size() + b.size() - 1, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Complex ai = a[i];
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += ai * b[j];
    }
    return out;
}

Spectrum64 fft64(const ComplexSeq& x) {
    if (x.size() > static_cast<std::size_t>(kFftSize))
        throw std::invalid_argument("fft64: input length " + std::to_string(x.size()) +
                                    " exceeds 64");
    Spectrum64 a{};
    for (std::size_t n = 0; n < x.size(); ++n) a[n] = x[n];
    transform64(a, -1);
    return a;
}

ComplexSeq ifft64(const Spectrum64& spectrum) {
    Spectrum64 a = spectrum;
    transform64(a, +1);
    ComplexSeq out(kFftSize);
    for (int n = 0; n < kFftSize; ++n) out[n] = a[n] / static_cast<double>(kFftSize);
    return out;
}

CsiVec shift_and_select(const Spectrum64& s, const SubcarrierMap& map) {
    CsiVec out{};
    for (int j = 0; j < kNumSubcarriers; ++j) {
        // shifted[i] = s[(i + 32) mod 64]: negative frequencies first
        const int shifted_idx = map.kept_indices[j];
        out[j] = s[(shifted_idx + kFftSize / 2) % kFftSize];
    }
    return out;
}

Spectrum64 place_subcarriers(const CsiVec& values, const SubcarrierMap& map) {
    Spectrum64 out{};
    for (int j = 0; j < kNumSubcarriers; ++j) {
        const int shifted_idx = map.kept_indices[j];
        out[(shifted_idx + kFftSize / 2) % kFftSize] = values[j];
    }
    return out;
}

} // namespace csisteg::dsp
