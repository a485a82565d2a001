// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csisteg/complex_dsp.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace csisteg;
using namespace csisteg::dsp;

namespace {

// Oracle: direct DFT sum, X[k] = sum_n x[n] e^{-2 pi i k n / 64}.
Spectrum64 naive_dft64(const ComplexSeq& x) {
    Spectrum64 out{};
    for (int k = 0; k < kFftSize; ++k) {
        Complex acc(0.0, 0.0);
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double phi = -2.0 * std::numbers::pi * k * static_cast<double>(n) / kFftSize;
            acc += x[n] * Complex(std::cos(phi), std::sin(phi));
        }
        out[k] = acc;
    }
    return out;
}

// Oracle: textbook double loop, written independently of the library routine.
ComplexSeq naive_convolve(const ComplexSeq& a, const ComplexSeq& b) {
    ComplexSeq out(a.size() + b.size() - 1, Complex(0.0, 0.0));
    for (std::size_t k = 0; k < out.size(); ++k) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::size_t j = k - i;
            if (k >= i && j < b.size()) out[k] += a[i] * b[j];
        }
    }
    return out;
}

ComplexSeq random_seq(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    ComplexSeq x(n);
    for (auto& v : x) v = Complex(dist(rng), dist(rng));
    return x;
}

double max_abs_diff(const Spectrum64& a, const Spectrum64& b) {
    double m = 0.0;
    for (int i = 0; i < kFftSize; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("fft64 matches the direct DFT sum on random inputs") {
    std::mt19937_64 rng(0xd5f0001);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> len_dist(1, kFftSize);
        const ComplexSeq x = random_seq(rng, len_dist(rng));
        const Spectrum64 got = fft64(x);
        const Spectrum64 want = naive_dft64(x);
        // inputs are O(1), so absolute comparison at 1e-12 is meaningful
        CHECK(max_abs_diff(got, want) < 1e-12 * 64.0);
    }
}

TEST_CASE("fft64 zero-pads short inputs") {
    ComplexSeq x = {Complex(1.0, 0.0), Complex(0.0, 2.0)};
    ComplexSeq padded = x;
    padded.resize(kFftSize, Complex(0.0, 0.0));
    CHECK(max_abs_diff(fft64(x), fft64(padded)) == doctest::Approx(0.0));
}

TEST_CASE("fft64 rejects inputs longer than 64") {
    ComplexSeq x(65, Complex(0.0, 0.0));
    CHECK_THROWS_AS(fft64(x), std::invalid_argument);
}

TEST_CASE("ifft64 inverts fft64") {
    std::mt19937_64 rng(0xd5f0002);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexSeq x = random_seq(rng, kFftSize);
        const ComplexSeq back = ifft64(fft64(x));
        double m = 0.0;
        for (int i = 0; i < kFftSize; ++i) m = std::max(m, std::abs(back[i] - x[i]));
        CHECK(m < 1e-12);
    }
}

TEST_CASE("fft64 is linear") {
    std::mt19937_64 rng(0xd5f0003);
    const ComplexSeq x = random_seq(rng, kFftSize);
    const ComplexSeq y = random_seq(rng, kFftSize);
    const Complex alpha(0.7, -1.3);
    ComplexSeq z(kFftSize);
    for (int i = 0; i < kFftSize; ++i) z[i] = alpha * x[i] + y[i];
    const Spectrum64 fx = fft64(x);
    const Spectrum64 fy = fft64(y);
    const Spectrum64 fz = fft64(z);
    Spectrum64 want{};
    for (int i = 0; i < kFftSize; ++i) want[i] = alpha * fx[i] + fy[i];
    CHECK(max_abs_diff(fz, want) < 1e-12 * 64.0);
}

TEST_CASE("convolve matches the double-loop oracle") {
    std::mt19937_64 rng(0xd5f0004);
    std::uniform_int_distribution<std::size_t> len_dist(1, 40);
    for (int trial = 0; trial < 100; ++trial) {
        const ComplexSeq a = random_seq(rng, len_dist(rng));
        const ComplexSeq b = random_seq(rng, len_dist(rng));
        const ComplexSeq got = convolve(a, b);
        const ComplexSeq want = naive_convolve(a, b);
        REQUIRE(got.size() == want.size());
        double m = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) m = std::max(m, std::abs(got[i] - want[i]));
        CHECK(m < 1e-12 * static_cast<double>(a.size()));
    }
}

TEST_CASE("convolve is commutative and has delta identity") {
    std::mt19937_64 rng(0xd5f0005);
    const ComplexSeq a = random_seq(rng, 17);
    const ComplexSeq b = random_seq(rng, 9);
    const ComplexSeq ab = convolve(a, b);
    const ComplexSeq ba = convolve(b, a);
    REQUIRE(ab.size() == ba.size());
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(ab[i] - ba[i]) < 1e-13);

    const ComplexSeq delta = {Complex(1.0, 0.0)};
    const ComplexSeq same = convolve(a, delta);
    REQUIRE(same.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same[i] == a[i]);
}

TEST_CASE("convolution theorem holds when the result fits in 64 samples") {
    std::mt19937_64 rng(0xd5f0006);
    const ComplexSeq a = random_seq(rng, 30);
    const ComplexSeq b = random_seq(rng, 20); // 30 + 20 - 1 = 49 <= 64
    const Spectrum64 fa = fft64(a);
    const Spectrum64 fb = fft64(b);
    const Spectrum64 fc = fft64(convolve(a, b));
    double m = 0.0;
    for (int k = 0; k < kFftSize; ++k) m = std::max(m, std::abs(fc[k] - fa[k] * fb[k]));
    CHECK(m < 1e-9);
}

TEST_CASE("shift_and_select picks the negative-frequency half first") {
    // Tone at pre-shift bin 1 (positive frequency) must land in the upper half
    // of the shifted view; the map's shifted index 33 corresponds to bin 1.
    ComplexSeq x(kFftSize);
    for (int n = 0; n < kFftSize; ++n) {
        const double phi = 2.0 * std::numbers::pi * n / kFftSize;
        x[n] = Complex(std::cos(phi), std::sin(phi));
    }
    const CsiVec picked = shift_and_select(fft64(x), SubcarrierMap::wifi20());
    // shifted index 33 is position 26 in the kept list (26 negative bins first)
    CHECK(std::abs(picked[26] - Complex(64.0, 0.0)) < 1e-9);
    for (int j = 0; j < kNumSubcarriers; ++j) {
        if (j == 26) continue;
        CHECK(std::abs(picked[j]) < 1e-9);
    }
}

TEST_CASE("place_subcarriers is a right inverse of shift_and_select") {
    std::mt19937_64 rng(0xd5f0007);
    std::normal_distribution<double> dist(0.0, 1.0);
    CsiVec v{};
    for (auto& c : v) c = Complex(dist(rng), dist(rng));
    const auto& map = SubcarrierMap::wifi20();
    const CsiVec back = shift_and_select(place_subcarriers(v, map), map);
    for (int j = 0; j < kNumSubcarriers; ++j) CHECK(std::abs(back[j] - v[j]) < 1e-15);
}

TEST_CASE("wifi20 map excludes DC and stays within band") {
    const auto& map = SubcarrierMap::wifi20();
    for (int idx : map.kept_indices) {
        CHECK(idx != kFftSize / 2);
        CHECK(idx >= 6);
        CHECK(idx <= 58);
    }
    CHECK_NOTHROW(map.validate());

    SubcarrierMap bad = map;
    bad.kept_indices[0] = bad.kept_indices[1]; // duplicate breaks monotonicity
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
