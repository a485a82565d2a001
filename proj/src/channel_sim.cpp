// SPDX-License-Identifier: Apache-2.0
#include "csisteg/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "csisteg/complex_dsp.hpp"

namespace csisteg::chan {

namespace {

constexpr double kPowerSumTol = 1e-9;

ComplexSeq gaussian_taps(const ChannelProfile& profile, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const int span = profile.tap_delays.back() + 1;
    ComplexSeq taps(span, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < profile.tap_delays.size(); ++i) {
        const double s = std::sqrt(profile.tap_powers[i] / 2.0);
        taps[profile.tap_delays[i]] = Complex(s * n01(rng), s * n01(rng));
    }
    return taps;
}

} // namespace

void ChannelProfile::validate() const {
    if (tap_delays.empty() || tap_delays.size() != tap_powers.size())
        throw std::invalid_argument("channel profile: delays and powers must be non-empty and equal-length");
    int prev = -1;
    for (int d : tap_delays) {
        if (d < 0) throw std::invalid_argument("channel profile: negative tap delay");
        if (d <= prev) throw std::invalid_argument("channel profile: tap delays must be strictly increasing");
        prev = d;
    }
    double sum = 0.0;
    for (double p : tap_powers) {
        if (!(p > 0.0)) throw std::invalid_argument("channel profile: tap powers must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kPowerSumTol)
        throw std::invalid_argument("channel profile: tap powers must sum to 1, got " + std::to_string(sum));
    if (doppler_hz < 0.0) throw std::invalid_argument("channel profile: doppler_hz must be >= 0");
    if (!(packet_interval_s > 0.0))
        throw std::invalid_argument("channel profile: packet_interval_s must be > 0");
}

ChannelProfile ChannelProfile::tgn_like_default() {
    // Per-tap power decay ratio 0.21985 puts the RMS delay spread of the
    // 7-tap, 50 ns grid at 30 ns.
    constexpr double kDecay = 0.21985;
    ChannelProfile p;
    double sum = 0.0;
    double power = 1.0;
    for (int l = 0; l < 7; ++l) {
        p.tap_delays.push_back(l);
        p.tap_powers.push_back(power);
        sum += power;
        power *= kDecay;
    }
    for (double& v : p.tap_powers) v /= sum;
    p.validate();
    return p;
}

double correlation_coefficient(const ChannelProfile& profile) {
    const double x = 2.0 * std::numbers::pi * profile.doppler_hz * profile.packet_interval_s;
    return std::max(0.0, std::cyl_bessel_j(0.0, x));
}

std::pair<ChannelRealization, ChannelRealization> draw_pair(const ChannelProfile& profile,
                                                            std::uint64_t seed) {
    profile.validate();
    std::mt19937_64 rng(seed);
    const double rho = correlation_coefficient(profile);

    ChannelRealization h1{gaussian_taps(profile, rng), 0};
    const ComplexSeq fresh = gaussian_taps(profile, rng);
    ChannelRealization h2{ComplexSeq(h1.taps.size()), 1};
    const double blend = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t i = 0; i < h1.taps.size(); ++i)
        h2.taps[i] = rho * h1.taps[i] + blend * fresh[i];
    return {std::move(h1), std::move(h2)};
}

ComplexSeq apply(const ChannelRealization& ch, const ComplexSeq& tx, double snr_db,
                 std::uint64_t seed) {
    if (tx.empty()) throw std::invalid_argument("channel apply: tx must be non-empty");
    if (ch.taps.empty()) throw std::invalid_argument("channel apply: empty realization");

    ComplexSeq y = dsp::convolve(ch.taps, tx);
    if (std::isinf(snr_db) && snr_db > 0.0) return y;

    double power = 0.0;
    for (const auto& v : y) power += std::norm(v);
    power /= static_cast<double>(y.size());
    const double noise_var = power * std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(noise_var / 2.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (auto& v : y) v += Complex(sigma * n01(rng), sigma * n01(rng));
    return y;
}

void ImpairmentCfg::validate() const {
    if (ripple_amp < 0.0 || ripple_amp >= 1.0)
        throw std::invalid_argument("impairment: ripple_amp must be in [0, 1)");
    if (max_delay_samples < 0 || max_delay_samples > 8)
        throw std::invalid_argument("impairment: max_delay_samples must be in [0, 8]");
    if (iq_imbalance < 0.0 || iq_imbalance >= 1.0)
        throw std::invalid_argument("impairment: iq_imbalance must be in [0, 1)");
}

bool ImpairmentCfg::is_zero() const {
    return ripple_amp == 0.0 && max_delay_samples == 0 && iq_imbalance == 0.0;
}

ComplexSeq hardware_overlay(const ComplexSeq& tx, const ImpairmentCfg& cfg,
                            std::uint64_t device_seed) {
    cfg.validate();
    if (cfg.is_zero()) return tx;

    std::mt19937_64 rng(device_seed);

    // Front-end FIR: unit main tap delayed by 0..max_delay_samples, then up
    // to four trailing ripple taps whose absolute values sum to ripple_amp,
    // which bounds the per-subcarrier frequency-response deviation by the
    // same amount.
    std::uniform_int_distribution<int> delay_dist(0, cfg.max_delay_samples);
    const int delay = cfg.max_delay_samples > 0 ? delay_dist(rng) : 0;
    ComplexSeq fir(delay + 5, Complex(0.0, 0.0));
    fir[delay] = Complex(1.0, 0.0);
    if (cfg.ripple_amp > 0.0) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double side_sum = 0.0;
        ComplexSeq side(4);
        for (auto& s : side) {
            s = Complex(u(rng), u(rng));
            side_sum += std::abs(s);
        }
        for (int i = 0; i < 4; ++i) fir[delay + 1 + i] = side[i] * (cfg.ripple_amp / side_sum);
    }

    ComplexSeq y = (delay == 0 && cfg.ripple_amp == 0.0) ? tx : dsp::convolve(fir, tx);
    if (cfg.iq_imbalance > 0.0) {
        const double eps = cfg.iq_imbalance;
        for (auto& v : y) v = Complex((1.0 + eps) * v.real(), (1.0 - eps) * v.imag());
    }
    return y;
}

} // namespace csisteg::chan
