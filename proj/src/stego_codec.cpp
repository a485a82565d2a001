// SPDX-License-Identifier: Apache-2.0
#include "csisteg/stego_codec.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "csisteg/complex_dsp.hpp"
#include "csisteg/errors.hpp"

namespace csisteg::codec {

namespace {

constexpr char kModelMagic[4] = {'C', 'S', 'M', 'D'};
constexpr std::uint32_t kModelVersion = 1;

double in_band_energy(const ComplexSeq& taps) {
    const CsiVec freq = dsp::shift_and_select(dsp::fft64(taps), dsp::SubcarrierMap::wifi20());
    double e = 0.0;
    for (const auto& v : freq) e += std::norm(v);
    return e;
}

} // namespace

void SecretMessage::validate() const {
    if (bits.empty()) throw std::invalid_argument("secret message must have at least one bit");
    for (auto b : bits)
        if (b > 1) throw std::invalid_argument("secret message bits must be 0 or 1");
}

void FirTapsPair::validate() const {
    if (g1.empty() || g1.size() != g2.size())
        throw std::invalid_argument("tap pair must have equal non-zero length");
    for (const ComplexSeq* g : {&g1, &g2})
        for (const auto& t : *g)
            if (std::abs(t.real()) > 1.0 + 1e-12 || std::abs(t.imag()) > 1.0 + 1e-12 ||
                !std::isfinite(t.real()) || !std::isfinite(t.imag()))
                throw std::invalid_argument("tap components must lie in [-1, 1]");
}

FirTapsPair generate_taps(const SecretMessage& secret, const nn::DenseNet& gen) {
    secret.validate();
    if (gen.input_dim() != static_cast<int>(secret.bits.size()))
        throw std::invalid_argument("generator input dim " + std::to_string(gen.input_dim()) +
                                    " does not match secret length " +
                                    std::to_string(secret.bits.size()));
    if (gen.output_dim() % 4 != 0)
        throw std::invalid_argument("generator output dim must be 4*L");

    Eigen::VectorXd in(secret.bits.size());
    for (std::size_t i = 0; i < secret.bits.size(); ++i) in(static_cast<Eigen::Index>(i)) = secret.bits[i];
    const Eigen::VectorXd out = nn::forward(gen, in);

    const int L = gen.output_dim() / 4;
    FirTapsPair pair;
    pair.g1.resize(L);
    pair.g2.resize(L);
    for (int i = 0; i < L; ++i) {
        pair.g1[i] = Complex(out(i), out(L + i));
        pair.g2[i] = Complex(out(2 * L + i), out(3 * L + i));
    }
    pair.validate();
    return pair;
}

double embed_scale(const ComplexSeq& taps) {
    if (taps.empty()) throw std::invalid_argument("embed: taps must be non-empty");
    const double energy = in_band_energy(taps);
    if (std::sqrt(energy / kNumSubcarriers) < 1e-9)
        throw DegenerateFilterError("filter has no usable in-band energy");
    return static_cast<double>(kFftSize) / std::sqrt(energy);
}

ComplexSeq embed(const phy::PhyPacket& packet, const ComplexSeq& taps) {
    const double scale = embed_scale(taps);
    ComplexSeq out = dsp::convolve(taps, packet.waveform);
    for (auto& v : out) v *= scale;
    return out;
}

CsiQuotient divide_csi(const CsiVec& c1, const CsiVec& c2) {
    CsiQuotient q;
    for (int k = 0; k < kNumSubcarriers; ++k) {
        Complex denom = c2[k];
        const double mag = std::abs(denom);
        if (mag < kDivEpsilon) {
            ++q.guarded_count;
            denom = (mag == 0.0) ? Complex(kDivEpsilon, 0.0) : denom * (kDivEpsilon / mag);
        }
        q.values[k] = c1[k] / denom;
        q.magnitudes[k] = std::abs(q.values[k]);
    }
    return q;
}

SecretMessage extract(const CsiQuotient& q, const nn::DenseNet& ext, double threshold) {
    if (ext.input_dim() != kNumSubcarriers)
        throw std::invalid_argument("extractor input dim must be " +
                                    std::to_string(kNumSubcarriers) + ", got " +
                                    std::to_string(ext.input_dim()));
    Eigen::VectorXd in(kNumSubcarriers);
    for (int k = 0; k < kNumSubcarriers; ++k) in(k) = q.magnitudes[k];
    const Eigen::VectorXd out = nn::forward(ext, in);
    SecretMessage msg;
    msg.bits.resize(out.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) msg.bits[i] = out(i) > threshold ? 1 : 0;
    return msg;
}

void CodecModel::validate() const {
    if (secret_len < 1) throw std::invalid_argument("codec model: secret_len must be >= 1");
    if (tap_count < 1) throw std::invalid_argument("codec model: tap_count must be >= 1");
    generator.validate();
    extractor.validate();
    if (generator.input_dim() != secret_len || generator.output_dim() != 4 * tap_count)
        throw std::invalid_argument("codec model: generator dims do not match N/L");
    if (extractor.input_dim() != kNumSubcarriers || extractor.output_dim() != secret_len)
        throw std::invalid_argument("codec model: extractor dims do not match N");
    if (!(threshold > 0.0) || !std::isfinite(threshold))
        throw std::invalid_argument("codec model: threshold must be positive and finite");
}

void CodecModel::save(const std::string& path) const {
    validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out.write(kModelMagic, 4);
    auto write_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    write_u32(kModelVersion);
    write_u32(static_cast<std::uint32_t>(secret_len));
    write_u32(static_cast<std::uint32_t>(tap_count));
    out.write(reinterpret_cast<const char*>(&threshold), 8);
    for (const nn::DenseNet* net : {&generator, &extractor}) {
        const auto blob = nn::save_weights(*net);
        const std::uint64_t size = blob.size();
        out.write(reinterpret_cast<const char*>(&size), 8);
        out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(size));
    }
    if (!out) throw FormatError("short write to " + path);
}

CodecModel CodecModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
        throw FormatError("bad codec model magic in " + path);
    auto read_u32 = [&]() {
        std::uint32_t v;
        if (!in.read(reinterpret_cast<char*>(&v), 4)) throw FormatError("truncated codec model");
        return v;
    };
    const std::uint32_t version = read_u32();
    if (version != kModelVersion)
        throw FormatError("unsupported codec model version " + std::to_string(version));
    CodecModel m;
    m.secret_len = static_cast<int>(read_u32());
    m.tap_count = static_cast<int>(read_u32());
    if (!in.read(reinterpret_cast<char*>(&m.threshold), 8))
        throw FormatError("truncated codec model");
    for (nn::DenseNet* net : {&m.generator, &m.extractor}) {
        std::uint64_t size = 0;
        if (!in.read(reinterpret_cast<char*>(&size), 8)) throw FormatError("truncated codec model");
        if (size > (1ull << 32)) throw FormatError("implausible weight blob size");
        std::vector<std::uint8_t> blob(size);
        if (!in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(size)))
            throw FormatError("truncated codec model");
        *net = nn::load_weights(blob);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes in codec model " + path);
    m.validate();
    return m;
}

} // namespace csisteg::codec
