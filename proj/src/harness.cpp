// SPDX-License-Identifier: Apache-2.0
#include "csisteg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "csisteg/complex_dsp.hpp"
#include "csisteg/errors.hpp"
#include "csisteg/ofdm_phy.hpp"

namespace csisteg::harness {

double ber(const codec::SecretMessage& truth, const codec::SecretMessage& recovered) {
    truth.validate();
    recovered.validate();
    if (truth.bits.size() != recovered.bits.size())
        throw std::invalid_argument("ber: message lengths differ");
    long distance = 0;
    for (std::size_t i = 0; i < truth.bits.size(); ++i)
        distance += truth.bits[i] != recovered.bits[i];
    return static_cast<double>(distance) / static_cast<double>(truth.bits.size());
}

namespace {

BitVec random_bits(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    BitVec bits(count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1);
    return bits;
}

std::string bits_to_string(const BitVec& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
    return s;
}

} // namespace

TrialResult run_trial(const codec::CodecModel& model, const TrialSetup& setup,
                      std::uint64_t seed) {
    if (setup.payload_symbols < 0)
        throw std::invalid_argument("run_trial: payload_symbols must be >= 0");
    try {
        TrialResult out;
        out.truth.bits = random_bits(model.secret_len, mix_seed(seed, 1));
        const auto taps = codec::generate_taps(out.truth, model.generator);

        const int payload_bits = kNumSubcarriers * setup.payload_symbols;
        const auto pkt1 = phy::build_packet(random_bits(payload_bits, mix_seed(seed, 2)), seed);
        const auto pkt2 = phy::build_packet(random_bits(payload_bits, mix_seed(seed, 3)), seed);

        ComplexSeq tx1 = codec::embed(pkt1, taps.g1);
        ComplexSeq tx2 = codec::embed(pkt2, taps.g2);
        if (!setup.overlay.is_zero()) {
            tx1 = chan::hardware_overlay(tx1, setup.overlay, setup.device_seed);
            tx2 = chan::hardware_overlay(tx2, setup.overlay, setup.device_seed);
        }

        const auto [h1, h2] = chan::draw_pair(setup.profile, mix_seed(seed, 4));
        const ComplexSeq y1 = chan::apply(h1, tx1, setup.profile.snr_db, mix_seed(seed, 5));
        const ComplexSeq y2 = chan::apply(h2, tx2, setup.profile.snr_db, mix_seed(seed, 6));

        out.csi1 = phy::estimate_csi(y1);
        out.csi2 = phy::estimate_csi(y2);
        const auto q = codec::divide_csi(out.csi1, out.csi2);
        out.guarded_count = q.guarded_count;
        out.recovered = codec::extract(q, model.extractor, model.threshold);
        return out;
    } catch (const DecodeError& e) {
        throw DecodeError(std::string(e.what()) + " (trial seed " + std::to_string(seed) + ")",
                          e.subcarrier);
    } catch (const DegenerateFilterError& e) {
        throw DegenerateFilterError(std::string(e.what()) + " (trial seed " +
                                    std::to_string(seed) + ")");
    }
}

void ExperimentSpec::validate() const {
    if (secret_lens.empty() || tap_counts.empty() || snr_dbs.empty())
        throw std::invalid_argument("experiment: all grids must be non-empty");
    for (int n : secret_lens)
        if (n < 1) throw std::invalid_argument("experiment: secret lengths must be >= 1");
    for (int l : tap_counts)
        if (l < 1) throw std::invalid_argument("experiment: tap counts must be >= 1");
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    if (threads < 0) throw std::invalid_argument("experiment: threads must be >= 0");
    if (payload_symbols < 0)
        throw std::invalid_argument("experiment: payload_symbols must be >= 0");
    profile.validate();
    overlay.validate();
}

ExperimentSpec::Kind kind_from_string(const std::string& name) {
    if (name == "capacity") return ExperimentSpec::Kind::Capacity;
    if (name == "robustness") return ExperimentSpec::Kind::Robustness;
    if (name == "loopback") return ExperimentSpec::Kind::Loopback;
    if (name == "finetune_study") return ExperimentSpec::Kind::FinetuneStudy;
    if (name == "quasistatic_demo") return ExperimentSpec::Kind::QuasistaticDemo;
    throw ConfigError("unknown experiment kind: " + name);
}

namespace {

const char* kind_name(ExperimentSpec::Kind k) {
    switch (k) {
        case ExperimentSpec::Kind::Capacity: return "capacity";
        case ExperimentSpec::Kind::Robustness: return "robustness";
        case ExperimentSpec::Kind::Loopback: return "loopback";
        case ExperimentSpec::Kind::FinetuneStudy: return "finetune_study";
        case ExperimentSpec::Kind::QuasistaticDemo: return "quasistatic_demo";
    }
    return "?";
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(10) << v;
    return out.str();
}

} // namespace

std::string model_file_name(int secret_len, int tap_count) {
    return "model_n" + std::to_string(secret_len) + "_l" + std::to_string(tap_count) + ".csm";
}

ExperimentSpec spec_from_config(const cfg::Config& c) {
    ExperimentSpec spec;
    spec.kind = kind_from_string(c.get_string("kind"));
    spec.secret_lens = c.get_int_list("n_grid");
    spec.tap_counts = c.get_int_list("l_grid");
    spec.snr_dbs = c.get_double_list("snr_grid");
    spec.profile = cfg::profile_from(c);
    spec.overlay = cfg::overlay_from(c);
    spec.device_seed = c.get_u64("device_seed");
    spec.payload_symbols = c.get_int("payload_symbols");
    spec.model_dir = c.get_string("model_dir");
    spec.trials = c.get_int("trials");
    spec.threads = c.get_int("threads");
    spec.seed = c.get_u64("seed");
    spec.validate();
    return spec;
}

std::string EvalReport::body_csv() const {
    std::ostringstream out;
    out << "secret_len,tap_count,snr_db,trials,bits,bit_errors,ber,ci_half_width,"
           "guarded_subcarriers\n";
    for (const auto& c : cells) {
        out << c.secret_len << ',' << c.tap_count << ',' << format_double(c.snr_db) << ','
            << c.trials << ',' << c.bits << ',' << c.bit_errors << ','
            << format_double(c.ber_value) << ',' << format_double(c.ci_half_width) << ','
            << c.guarded_subcarriers << '\n';
    }
    return out.str();
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
    out << body_csv();
    return out.str();
}

namespace {

struct CellAccum {
    long bit_errors = 0;
    long bits = 0;
    long guarded = 0;
};

CellAccum run_cell_range(const codec::CodecModel& model, const TrialSetup& setup,
                         std::uint64_t base_seed, std::uint64_t cell_index, int begin, int end) {
    CellAccum acc;
    for (int k = begin; k < end; ++k) {
        const TrialResult r =
            run_trial(model, setup, mix_seed(base_seed, cell_index, static_cast<std::uint64_t>(k)));
        for (std::size_t i = 0; i < r.truth.bits.size(); ++i)
            acc.bit_errors += r.truth.bits[i] != r.recovered.bits[i];
        acc.bits += static_cast<long>(r.truth.bits.size());
        acc.guarded += r.guarded_count;
    }
    return acc;
}

} // namespace

EvalReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.kind == ExperimentSpec::Kind::FinetuneStudy ||
        spec.kind == ExperimentSpec::Kind::QuasistaticDemo)
        throw ConfigError(std::string("experiment kind ") + kind_name(spec.kind) +
                          " has a dedicated command and cannot run as a sweep");

    int threads = spec.threads;
    if (threads == 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    EvalReport report;
    report.metadata = {
        {"tool", "csisteg"},
        {"format", "1"},
        {"kind", kind_name(spec.kind)},
        {"seed", std::to_string(spec.seed)},
        {"trials", std::to_string(spec.trials)},
        {"threads", std::to_string(threads)},
        {"model_dir", spec.model_dir},
        {"doppler_hz", format_double(spec.profile.doppler_hz)},
        {"packet_interval_s", format_double(spec.profile.packet_interval_s)},
        {"ripple_amp", format_double(spec.overlay.ripple_amp)},
        {"iq_imbalance", format_double(spec.overlay.iq_imbalance)},
    };

    std::map<std::pair<int, int>, codec::CodecModel> models;
    std::uint64_t cell_index = 0;
    for (int n : spec.secret_lens) {
        for (int l : spec.tap_counts) {
            const auto key = std::make_pair(n, l);
            if (models.find(key) == models.end()) {
                const std::string path = spec.model_dir + "/" + model_file_name(n, l);
                try {
                    models.emplace(key, codec::CodecModel::load(path));
                } catch (const std::exception& e) {
                    throw ConfigError("cell (N=" + std::to_string(n) + ", L=" +
                                      std::to_string(l) + "): cannot load model " + path + ": " +
                                      e.what());
                }
                const auto& m = models.at(key);
                if (m.secret_len != n || m.tap_count != l)
                    throw ConfigError("cell (N=" + std::to_string(n) + ", L=" +
                                      std::to_string(l) + "): model file " + path +
                                      " has dimensions N=" + std::to_string(m.secret_len) +
                                      ", L=" + std::to_string(m.tap_count));
            }
            const codec::CodecModel& model = models.at(key);

            for (double snr : spec.snr_dbs) {
                TrialSetup setup;
                setup.profile = spec.profile;
                setup.profile.snr_db = snr;
                setup.overlay = spec.overlay;
                setup.device_seed = spec.device_seed;
                setup.payload_symbols = spec.payload_symbols;
                if (spec.kind == ExperimentSpec::Kind::Loopback) {
                    setup.profile.tap_delays = {0};
                    setup.profile.tap_powers = {1.0};
                    setup.profile.doppler_hz = 0.0;
                }

                const int workers = std::min(threads, spec.trials);
                std::vector<CellAccum> parts(workers);
                std::vector<std::exception_ptr> failures(workers);
                std::vector<std::thread> pool;
                const int chunk = (spec.trials + workers - 1) / workers;
                for (int w = 0; w < workers; ++w) {
                    const int begin = w * chunk;
                    const int end = std::min(spec.trials, begin + chunk);
                    pool.emplace_back([&, w, begin, end] {
                        try {
                            parts[w] = run_cell_range(model, setup, spec.seed, cell_index, begin,
                                                      end);
                        } catch (...) {
                            failures[w] = std::current_exception();
                        }
                    });
                }
                for (auto& t : pool) t.join();
                for (const auto& f : failures)
                    if (f) std::rethrow_exception(f);

                CellAccum total;
                for (const auto& p : parts) {
                    total.bit_errors += p.bit_errors;
                    total.bits += p.bits;
                    total.guarded += p.guarded;
                }

                EvalCell cell;
                cell.secret_len = n;
                cell.tap_count = l;
                cell.snr_db = snr;
                cell.trials = spec.trials;
                cell.bits = total.bits;
                cell.bit_errors = total.bit_errors;
                cell.ber_value =
                    static_cast<double>(total.bit_errors) / static_cast<double>(total.bits);
                cell.ci_half_width = 1.96 * std::sqrt(cell.ber_value * (1.0 - cell.ber_value) /
                                                      static_cast<double>(total.bits));
                cell.guarded_subcarriers = total.guarded;
                report.cells.push_back(cell);
                ++cell_index;
            }
        }
    }
    return report;
}

void export_traces(const codec::CodecModel& model, const TrialSetup& setup, int count,
                   std::uint64_t seed, const std::string& path, const std::string& device_tag) {
    if (count < 1) throw std::invalid_argument("export_traces: count must be >= 1");
    if (device_tag.find(',') != std::string::npos)
        throw std::invalid_argument("export_traces: device tag must not contain commas");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open trace file for writing: " + path);

    out << "pair_id,packet_index";
    for (int j = 0; j < kNumSubcarriers; ++j) out << ",re_" << j << ",im_" << j;
    out << ",truth_bits,device_tag\n";
    out << std::setprecision(17);
    for (int i = 0; i < count; ++i) {
        const TrialResult r = run_trial(model, setup, mix_seed(seed, 0x7a, i));
        const std::string bits = bits_to_string(r.truth.bits);
        for (int packet = 1; packet <= 2; ++packet) {
            const CsiVec& csi = packet == 1 ? r.csi1 : r.csi2;
            out << i << ',' << packet;
            for (int j = 0; j < kNumSubcarriers; ++j)
                out << ',' << csi[j].real() << ',' << csi[j].imag();
            out << ',' << bits << ',' << device_tag << '\n';
        }
    }
    if (!out) throw ConfigError("error while writing trace file: " + path);
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string item;
    std::istringstream in(line);
    while (std::getline(in, item, ',')) fields.push_back(item);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_field_double(const std::string& s, long lineno, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " value: \"" + s + "\"", lineno);
    }
}

long parse_field_long(const std::string& s, long lineno, const char* what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("bad ") + what + " value: \"" + s + "\"", lineno);
    }
}

} // namespace

train::FinetuneDataset import_traces(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file: " + path);

    const int expected_fields = 2 + 2 * kNumSubcarriers + 2;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("trace file is empty: " + path);
    if (line.rfind("pair_id,packet_index,re_0,im_0", 0) != 0)
        throw FormatError("trace file header is not a CSI trace header");

    struct Slot {
        CsiVec csi1{}, csi2{};
        bool have1 = false, have2 = false;
        std::string bits;
        std::string tag;
    };
    std::map<long, Slot> slots;

    long lineno = 1;
    std::size_t secret_len = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_row(line);
        if (static_cast<int>(fields.size()) != expected_fields)
            throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(expected_fields),
                             lineno);
        const long pair_id = parse_field_long(fields[0], lineno, "pair_id");
        const long packet = parse_field_long(fields[1], lineno, "packet_index");
        if (packet != 1 && packet != 2)
            throw ParseError("packet_index must be 1 or 2, got " + std::to_string(packet),
                             lineno);
        CsiVec csi;
        for (int j = 0; j < kNumSubcarriers; ++j)
            csi[j] = Complex(parse_field_double(fields[2 + 2 * j], lineno, "re"),
                             parse_field_double(fields[3 + 2 * j], lineno, "im"));
        const std::string& bits = fields[expected_fields - 2];
        if (bits.empty()) throw ParseError("empty truth_bits field", lineno);
        for (char ch : bits)
            if (ch != '0' && ch != '1')
                throw ParseError("truth_bits must be a 0/1 string, got \"" + bits + "\"", lineno);
        if (secret_len == 0) secret_len = bits.size();
        else if (bits.size() != secret_len)
            throw FormatError("mixed secret lengths in trace file: expected " +
                              std::to_string(secret_len) + " bits, line " +
                              std::to_string(lineno) + " has " + std::to_string(bits.size()));

        Slot& slot = slots[pair_id];
        if (packet == 1) {
            if (slot.have1)
                throw FormatError("duplicate packet 1 for pair " + std::to_string(pair_id));
            slot.csi1 = csi;
            slot.have1 = true;
        } else {
            if (slot.have2)
                throw FormatError("duplicate packet 2 for pair " + std::to_string(pair_id));
            slot.csi2 = csi;
            slot.have2 = true;
        }
        if (!slot.bits.empty() && slot.bits != bits)
            throw FormatError("pair " + std::to_string(pair_id) +
                              " has different truth bits on its two packets");
        slot.bits = bits;
        slot.tag = fields[expected_fields - 1];
    }

    train::FinetuneDataset data;
    for (const auto& [pair_id, slot] : slots) {
        if (!slot.have1 || !slot.have2)
            throw FormatError("pair " + std::to_string(pair_id) + " is missing packet " +
                              (slot.have1 ? "2" : "1"));
        train::FinetuneRecord rec;
        rec.csi1 = slot.csi1;
        rec.csi2 = slot.csi2;
        rec.truth.resize(slot.bits.size());
        for (std::size_t i = 0; i < slot.bits.size(); ++i) rec.truth[i] = slot.bits[i] == '1';
        if (data.source_tag.empty()) data.source_tag = slot.tag;
        data.records.push_back(std::move(rec));
    }
    data.validate();
    return data;
}

namespace {

CsiVec band_response(const ComplexSeq& taps) {
    return dsp::shift_and_select(dsp::fft64(taps), dsp::SubcarrierMap::wifi20());
}

} // namespace

QuasistaticSummary quasistatic_demo(const chan::ChannelProfile& profile, int pairs,
                                    std::uint64_t seed, const std::string& csv_path) {
    if (pairs < 1) throw std::invalid_argument("quasistatic_demo: pairs must be >= 1");
    profile.validate();

    std::ofstream out;
    const int write_limit = 32;
    if (!csv_path.empty()) {
        out.open(csv_path, std::ios::trunc);
        if (!out) throw ConfigError("cannot open demo file for writing: " + csv_path);
        out << "pair_id,subcarrier,mag1,phase1,mag2,phase2\n" << std::setprecision(10);
    }

    double accum = 0.0;
    for (int i = 0; i < pairs; ++i) {
        const auto [h1, h2] = chan::draw_pair(profile, mix_seed(seed, 0x9d, i));
        const CsiVec b1 = band_response(h1.taps);
        const CsiVec b2 = band_response(h2.taps);
        double change = 0.0, reference = 0.0;
        for (int j = 0; j < kNumSubcarriers; ++j) {
            change += std::abs(std::abs(b1[j]) - std::abs(b2[j]));
            reference += std::abs(b1[j]);
        }
        accum += change / std::max(reference, 1e-300);
        if (out && i < write_limit) {
            for (int j = 0; j < kNumSubcarriers; ++j)
                out << i << ',' << j << ',' << std::abs(b1[j]) << ',' << std::arg(b1[j]) << ','
                    << std::abs(b2[j]) << ',' << std::arg(b2[j]) << '\n';
        }
    }
    return {accum / pairs, pairs};
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace csisteg::harness
