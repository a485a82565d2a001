// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver for the CSI-quotient steganography toolkit. Every
// subcommand reads one flat key=value config file plus repeatable --set
// overrides, so a run is fully described by its config and seed.
//
// Exit codes: 0 success, 2 configuration errors, 3 file parse/format errors,
// 4 training divergence, 1 anything else.
#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csisteg/config.hpp"
#include "csisteg/errors.hpp"
#include "csisteg/harness.hpp"
#include "csisteg/ofdm_phy.hpp"
#include "csisteg/stego_codec.hpp"
#include "csisteg/trainer.hpp"

namespace {

using namespace csisteg;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("-c,--config", args.config_path, "config file with key=value lines");
    sub->add_option("-s,--set", args.overrides, "override, KEY=VALUE, repeatable")
        ->type_name("KEY=VALUE");
}

cfg::Config effective_config(const CommonArgs& args) {
    cfg::Config c = args.config_path.empty() ? cfg::Config::defaults()
                                             : cfg::Config::load_file(args.config_path);
    for (const auto& assignment : args.overrides) c.set_pair(assignment);
    return c;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file for writing: " + path);
    out << text;
    if (!out) throw ConfigError("error while writing output file: " + path);
}

harness::TrialSetup setup_from(const cfg::Config& c) {
    harness::TrialSetup setup;
    setup.profile = cfg::profile_from(c);
    setup.overlay = cfg::overlay_from(c);
    setup.device_seed = c.get_u64("device_seed");
    setup.payload_symbols = c.get_int("payload_symbols");
    return setup;
}

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

double dataset_ber(const nn::DenseNet& ext, const train::FinetuneDataset& data,
                   double threshold) {
    long errors = 0, bits = 0;
    for (const auto& rec : data.records) {
        const auto quotient = codec::divide_csi(rec.csi1, rec.csi2);
        const auto got = codec::extract(quotient, ext, threshold);
        if (got.bits.size() != rec.truth.size())
            throw ConfigError("model and trace dataset disagree on secret length (" +
                              std::to_string(got.bits.size()) + " vs " +
                              std::to_string(rec.truth.size()) + ")");
        for (std::size_t i = 0; i < rec.truth.size(); ++i)
            errors += got.bits[i] != rec.truth[i];
        bits += static_cast<long>(rec.truth.size());
    }
    return static_cast<double>(errors) / static_cast<double>(bits);
}

int cmd_train(const cfg::Config& c) {
    const train::TrainConfig tc = cfg::train_config_from(c);
    std::cout << "training N=" << tc.secret_len << " L=" << tc.tap_count
              << " (batch " << tc.batch_size << ", lr " << tc.learning_rate << ")\n";
    const train::TrainResult res = train::train_end_to_end(tc);

    codec::CodecModel model;
    model.generator = res.generator;
    model.extractor = res.extractor;
    model.secret_len = tc.secret_len;
    model.tap_count = tc.tap_count;
    model.threshold = c.get_double("threshold");
    const std::string model_path = c.get_string("model_path");
    model.save(model_path);
    write_text_file(c.get_string("out_path"), res.report.to_csv());

    std::cout << "stopped after epoch " << res.report.final_epoch << " ("
              << res.report.stop_reason << "), best epoch " << res.report.best_epoch << '\n'
              << "final validation BER " << res.report.final_val_ber << '\n'
              << "model written to " << model_path << ", report to " << c.get_string("out_path")
              << '\n';
    return 0;
}

int cmd_finetune(const cfg::Config& c) {
    const codec::CodecModel model = codec::CodecModel::load(c.get_string("model_path"));
    const train::FinetuneDataset data = harness::import_traces(c.get_string("trace_path"));
    const double before = dataset_ber(model.extractor, data, model.threshold);

    const train::FinetuneConfig ftc = cfg::finetune_config_from(c);
    auto [tuned, report] = train::finetune_extractor(model.extractor, data, ftc);

    codec::CodecModel updated = model;
    updated.extractor = tuned;
    const std::string out_model = c.get_string("model_out_path");
    updated.save(out_model);
    write_text_file(c.get_string("out_path"), report.to_csv());

    std::cout << "fine-tuned on " << data.records.size() << " pairs from tag '"
              << data.source_tag << "'\n"
              << "dataset BER " << before << " -> " << report.final_val_ber << '\n'
              << "model written to " << out_model << '\n';
    return 0;
}

int cmd_embed(const cfg::Config& c) {
    const codec::CodecModel model = codec::CodecModel::load(c.get_string("model_path"));
    const std::uint64_t seed = c.get_u64("seed");

    codec::SecretMessage secret;
    const std::string given = c.get_string("secret_bits");
    if (given.empty()) {
        secret.bits = random_bits(model.secret_len, mix_seed(seed, 0x5ec));
    } else {
        if (static_cast<int>(given.size()) != model.secret_len)
            throw ConfigError("secret_bits has " + std::to_string(given.size()) +
                              " bits but the model expects " +
                              std::to_string(model.secret_len));
        for (char ch : given) {
            if (ch != '0' && ch != '1')
                throw ConfigError("secret_bits must be a 0/1 string");
            secret.bits.push_back(ch == '1');
        }
    }

    const auto taps = codec::generate_taps(secret, model.generator);
    const int payload = kNumSubcarriers * c.get_int("payload_symbols");
    const auto pkt1 = phy::build_packet(random_bits(payload, mix_seed(seed, 1)), seed);
    const auto pkt2 = phy::build_packet(random_bits(payload, mix_seed(seed, 2)), seed);
    const ComplexSeq tx1 = codec::embed(pkt1, taps.g1);
    const ComplexSeq tx2 = codec::embed(pkt2, taps.g2);

    std::ostringstream out;
    out << "packet_index,sample_index,re,im\n" << std::setprecision(17);
    for (int packet = 1; packet <= 2; ++packet) {
        const ComplexSeq& tx = packet == 1 ? tx1 : tx2;
        for (std::size_t n = 0; n < tx.size(); ++n)
            out << packet << ',' << n << ',' << tx[n].real() << ',' << tx[n].imag() << '\n';
    }
    write_text_file(c.get_string("out_path"), out.str());

    std::cout << "secret " << bits_to_string(secret.bits) << " embedded into two packets ("
              << tx1.size() << " and " << tx2.size() << " samples) at "
              << c.get_string("out_path") << '\n';
    return 0;
}

int cmd_extract(const cfg::Config& c) {
    const codec::CodecModel model = codec::CodecModel::load(c.get_string("model_path"));
    const train::FinetuneDataset data = harness::import_traces(c.get_string("trace_path"));

    std::ostringstream out;
    out << "record,ber,guarded_subcarriers,recovered_bits\n";
    long errors = 0, bits = 0, guarded = 0;
    for (std::size_t r = 0; r < data.records.size(); ++r) {
        const auto& rec = data.records[r];
        const auto quotient = codec::divide_csi(rec.csi1, rec.csi2);
        const auto got = codec::extract(quotient, model.extractor, model.threshold);
        if (got.bits.size() != rec.truth.size())
            throw ConfigError("model and trace dataset disagree on secret length (" +
                              std::to_string(got.bits.size()) + " vs " +
                              std::to_string(rec.truth.size()) + ")");
        long rec_errors = 0;
        for (std::size_t i = 0; i < rec.truth.size(); ++i)
            rec_errors += got.bits[i] != rec.truth[i];
        errors += rec_errors;
        bits += static_cast<long>(rec.truth.size());
        guarded += quotient.guarded_count;
        out << r << ',' << static_cast<double>(rec_errors) / static_cast<double>(rec.truth.size())
            << ',' << quotient.guarded_count << ',' << bits_to_string(got.bits) << '\n';
    }
    write_text_file(c.get_string("out_path"), out.str());

    std::cout << "extracted " << data.records.size() << " pairs, overall BER "
              << static_cast<double>(errors) / static_cast<double>(bits)
              << ", guarded subcarriers " << guarded << '\n'
              << "per-record results at " << c.get_string("out_path") << '\n';
    return 0;
}

int cmd_simulate(const cfg::Config& c) {
    const codec::CodecModel model = codec::CodecModel::load(c.get_string("model_path"));
    const harness::TrialSetup setup = setup_from(c);
    const int count = c.get_int("count");
    const std::string path = c.get_string("trace_path");
    harness::export_traces(model, setup, count, c.get_u64("seed"), path,
                           c.get_string("device_tag"));
    std::cout << "simulated " << count << " CSI pairs (tag '" << c.get_string("device_tag")
              << "') at " << path << '\n';
    return 0;
}

int cmd_evaluate(const cfg::Config& c) {
    const harness::ExperimentSpec spec = harness::spec_from_config(c);
    const auto start = std::chrono::steady_clock::now();
    harness::EvalReport report = harness::run_experiment(spec);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << harness::fnv1a64(c.dump());
    report.metadata.emplace_back("config_hash", hash.str());
    std::ostringstream runtime;
    runtime << std::setprecision(3) << seconds;
    report.metadata.emplace_back("runtime_s", runtime.str());

    write_text_file(c.get_string("out_path"), report.to_csv());
    std::cout << report.body_csv();
    std::cout << "report written to " << c.get_string("out_path") << " in " << runtime.str()
              << " s\n";
    return 0;
}

int cmd_demo_quasistatic(const cfg::Config& c) {
    const chan::ChannelProfile profile = cfg::profile_from(c);
    const harness::QuasistaticSummary s = harness::quasistatic_demo(
        profile, c.get_int("trials"), c.get_u64("seed"), c.get_string("out_path"));
    std::cout << "mean relative CSI change over " << s.pairs << " consecutive-packet pairs: "
              << s.mean_relative_change << '\n'
              << "traces written to " << c.get_string("out_path") << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI-quotient steganography: train, embed, simulate and evaluate"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* train = app.add_subcommand("train", "train a generator/extractor model");
    CLI::App* finetune =
        app.add_subcommand("finetune", "fine-tune a model's extractor on a CSI trace file");
    CLI::App* embed =
        app.add_subcommand("embed", "generate the two filtered packet waveforms for a secret");
    CLI::App* extract =
        app.add_subcommand("extract", "recover secrets from a CSI trace file with a model");
    CLI::App* simulate =
        app.add_subcommand("simulate", "export simulated CSI pair traces for a device setup");
    CLI::App* evaluate = app.add_subcommand("evaluate", "run a Monte-Carlo BER sweep");
    CLI::App* demo = app.add_subcommand("demo-quasistatic",
                                        "measure CSI stability across consecutive packets");
    for (CLI::App* sub : {train, finetune, embed, extract, simulate, evaluate, demo})
        add_common(sub, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const cfg::Config c = effective_config(args);
        if (train->parsed()) return cmd_train(c);
        if (finetune->parsed()) return cmd_finetune(c);
        if (embed->parsed()) return cmd_embed(c);
        if (extract->parsed()) return cmd_extract(c);
        if (simulate->parsed()) return cmd_simulate(c);
        if (evaluate->parsed()) return cmd_evaluate(c);
        if (demo->parsed()) return cmd_demo_quasistatic(c);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
