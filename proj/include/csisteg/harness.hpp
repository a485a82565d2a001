// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_HARNESS_HPP
#define CSISTEG_HARNESS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "csisteg/channel_sim.hpp"
#include "csisteg/config.hpp"
#include "csisteg/stego_codec.hpp"
#include "csisteg/trainer.hpp"

namespace csisteg::harness {

// Hamming distance divided by the message length.
double ber(const codec::SecretMessage& truth, const codec::SecretMessage& recovered);

// Physical-trial environment: channel statistics, optional front-end
// distortion and packet shape. The overlay models one fixed device, so the
// same device seed is reused for every packet.
struct TrialSetup {
    chan::ChannelProfile profile;
    chan::ImpairmentCfg overlay{};
    std::uint64_t device_seed = 7;
    int payload_symbols = 1;
};

struct TrialResult {
    codec::SecretMessage truth;
    codec::SecretMessage recovered;
    CsiVec csi1{};
    CsiVec csi2{};
    int guarded_count = 0;
};

// One end-to-end trial: random secret -> filter pair -> two packets ->
// overlay -> correlated channel pair -> noise -> CSI estimation -> quotient
// -> extractor. Deterministic in (model, setup, seed); decode errors are
// rethrown with the trial seed appended for reproduction.
TrialResult run_trial(const codec::CodecModel& model, const TrialSetup& setup,
                      std::uint64_t seed);

struct ExperimentSpec {
    enum class Kind { Capacity, Robustness, Loopback, FinetuneStudy, QuasistaticDemo };
    Kind kind = Kind::Capacity;
    std::vector<int> secret_lens;
    std::vector<int> tap_counts;
    std::vector<double> snr_dbs;
    chan::ChannelProfile profile; // per-cell SNR comes from snr_dbs
    chan::ImpairmentCfg overlay{};
    std::uint64_t device_seed = 7;
    int payload_symbols = 1;
    std::string model_dir = ".";
    int trials = 10000;
    int threads = 0; // 0 picks the hardware thread count
    std::uint64_t seed = 1;

    void validate() const;
};

ExperimentSpec::Kind kind_from_string(const std::string& name); // throws ConfigError
std::string model_file_name(int secret_len, int tap_count);     // model_n{N}_l{L}.csm
ExperimentSpec spec_from_config(const cfg::Config& c);

struct EvalCell {
    int secret_len = 0;
    int tap_count = 0;
    double snr_db = 0.0;
    long trials = 0;
    long bits = 0;
    long bit_errors = 0;
    double ber_value = 0.0;
    double ci_half_width = 0.0; // 1.96 * sqrt(p(1-p)/bits)
    long guarded_subcarriers = 0;
};

// Per-cell results plus a commented metadata preamble. The body is a pure
// function of the experiment definition, so determinism checks compare
// body_csv only; wall clock and similar facts belong in the metadata.
struct EvalReport {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<EvalCell> cells;

    std::string body_csv() const;
    std::string to_csv() const; // '#' metadata lines followed by the body
};

// Monte-Carlo sweep over the spec's grids. Trials are distributed over
// worker threads by index range; every trial derives its seed from (spec
// seed, cell index, trial index), so the body is identical for any thread
// count. Loopback cells replace the fading profile with a single unit tap.
EvalReport run_experiment(const ExperimentSpec& spec);

// CSI trace files: one row per packet, two rows per pair.
// Columns: pair_id, packet_index (1 or 2), re_0, im_0, ..., re_51, im_51,
// truth_bits (0/1 string), device_tag.
void export_traces(const codec::CodecModel& model, const TrialSetup& setup, int count,
                   std::uint64_t seed, const std::string& path, const std::string& device_tag);
train::FinetuneDataset import_traces(const std::string& path);

struct QuasistaticSummary {
    double mean_relative_change = 0.0; // per-pair magnitude change ratio, averaged
    int pairs = 0;
};

// Draws consecutive channel pairs at the profile and measures how much the
// in-band CSI magnitude moves between the two packets. When csv_path is
// non-empty the first pairs (up to 32) are written out for plotting.
QuasistaticSummary quasistatic_demo(const chan::ChannelProfile& profile, int pairs,
                                    std::uint64_t seed, const std::string& csv_path);

// 64-bit FNV-1a, used to stamp reports with a hash of the generating config.
std::uint64_t fnv1a64(const std::string& text);

} // namespace csisteg::harness

#endif
