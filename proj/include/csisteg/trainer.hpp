// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_TRAINER_HPP
#define CSISTEG_TRAINER_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "csisteg/neural.hpp"
#include "csisteg/stego_codec.hpp"
#include "csisteg/types.hpp"

namespace csisteg::train {

struct TrainConfig {
    int secret_len = 14; // N
    int tap_count = 30;  // L
    int batch_size = 64;
    double learning_rate = 3e-4;
    double lr_decay_factor = 0.1;
    int lr_patience_epochs = 10;
    int early_stop_epochs = 20;
    double train_noise_db_min = 5.0;  // additive noise on quotient magnitudes,
    double train_noise_db_max = 30.0; // drawn per batch, dB relative to batch RMS;
                                      // the floor must stay below the per-pair
                                      // levels produced by waveform SNRs the
                                      // deployed link is evaluated at
    double val_noise_db = 20.0; // center validation level; each epoch also
    int val_size = 4096;        // validates at the train range edges and the
                                // schedule tracks the averaged loss
    double transparency_floor = 0.25; // min in-band gain, fraction of filter RMS
    double transparency_weight = 10.0;
    int steps_per_epoch = 50;
    int epochs_max = 500;
    std::uint64_t seed = 1;
    std::vector<int> gen_hidden = {128, 256, 256, 256, 128};
    std::vector<int> ext_hidden = {256, 128};

    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_ber = 0.0;
    double learning_rate = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int final_epoch = 0;
    int best_epoch = 0;
    std::string stop_reason;
    double final_val_ber = 0.0;

    std::string to_csv() const;
};

// Generator: six linear layers, hidden ReLU, Tanh output producing 4L tap
// components. Extractor: three linear layers, every layer ReLU.
nn::DenseNet make_generator(int secret_len, int tap_count, const std::vector<int>& hidden,
                            std::uint64_t seed);
nn::DenseNet make_extractor(int secret_len, const std::vector<int>& hidden, std::uint64_t seed);

// ||c_hat - c||_2 / N for one sample.
double recovery_loss(const Eigen::VectorXd& c_hat, const codec::SecretMessage& c);

// The channel-free training pipeline: secrets -> generator -> tap split ->
// in-band DFT -> deployed power scaling -> guarded divide -> smoothed
// magnitude -> additive noise -> extractor. Kept separate from training so
// gradient checks and validation can drive it directly.
//
// The two transparency knobs shape the generator: every in-band gain of both
// filters is pushed to stay above transparency_floor times that filter's RMS
// gain via a squared hinge weighted by transparency_weight. Without it the
// generator is free to null subcarriers, and a nulled subcarrier loses the
// carrier payload at finite SNR even though the covert channel still works.
class EndToEndPipeline {
  public:
    EndToEndPipeline(int secret_len, int tap_count, double transparency_floor = 0.0,
                     double transparency_weight = 0.0);

    // Forward pass for a batch of secrets (columns, 0/1 entries). The noise
    // matrix (52 x batch) is added to the quotient magnitudes as-is.
    Eigen::MatrixXd forward(const nn::DenseNet& gen, const nn::DenseNet& ext,
                            const Eigen::MatrixXd& secrets, const Eigen::MatrixXd& noise) const;

    // Clean quotient magnitudes for a batch (extractor input before noise).
    Eigen::MatrixXd quotient_magnitudes(const nn::DenseNet& gen,
                                        const Eigen::MatrixXd& secrets) const;

    struct Gradients {
        double loss = 0.0;
        nn::ParamGrads gen;
        nn::ParamGrads ext;
    };

    // Mean training loss over the batch (recovery plus the weighted
    // transparency hinge) and exact analytic gradients for every parameter of
    // both nets, with the noise matrix held constant.
    Gradients loss_and_grads(const nn::DenseNet& gen, const nn::DenseNet& ext,
                             const Eigen::MatrixXd& secrets, const Eigen::MatrixXd& noise) const;

    // Batch-mean weighted transparency penalty alone (zero when the weight is
    // zero or no in-band gain sits below the floor).
    double transparency_loss(const nn::DenseNet& gen, const Eigen::MatrixXd& secrets) const;

    int secret_len() const { return n_; }
    int tap_count() const { return l_; }
    double transparency_floor() const { return floor_; }
    double transparency_weight() const { return weight_; }

  private:
    struct Impl;
    friend struct Impl;

    int n_;
    int l_;
    double floor_;
    double weight_;
    Eigen::MatrixXcd fmatrix_; // 52 x L in-band DFT of the tap vector
};

// Plateau-driven learning-rate schedule. Feed one validation loss per epoch;
// after every full patience window without a new best the rate is multiplied
// by decay, and once the window reaches early_stop the schedule asks to stop.
struct LrSchedule {
    double lr;
    double decay;
    int patience;
    int early_stop;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;

    struct Outcome {
        bool improved;
        bool stop;
    };
    Outcome observe(double val_loss);
};

struct TrainResult {
    nn::DenseNet generator;
    nn::DenseNet extractor;
    TrainReport report;
};

// Joint RMSProp training with the LR schedule and early stopping from cfg.
// Returns the weights of the best validation epoch. Throws
// TrainingDivergedError (with the epoch) if the loss goes non-finite.
TrainResult train_end_to_end(const TrainConfig& cfg);

// Monte-Carlo BER over fresh random secrets through the pipeline at a fixed
// noise level (dB relative to the batch RMS magnitude).
double validate(const nn::DenseNet& gen, const nn::DenseNet& ext, double noise_db, int trials,
                std::uint64_t seed);

struct FinetuneRecord {
    CsiVec csi1{};
    CsiVec csi2{};
    BitVec truth;
};

struct FinetuneDataset {
    std::vector<FinetuneRecord> records;
    std::string source_tag;

    void validate() const; // non-empty, uniform N, finite CSI
};

struct FinetuneConfig {
    int batch_size = 32;
    double learning_rate = 3e-5;
    int epochs = 100;
    std::uint64_t seed = 1;
};

// Adam fine-tuning of the extractor alone on measured CSI pairs. The
// generator is not an input: it cannot be touched by construction.
std::pair<nn::DenseNet, TrainReport> finetune_extractor(const nn::DenseNet& ext,
                                                        const FinetuneDataset& data,
                                                        const FinetuneConfig& cfg);

} // namespace csisteg::train

#endif
