// SPDX-License-Identifier: Apache-2.0
#ifndef CSISTEG_NEURAL_HPP
#define CSISTEG_NEURAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace csisteg::nn {

enum class Activation : std::uint32_t { None = 0, ReLU = 1, Tanh = 2 };

struct Layer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
    Activation act = Activation::None;
};

struct DenseNet {
    std::vector<Layer> layers;

    int input_dim() const;
    int output_dim() const;
    std::size_t param_count() const;
    void validate() const; // throws std::invalid_argument on broken chaining or non-finite params
};

// Fully-connected net with the given layer widths (dims.front() = input,
// dims.back() = output) and one activation per layer. Weights are
// Kaiming-uniform (+ / - sqrt(6 / fan_in)), biases zero, filled in a fixed
// order so a seed pins the whole net.
DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  std::uint64_t seed);

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input);

// Batched forward; samples are columns.
Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& inputs);

// Records per-layer pre- and post-activation values for reuse in backward.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
};
Eigen::MatrixXd forward_trace(const DenseNet& net, const Eigen::MatrixXd& inputs,
                              ForwardTrace& trace);

struct ParamGrads {
    std::vector<Eigen::MatrixXd> dweight;
    std::vector<Eigen::VectorXd> dbias;
    Eigen::MatrixXd dinput; // gradient wrt the input batch

    static ParamGrads zeros_like(const DenseNet& net);
    void accumulate(const ParamGrads& other); // element-wise add (dinput excluded)
    bool all_finite() const;
};

// Reverse-mode gradients for a batch; upstream holds dL/d(output) per column.
// Gradients are summed over the batch (scale the upstream for means).
ParamGrads backward(const DenseNet& net, const Eigen::MatrixXd& inputs,
                    const ForwardTrace& trace, const Eigen::MatrixXd& upstream);

// Single-sample convenience wrapper that runs its own forward pass.
ParamGrads backward(const DenseNet& net, const Eigen::VectorXd& input,
                    const Eigen::VectorXd& upstream);

struct OptimizerState {
    enum class Kind { RMSProp, Adam };
    Kind kind = Kind::RMSProp;
    double learning_rate = 3e-4;
    int batch_size = 64;
    double rmsprop_alpha = 0.99;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;

    // accumulators mirror the net's parameter shapes
    std::vector<Eigen::MatrixXd> w_sq, w_mom;
    std::vector<Eigen::VectorXd> b_sq, b_mom;

    static OptimizerState rmsprop(const DenseNet& net, double lr, int batch_size);
    static OptimizerState adam(const DenseNet& net, double lr, int batch_size);
};

// One optimizer update in place. Throws TrainingDivergedError if grads are
// not finite.
void step(DenseNet& net, const ParamGrads& grads, OptimizerState& state);

// Versioned little-endian binary weight format; round-trips bit-exactly.
std::vector<std::uint8_t> save_weights(const DenseNet& net);
DenseNet load_weights(const std::vector<std::uint8_t>& blob); // throws FormatError
void save_weights_file(const DenseNet& net, const std::string& path);
DenseNet load_weights_file(const std::string& path);

} // namespace csisteg::nn

#endif
