// SPDX-License-Identifier: Apache-2.0
#include "csisteg/neural.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "csisteg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight serialization assumes a little-endian host");

namespace csisteg::nn {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'N', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::None: return z;
        case Activation::ReLU: return z.cwiseMax(0.0);
        case Activation::Tanh: return z.array().tanh().matrix();
    }
    throw std::invalid_argument("unknown activation tag");
}

// derivative expressed through pre-activation z and post-activation a
Eigen::ArrayXXd activation_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                                Activation act) {
    switch (act) {
        case Activation::None: return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
        case Activation::ReLU: return (z.array() > 0.0).cast<double>();
        case Activation::Tanh: return 1.0 - a.array().square();
    }
    throw std::invalid_argument("unknown activation tag");
}

void append_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    out.insert(out.end(), p, p + n);
}

template <typename T>
T read_pod(const std::vector<std::uint8_t>& blob, std::size_t& off) {
    if (off + sizeof(T) > blob.size()) throw FormatError("weight blob truncated");
    T v;
    std::memcpy(&v, blob.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

} // namespace

int DenseNet::input_dim() const {
    if (layers.empty()) throw std::invalid_argument("empty net");
    return static_cast<int>(layers.front().weight.cols());
}

int DenseNet::output_dim() const {
    if (layers.empty()) throw std::invalid_argument("empty net");
    return static_cast<int>(layers.back().weight.rows());
}

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size()) + l.bias.size();
    return n;
}

void DenseNet::validate() const {
    if (layers.empty()) throw std::invalid_argument("net has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weight.rows() == 0 || l.weight.cols() == 0)
            throw std::invalid_argument("layer " + std::to_string(i) + " has empty weight");
        if (l.bias.size() != l.weight.rows())
            throw std::invalid_argument("layer " + std::to_string(i) + " bias/weight mismatch");
        if (i > 0 && layers[i - 1].weight.rows() != l.weight.cols())
            throw std::invalid_argument("layer " + std::to_string(i) + " does not chain");
        if (!l.weight.allFinite() || !l.bias.allFinite())
            throw std::invalid_argument("layer " + std::to_string(i) + " has non-finite parameters");
    }
}

DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("make_net: need at least input and output dims");
    if (acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_net: need one activation per layer");
    for (int d : dims)
        if (d <= 0) throw std::invalid_argument("make_net: dims must be positive");

    std::mt19937_64 rng(seed);
    DenseNet net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        const int fan_in = dims[i];
        const int fan_out = dims[i + 1];
        const double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        l.weight.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) l.weight(r, c) = dist(rng);
        l.bias = Eigen::VectorXd::Zero(fan_out);
        l.act = acts[i];
        net.layers.push_back(std::move(l));
    }
    return net;
}

Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != net.input_dim())
        throw std::invalid_argument("forward: input dim " + std::to_string(inputs.rows()) +
                                    " does not match net input " + std::to_string(net.input_dim()));
    Eigen::MatrixXd a = inputs;
    for (const auto& l : net.layers) {
        Eigen::MatrixXd z = (l.weight * a).colwise() + l.bias;
        a = activate(z, l.act);
    }
    return a;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input);
}

Eigen::MatrixXd forward_trace(const DenseNet& net, const Eigen::MatrixXd& inputs,
                              ForwardTrace& trace) {
    if (inputs.rows() != net.input_dim())
        throw std::invalid_argument("forward_trace: input dim mismatch");
    trace.pre.clear();
    trace.post.clear();
    trace.pre.reserve(net.layers.size());
    trace.post.reserve(net.layers.size());
    Eigen::MatrixXd a = inputs;
    for (const auto& l : net.layers) {
        Eigen::MatrixXd z = (l.weight * a).colwise() + l.bias;
        a = activate(z, l.act);
        trace.pre.push_back(std::move(z));
        trace.post.push_back(a);
    }
    return a;
}

ParamGrads ParamGrads::zeros_like(const DenseNet& net) {
    ParamGrads g;
    for (const auto& l : net.layers) {
        g.dweight.emplace_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        g.dbias.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

void ParamGrads::accumulate(const ParamGrads& other) {
    if (dweight.size() != other.dweight.size())
        throw std::invalid_argument("gradient accumulate: layer count mismatch");
    for (std::size_t i = 0; i < dweight.size(); ++i) {
        dweight[i] += other.dweight[i];
        dbias[i] += other.dbias[i];
    }
}

bool ParamGrads::all_finite() const {
    for (const auto& w : dweight)
        if (!w.allFinite()) return false;
    for (const auto& b : dbias)
        if (!b.allFinite()) return false;
    return true;
}

ParamGrads backward(const DenseNet& net, const Eigen::MatrixXd& inputs,
                    const ForwardTrace& trace, const Eigen::MatrixXd& upstream) {
    if (trace.pre.size() != net.layers.size())
        throw std::invalid_argument("backward: trace does not match net");
    if (upstream.rows() != net.output_dim() || upstream.cols() != inputs.cols())
        throw std::invalid_argument("backward: upstream shape mismatch");

    ParamGrads grads;
    grads.dweight.resize(net.layers.size());
    grads.dbias.resize(net.layers.size());

    Eigen::MatrixXd delta = upstream;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const auto& l = net.layers[i];
        delta = (delta.array() * activation_grad(trace.pre[i], trace.post[i], l.act)).matrix();
        const Eigen::MatrixXd& below = (i == 0) ? inputs : trace.post[i - 1];
        grads.dweight[i].noalias() = delta * below.transpose();
        grads.dbias[i] = delta.rowwise().sum();
        if (i > 0)
            delta = (l.weight.transpose() * delta).eval();
        else
            grads.dinput.noalias() = l.weight.transpose() * delta;
    }
    return grads;
}

ParamGrads backward(const DenseNet& net, const Eigen::VectorXd& input,
                    const Eigen::VectorXd& upstream) {
    ForwardTrace trace;
    forward_trace(net, input, trace);
    return backward(net, Eigen::MatrixXd(input), trace, Eigen::MatrixXd(upstream));
}

OptimizerState OptimizerState::rmsprop(const DenseNet& net, double lr, int batch_size) {
    if (!(lr > 0.0)) throw std::invalid_argument("optimizer: learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("optimizer: batch size must be >= 1");
    OptimizerState s;
    s.kind = Kind::RMSProp;
    s.learning_rate = lr;
    s.batch_size = batch_size;
    for (const auto& l : net.layers) {
        s.w_sq.emplace_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        s.b_sq.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return s;
}

OptimizerState OptimizerState::adam(const DenseNet& net, double lr, int batch_size) {
    OptimizerState s = rmsprop(net, lr, batch_size);
    s.kind = Kind::Adam;
    for (const auto& l : net.layers) {
        s.w_mom.emplace_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        s.b_mom.emplace_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return s;
}

namespace {

template <typename P, typename G, typename A>
void rmsprop_update(P& param, const G& grad, A& sq, double lr, double alpha, double eps) {
    sq = alpha * sq.array() + (1.0 - alpha) * grad.array().square();
    param.array() -= lr * grad.array() / (sq.array() + eps).sqrt();
}

template <typename P, typename G, typename A>
void adam_update(P& param, const G& grad, A& mom, A& sq, double lr, double b1, double b2,
                 double eps, long t) {
    mom = b1 * mom.array() + (1.0 - b1) * grad.array();
    sq = b2 * sq.array() + (1.0 - b2) * grad.array().square();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    param.array() -= lr * (mom.array() / c1) / ((sq.array() / c2).sqrt() + eps);
}

} // namespace

void step(DenseNet& net, const ParamGrads& grads, OptimizerState& state) {
    if (grads.dweight.size() != net.layers.size())
        throw std::invalid_argument("step: gradient layer count mismatch");
    if (!grads.all_finite()) throw TrainingDivergedError("non-finite gradient in optimizer step");

    ++state.step_count;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto& l = net.layers[i];
        if (state.kind == OptimizerState::Kind::RMSProp) {
            rmsprop_update(l.weight, grads.dweight[i], state.w_sq[i], state.learning_rate,
                           state.rmsprop_alpha, state.epsilon);
            rmsprop_update(l.bias, grads.dbias[i], state.b_sq[i], state.learning_rate,
                           state.rmsprop_alpha, state.epsilon);
        } else {
            adam_update(l.weight, grads.dweight[i], state.w_mom[i], state.w_sq[i],
                        state.learning_rate, state.adam_beta1, state.adam_beta2, state.epsilon,
                        state.step_count);
            adam_update(l.bias, grads.dbias[i], state.b_mom[i], state.b_sq[i],
                        state.learning_rate, state.adam_beta1, state.adam_beta2, state.epsilon,
                        state.step_count);
        }
    }
}

std::vector<std::uint8_t> save_weights(const DenseNet& net) {
    net.validate();
    std::vector<std::uint8_t> blob;
    append_bytes(blob, kMagic, 4);
    const std::uint32_t version = kFormatVersion;
    append_bytes(blob, &version, 4);
    const std::uint32_t count = static_cast<std::uint32_t>(net.layers.size());
    append_bytes(blob, &count, 4);
    for (const auto& l : net.layers) {
        const std::uint32_t rows = static_cast<std::uint32_t>(l.weight.rows());
        const std::uint32_t cols = static_cast<std::uint32_t>(l.weight.cols());
        const std::uint32_t act = static_cast<std::uint32_t>(l.act);
        append_bytes(blob, &rows, 4);
        append_bytes(blob, &cols, 4);
        append_bytes(blob, &act, 4);
    }
    for (const auto& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                const double v = l.weight(r, c);
                append_bytes(blob, &v, 8);
            }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            const double v = l.bias(r);
            append_bytes(blob, &v, 8);
        }
    }
    return blob;
}

DenseNet load_weights(const std::vector<std::uint8_t>& blob) {
    std::size_t off = 0;
    char magic[4];
    if (blob.size() < 4) throw FormatError("weight blob too small for magic");
    std::memcpy(magic, blob.data(), 4);
    off = 4;
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad weight file magic");
    const auto version = read_pod<std::uint32_t>(blob, off);
    if (version != kFormatVersion)
        throw FormatError("unsupported weight format version " + std::to_string(version));
    const auto count = read_pod<std::uint32_t>(blob, off);
    if (count == 0 || count > 64) throw FormatError("implausible layer count");

    struct Dim {
        std::uint32_t rows, cols, act;
    };
    std::vector<Dim> dims(count);
    for (auto& d : dims) {
        d.rows = read_pod<std::uint32_t>(blob, off);
        d.cols = read_pod<std::uint32_t>(blob, off);
        d.act = read_pod<std::uint32_t>(blob, off);
        if (d.rows == 0 || d.cols == 0 || d.rows > 1u << 20 || d.cols > 1u << 20)
            throw FormatError("implausible layer dimensions");
        if (d.act > 2) throw FormatError("unknown activation tag in weight file");
    }

    DenseNet net;
    for (const auto& d : dims) {
        Layer l;
        l.weight.resize(d.rows, d.cols);
        for (std::uint32_t r = 0; r < d.rows; ++r)
            for (std::uint32_t c = 0; c < d.cols; ++c) l.weight(r, c) = read_pod<double>(blob, off);
        l.bias.resize(d.rows);
        for (std::uint32_t r = 0; r < d.rows; ++r) l.bias(r) = read_pod<double>(blob, off);
        l.act = static_cast<Activation>(d.act);
        net.layers.push_back(std::move(l));
    }
    if (off != blob.size()) throw FormatError("trailing bytes in weight blob");
    net.validate();
    return net;
}

void save_weights_file(const DenseNet& net, const std::string& path) {
    const auto blob = save_weights(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw FormatError("short write to " + path);
}

DenseNet load_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return load_weights(blob);
}

} // namespace csisteg::nn
