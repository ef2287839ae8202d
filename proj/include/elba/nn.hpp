#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "elba/rng.hpp"

namespace elba::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation : int { Identity, Tanh, Relu };

struct Layer {
    MatrixXd w;  // out x in
    VectorXd b;
    Activation act = Activation::Identity;
};

struct DenseNet {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows()); }
    int param_count() const;
};

// Glorot-uniform init; each layer draws from the named substream "init/<i>".
DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  const Rng& rng);

struct ForwardCache {
    VectorXd input;
    std::vector<VectorXd> pre;   // pre-activation per layer
    std::vector<VectorXd> post;  // post-activation per layer
};

VectorXd forward(const DenseNet& net, const VectorXd& input, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<MatrixXd> dw;
    std::vector<VectorXd> db;

    void add_scaled(const Gradients& other, double scale);
    void scale(double s);
    double squared_norm() const;
};

Gradients zero_gradients(const DenseNet& net);

// Accumulates parameter gradients into `accum` (when non-null) and returns
// the gradient with respect to the input.
VectorXd backward(const DenseNet& net, const ForwardCache& cache, const VectorXd& output_grad,
                  Gradients* accum = nullptr);

VectorXd softmax(const VectorXd& logits);

struct SoftmaxCE {
    VectorXd probs;
    double loss = 0.0;
    VectorXd logit_grad;  // probs - onehot(label)
};

SoftmaxCE softmax_ce(const VectorXd& logits, int label);

enum class Optimizer : int { Sgd, Adam };

struct TrainConfig {
    double learning_rate = 1e-2;
    int batch_size = 16;
    int epochs = 1;
    uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_opt = 1e-8;
    double grad_clip = 5.0;  // global l2 norm, <= 0 disables
};

struct AdamState {
    std::vector<MatrixXd> mw, vw;
    std::vector<VectorXd> mb, vb;
    long t = 0;
};

AdamState make_adam_state(const DenseNet& net);

// Clips the gradient to cfg.grad_clip and applies one optimizer step.
void apply_update(DenseNet& net, Gradients& grads, const TrainConfig& cfg, AdamState* adam);

// Adam moments for a standalone parameter matrix (embedding tables live
// outside DenseNets). Clipping, when wanted, happens before the call.
struct AdamMatrix {
    MatrixXd m, v;

    explicit AdamMatrix(const MatrixXd& shape)
        : m(MatrixXd::Zero(shape.rows(), shape.cols())),
          v(MatrixXd::Zero(shape.rows(), shape.cols())) {}

    void update(MatrixXd& param, const MatrixXd& grad, const TrainConfig& cfg, long t);
};

// One minibatch step: mean loss gradient over the batch, clip, update.
// loss_grad(index, output) must return the output-side gradient and report
// the loss. Throws NonFiniteLoss on non-finite losses.
double train_step(DenseNet& net,
                  const std::vector<VectorXd>& batch_inputs,
                  const std::function<VectorXd(size_t, const VectorXd&, double*)>& loss_grad,
                  const TrainConfig& cfg, AdamState* adam);

// ---------------------------------------------------------------------------
// Checkpoint io: versioned JSON, row-major parameters. Shared by every model
// in the project; embedding tables serialize as single-layer nets.
// ---------------------------------------------------------------------------
std::string net_to_json(const DenseNet& net);
DenseNet net_from_json(const std::string& text);

std::string matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const std::string& text);

}  // namespace elba::nn
