#include "elba/nn.hpp"

#include <cmath>
#include <functional>

#include <json.hpp>

#include "elba/error.hpp"

namespace elba::nn {

using nlohmann::json;

int DenseNet::param_count() const {
    int n = 0;
    for (const auto& l : layers) n += static_cast<int>(l.w.size() + l.b.size());
    return n;
}

DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  const Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        raise("DimensionMismatch", "make_net needs dims.size() == acts.size() + 1");
    DenseNet net;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        int fan_in = dims[i], fan_out = dims[i + 1];
        double s = std::sqrt(6.0 / (fan_in + fan_out));
        Rng layer_rng = rng.substream("init/" + std::to_string(i));
        l.w = MatrixXd(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) l.w(r, c) = layer_rng.uniform(-s, s);
        l.b = VectorXd::Zero(fan_out);
        l.act = acts[i];
        net.layers.push_back(std::move(l));
    }
    return net;
}

namespace {

VectorXd activate(const VectorXd& x, Activation act) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Tanh: return x.array().tanh();
        case Activation::Relu: return x.cwiseMax(0.0);
    }
    return x;
}

VectorXd activate_grad(const VectorXd& pre, const VectorXd& post, Activation act) {
    switch (act) {
        case Activation::Identity: return VectorXd::Ones(pre.size());
        case Activation::Tanh: return 1.0 - post.array().square();
        case Activation::Relu: return (pre.array() > 0.0).cast<double>();
    }
    return VectorXd::Ones(pre.size());
}

}  // namespace

VectorXd forward(const DenseNet& net, const VectorXd& input, ForwardCache* cache) {
    if (net.layers.empty()) raise("DimensionMismatch", "empty net");
    if (input.size() != net.input_dim())
        raise("DimensionMismatch", "input size " + std::to_string(input.size()) + " != " +
                                       std::to_string(net.input_dim()));
    if (cache) {
        cache->input = input;
        cache->pre.clear();
        cache->post.clear();
    }
    VectorXd x = input;
    for (const auto& l : net.layers) {
        VectorXd pre = l.w * x + l.b;
        VectorXd post = activate(pre, l.act);
        if (cache) {
            cache->pre.push_back(pre);
            cache->post.push_back(post);
        }
        x = std::move(post);
    }
    return x;
}

void Gradients::add_scaled(const Gradients& other, double s) {
    for (size_t i = 0; i < dw.size(); ++i) {
        dw[i] += s * other.dw[i];
        db[i] += s * other.db[i];
    }
}

void Gradients::scale(double s) {
    for (size_t i = 0; i < dw.size(); ++i) {
        dw[i] *= s;
        db[i] *= s;
    }
}

double Gradients::squared_norm() const {
    double n = 0.0;
    for (size_t i = 0; i < dw.size(); ++i) n += dw[i].squaredNorm() + db[i].squaredNorm();
    return n;
}

Gradients zero_gradients(const DenseNet& net) {
    Gradients g;
    for (const auto& l : net.layers) {
        g.dw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
        g.db.emplace_back(VectorXd::Zero(l.b.size()));
    }
    return g;
}

VectorXd backward(const DenseNet& net, const ForwardCache& cache, const VectorXd& output_grad,
                  Gradients* accum) {
    if (cache.pre.size() != net.layers.size())
        raise("DimensionMismatch", "cache does not match net");
    if (output_grad.size() != net.output_dim())
        raise("DimensionMismatch", "output_grad size mismatch");
    VectorXd delta = output_grad;
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const Layer& l = net.layers[static_cast<size_t>(i)];
        VectorXd dpre =
            delta.cwiseProduct(activate_grad(cache.pre[static_cast<size_t>(i)],
                                             cache.post[static_cast<size_t>(i)], l.act));
        const VectorXd& layer_in =
            i == 0 ? cache.input : cache.post[static_cast<size_t>(i - 1)];
        if (accum) {
            accum->dw[static_cast<size_t>(i)].noalias() += dpre * layer_in.transpose();
            accum->db[static_cast<size_t>(i)] += dpre;
        }
        delta = l.w.transpose() * dpre;
    }
    return delta;
}

VectorXd softmax(const VectorXd& logits) {
    double m = logits.maxCoeff();
    VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

SoftmaxCE softmax_ce(const VectorXd& logits, int label) {
    if (label < 0 || label >= logits.size())
        raise("IndexOutOfRange", "label " + std::to_string(label) + " out of range");
    SoftmaxCE out;
    out.probs = softmax(logits);
    out.loss = -std::log(std::max(out.probs(label), 1e-300));
    out.logit_grad = out.probs;
    out.logit_grad(label) -= 1.0;
    return out;
}

AdamState make_adam_state(const DenseNet& net) {
    AdamState s;
    for (const auto& l : net.layers) {
        s.mw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
        s.vw.emplace_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
        s.mb.emplace_back(VectorXd::Zero(l.b.size()));
        s.vb.emplace_back(VectorXd::Zero(l.b.size()));
    }
    return s;
}

void apply_update(DenseNet& net, Gradients& grads, const TrainConfig& cfg, AdamState* adam) {
    if (cfg.grad_clip > 0.0) {
        double norm = std::sqrt(grads.squared_norm());
        if (norm > cfg.grad_clip) grads.scale(cfg.grad_clip / norm);
    }
    if (cfg.optimizer == Optimizer::Sgd) {
        for (size_t i = 0; i < net.layers.size(); ++i) {
            net.layers[i].w -= cfg.learning_rate * grads.dw[i];
            net.layers[i].b -= cfg.learning_rate * grads.db[i];
        }
        return;
    }
    if (!adam) raise("DimensionMismatch", "adam optimizer needs state");
    adam->t += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam->t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam->t));
    for (size_t i = 0; i < net.layers.size(); ++i) {
        adam->mw[i] = cfg.beta1 * adam->mw[i] + (1.0 - cfg.beta1) * grads.dw[i];
        adam->vw[i] = cfg.beta2 * adam->vw[i] + (1.0 - cfg.beta2) * grads.dw[i].array().square().matrix();
        adam->mb[i] = cfg.beta1 * adam->mb[i] + (1.0 - cfg.beta1) * grads.db[i];
        adam->vb[i] = cfg.beta2 * adam->vb[i] + (1.0 - cfg.beta2) * grads.db[i].array().square().matrix();
        net.layers[i].w.array() -= cfg.learning_rate * (adam->mw[i].array() / bc1) /
                                   ((adam->vw[i].array() / bc2).sqrt() + cfg.eps_opt);
        net.layers[i].b.array() -= cfg.learning_rate * (adam->mb[i].array() / bc1) /
                                   ((adam->vb[i].array() / bc2).sqrt() + cfg.eps_opt);
    }
}

void AdamMatrix::update(MatrixXd& param, const MatrixXd& grad, const TrainConfig& cfg, long t) {
    if (cfg.optimizer == Optimizer::Sgd) {
        param -= cfg.learning_rate * grad;
        return;
    }
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.array().square().matrix();
    param.array() -=
        cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps_opt);
}

double train_step(DenseNet& net,
                  const std::vector<VectorXd>& batch_inputs,
                  const std::function<VectorXd(size_t, const VectorXd&, double*)>& loss_grad,
                  const TrainConfig& cfg, AdamState* adam) {
    if (batch_inputs.empty()) raise("DimensionMismatch", "empty batch");
    Gradients grads = zero_gradients(net);
    double total_loss = 0.0;
    for (size_t i = 0; i < batch_inputs.size(); ++i) {
        ForwardCache cache;
        VectorXd out = forward(net, batch_inputs[i], &cache);
        double loss = 0.0;
        VectorXd dy = loss_grad(i, out, &loss);
        if (!std::isfinite(loss)) raise("NonFiniteLoss", "loss is not finite");
        total_loss += loss;
        backward(net, cache, dy, &grads);
    }
    grads.scale(1.0 / static_cast<double>(batch_inputs.size()));
    apply_update(net, grads, cfg, adam);
    return total_loss / static_cast<double>(batch_inputs.size());
}

namespace {

json layer_to_json(const Layer& l) {
    json j;
    j["rows"] = l.w.rows();
    j["cols"] = l.w.cols();
    j["act"] = static_cast<int>(l.act);
    std::vector<double> w(static_cast<size_t>(l.w.size()));
    for (int r = 0; r < l.w.rows(); ++r)
        for (int c = 0; c < l.w.cols(); ++c)
            w[static_cast<size_t>(r) * l.w.cols() + c] = l.w(r, c);
    j["w"] = w;
    std::vector<double> b(l.b.data(), l.b.data() + l.b.size());
    j["b"] = b;
    return j;
}

Layer layer_from_json(const json& j) {
    Layer l;
    long rows = j.at("rows").get<long>();
    long cols = j.at("cols").get<long>();
    l.act = static_cast<Activation>(j.at("act").get<int>());
    auto w = j.at("w").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (static_cast<long>(w.size()) != rows * cols || static_cast<long>(b.size()) != rows)
        raise("BadCheckpoint", "layer shape mismatch");
    l.w = MatrixXd(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) l.w(r, c) = w[static_cast<size_t>(r) * cols + c];
    l.b = Eigen::Map<VectorXd>(b.data(), rows);
    return l;
}

}  // namespace

std::string net_to_json(const DenseNet& net) {
    json j;
    j["format"] = "elba-net-v1";
    json layers = json::array();
    for (const auto& l : net.layers) layers.push_back(layer_to_json(l));
    j["layers"] = layers;
    return j.dump();
}

DenseNet net_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "elba-net-v1")
        raise("BadCheckpoint", "unknown net format");
    DenseNet net;
    for (const auto& lj : j.at("layers")) net.layers.push_back(layer_from_json(lj));
    return net;
}

std::string matrix_to_json(const MatrixXd& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> v(static_cast<size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) v[static_cast<size_t>(r) * m.cols() + c] = m(r, c);
    j["data"] = v;
    return j.dump();
}

MatrixXd matrix_from_json(const std::string& text) {
    json j = json::parse(text);
    long rows = j.at("rows").get<long>();
    long cols = j.at("cols").get<long>();
    auto v = j.at("data").get<std::vector<double>>();
    if (static_cast<long>(v.size()) != rows * cols) raise("BadCheckpoint", "matrix shape mismatch");
    MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) m(r, c) = v[static_cast<size_t>(r) * cols + c];
    return m;
}

}  // namespace elba::nn
