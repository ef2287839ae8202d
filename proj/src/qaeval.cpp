#include "elba/qaeval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "elba/error.hpp"

namespace elba {

using nn::MatrixXd;
using nn::VectorXd;
using nlohmann::json;

namespace {

constexpr double kTauFloor = 1e-3;

std::vector<int> qa_tokens(const QAPair& pair) {
    std::vector<int> ids = tokenize(pair.question);
    for (int id : tokenize(pair.answer)) ids.push_back(id);
    if (ids.empty()) ids.push_back(kUnkToken);
    return ids;
}

VectorXd pool_tokens(const MatrixXd& emb, const std::vector<int>& ids) {
    VectorXd out = VectorXd::Zero(emb.cols());
    for (int id : ids) {
        int safe = (id < 0 || id >= emb.rows()) ? kUnkToken : id;
        out += emb.row(safe).transpose();
    }
    return out / static_cast<double>(ids.size());
}

VectorXd normalize(const VectorXd& x, double* norm_out = nullptr) {
    double n = x.norm();
    if (norm_out) *norm_out = n;
    if (n < 1e-12) {
        // Degenerate pre-normalization vector; pin to a fixed axis.
        VectorXd e = VectorXd::Zero(x.size());
        e(0) = 1.0;
        return e;
    }
    return x / n;
}

// d(x/||x||) pullback: dx = (du - u (u . du)) / ||x||.
VectorXd normalize_backward(const VectorXd& unit, double norm, const VectorXd& du) {
    if (norm < 1e-12) return VectorXd::Zero(du.size());
    return (du - unit * unit.dot(du)) / norm;
}

struct TowerCache {
    std::vector<int> tokens;  // qa tower only
    nn::ForwardCache proj;
    VectorXd unit;
    double norm = 0.0;
};

}  // namespace

QaevalModel make_qaeval(const QaevalConfig& cfg, int state_dim, uint64_t seed) {
    Rng rng(seed);
    QaevalModel m;
    m.e_dim = cfg.e_dim;
    m.state_dim = state_dim;
    m.tau = cfg.tau_init;
    m.tau_sample = cfg.tau_sample;
    Rng emb_rng = rng.substream("emb/qa");
    m.tok_emb = MatrixXd(vocab_size(), cfg.e_dim);
    for (int i = 0; i < m.tok_emb.rows(); ++i)
        for (int j = 0; j < cfg.e_dim; ++j) m.tok_emb(i, j) = emb_rng.uniform(-0.1, 0.1);
    using A = nn::Activation;
    m.qa_proj = nn::make_net({cfg.e_dim, cfg.e_dim, cfg.e_dim}, {A::Tanh, A::Identity},
                             rng.substream("qa_proj"));
    m.state_proj = nn::make_net({state_dim, cfg.e_dim, cfg.e_dim}, {A::Tanh, A::Identity},
                                rng.substream("state_proj"));
    return m;
}

VectorXd embed_qa(const QaevalModel& model, const QAPair& pair) {
    return normalize(nn::forward(model.qa_proj, pool_tokens(model.tok_emb, qa_tokens(pair))));
}

VectorXd embed_state(const QaevalModel& model, const HiddenState& h) {
    if (h.h.size() != model.state_dim) raise("DimensionMismatch", "state dim mismatch");
    return normalize(nn::forward(model.state_proj, h.h));
}

double score(const QaevalModel& model, const HiddenState& h, const QAPair& pair) {
    return embed_state(model, h).dot(embed_qa(model, pair));
}

RankResult rank_and_sample(const QaevalModel& model, const HiddenState& h,
                           const std::vector<QAPair>& candidates, int k, Rng& rng) {
    if (candidates.empty()) raise("DimensionMismatch", "rank_and_sample needs candidates");
    if (k < 1) raise("DimensionMismatch", "k must be >= 1");

    VectorXd state_emb = embed_state(model, h);
    std::vector<double> scores(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i)
        scores[i] = state_emb.dot(embed_qa(model, candidates[i]));

    std::vector<size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RankResult res;
    size_t take = std::min(static_cast<size_t>(k), candidates.size());
    for (size_t i = 0; i < take; ++i) {
        res.top_k.push_back(candidates[order[i]]);
        res.top_scores.push_back(scores[order[i]]);
    }

    // Softmax sampling over the kept scores.
    double m = *std::max_element(res.top_scores.begin(), res.top_scores.end());
    std::vector<double> w(take);
    double total = 0.0;
    for (size_t i = 0; i < take; ++i) {
        w[i] = std::exp((res.top_scores[i] - m) / std::max(model.tau_sample, 1e-9));
        total += w[i];
    }
    double u = rng.uniform() * total;
    size_t pick = take - 1;
    double acc = 0.0;
    for (size_t i = 0; i < take; ++i) {
        acc += w[i];
        if (u < acc) {
            pick = i;
            break;
        }
    }
    res.chosen = res.top_k[pick];
    res.chosen_index = static_cast<int>(pick);
    return res;
}

double contrastive_loss(const QaevalModel& model, const std::vector<QaExample>& batch) {
    size_t n = batch.size();
    if (n == 0) raise("DimensionMismatch", "empty batch");
    MatrixXd u(n, model.e_dim), v(n, model.e_dim);
    for (size_t i = 0; i < n; ++i) {
        u.row(i) = embed_state(model, HiddenState{batch[i].h}).transpose();
        v.row(i) = embed_qa(model, batch[i].pair).transpose();
    }
    MatrixXd logits = (u * v.transpose()) / model.tau;
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        auto row = nn::softmax_ce(logits.row(static_cast<long>(i)).transpose(),
                                  static_cast<int>(i));
        auto col = nn::softmax_ce(logits.col(static_cast<long>(i)), static_cast<int>(i));
        loss += 0.5 * (row.loss + col.loss);
    }
    return loss / static_cast<double>(n);
}

namespace {

struct QaevalGrads {
    MatrixXd tok;
    nn::Gradients qa, state;
    double tau = 0.0;

    explicit QaevalGrads(const QaevalModel& m)
        : tok(MatrixXd::Zero(m.tok_emb.rows(), m.tok_emb.cols())),
          qa(nn::zero_gradients(m.qa_proj)),
          state(nn::zero_gradients(m.state_proj)) {}

    double squared_norm() const {
        return tok.squaredNorm() + qa.squared_norm() + state.squared_norm() + tau * tau;
    }
    void scale(double s) {
        tok *= s;
        qa.scale(s);
        state.scale(s);
        tau *= s;
    }
};

// Forward + backward of one symmetric contrastive batch. Returns the loss.
double contrastive_batch(QaevalModel& model, const std::vector<const QaExample*>& batch,
                         QaevalGrads& grads) {
    size_t n = batch.size();
    std::vector<TowerCache> ucache(n), vcache(n);
    MatrixXd u(n, model.e_dim), v(n, model.e_dim);
    for (size_t i = 0; i < n; ++i) {
        VectorXd raw = nn::forward(model.state_proj, batch[i]->h, &ucache[i].proj);
        ucache[i].unit = normalize(raw, &ucache[i].norm);
        u.row(i) = ucache[i].unit.transpose();

        vcache[i].tokens = qa_tokens(batch[i]->pair);
        VectorXd pooled = pool_tokens(model.tok_emb, vcache[i].tokens);
        VectorXd raw_v = nn::forward(model.qa_proj, pooled, &vcache[i].proj);
        vcache[i].unit = normalize(raw_v, &vcache[i].norm);
        v.row(i) = vcache[i].unit.transpose();
    }

    MatrixXd sim = u * v.transpose();
    MatrixXd logits = sim / model.tau;
    MatrixXd dlogits = MatrixXd::Zero(n, n);
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        auto row = nn::softmax_ce(logits.row(static_cast<long>(i)).transpose(),
                                  static_cast<int>(i));
        auto col = nn::softmax_ce(logits.col(static_cast<long>(i)), static_cast<int>(i));
        loss += 0.5 * (row.loss + col.loss);
        dlogits.row(static_cast<long>(i)) += 0.5 * row.logit_grad.transpose();
        dlogits.col(static_cast<long>(i)) += 0.5 * col.logit_grad;
    }
    loss /= static_cast<double>(n);
    dlogits /= static_cast<double>(n);
    if (!std::isfinite(loss)) raise("NonFiniteLoss", "contrastive loss not finite");

    MatrixXd dsim = dlogits / model.tau;
    grads.tau += -(dlogits.array() * sim.array()).sum() / (model.tau * model.tau);

    MatrixXd du = dsim * v;            // n x e
    MatrixXd dv = dsim.transpose() * u;
    for (size_t i = 0; i < n; ++i) {
        VectorXd draw_u = normalize_backward(ucache[i].unit, ucache[i].norm,
                                             du.row(static_cast<long>(i)).transpose());
        nn::backward(model.state_proj, ucache[i].proj, draw_u, &grads.state);

        VectorXd draw_v = normalize_backward(vcache[i].unit, vcache[i].norm,
                                             dv.row(static_cast<long>(i)).transpose());
        VectorXd dpool = nn::backward(model.qa_proj, vcache[i].proj, draw_v, &grads.qa);
        VectorXd per = dpool / static_cast<double>(vcache[i].tokens.size());
        for (int id : vcache[i].tokens) {
            int safe = (id < 0 || id >= model.tok_emb.rows()) ? kUnkToken : id;
            grads.tok.row(safe) += per.transpose();
        }
    }
    return loss;
}

}  // namespace

void train_contrastive(QaevalModel& model, const std::vector<QaExample>& data,
                       const QaevalConfig& cfg, ContrastiveStats* stats) {
    if (data.empty()) raise("DimensionMismatch", "train_contrastive needs data");
    Rng rng = Rng(cfg.train.seed).substream("contrastive");

    nn::AdamState adam_qa = nn::make_adam_state(model.qa_proj);
    nn::AdamState adam_state = nn::make_adam_state(model.state_proj);
    nn::AdamMatrix adam_tok(model.tok_emb);
    double tau_m = 0.0, tau_v = 0.0;
    long step_count = 0;
    nn::TrainConfig unclipped = cfg.train;
    unclipped.grad_clip = -1.0;

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    double last_loss = 0.0;
    long batches = 0;

    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        Rng erng = rng.substream("epoch/" + std::to_string(epoch));
        erng.shuffle(order);
        size_t pos = 0;
        while (pos < order.size()) {
            // Greedy batch with unique answer texts.
            std::vector<const QaExample*> batch;
            std::set<std::string> seen;
            while (pos < order.size() &&
                   batch.size() < static_cast<size_t>(cfg.train.batch_size)) {
                const QaExample& ex = data[order[pos]];
                ++pos;
                if (seen.insert(ex.pair.answer).second) batch.push_back(&ex);
            }
            if (batch.empty()) continue;

            QaevalGrads grads(model);
            last_loss = contrastive_batch(model, batch, grads);
            ++batches;
            if (cfg.train.grad_clip > 0.0) {
                double norm = std::sqrt(grads.squared_norm());
                if (norm > cfg.train.grad_clip) grads.scale(cfg.train.grad_clip / norm);
            }
            ++step_count;
            nn::apply_update(model.qa_proj, grads.qa, unclipped, &adam_qa);
            nn::apply_update(model.state_proj, grads.state, unclipped, &adam_state);
            adam_tok.update(model.tok_emb, grads.tok, unclipped, step_count);
            // Scalar Adam step for tau, then clamp.
            double bc1 = 1.0 - std::pow(cfg.train.beta1, static_cast<double>(step_count));
            double bc2 = 1.0 - std::pow(cfg.train.beta2, static_cast<double>(step_count));
            tau_m = cfg.train.beta1 * tau_m + (1.0 - cfg.train.beta1) * grads.tau;
            tau_v = cfg.train.beta2 * tau_v + (1.0 - cfg.train.beta2) * grads.tau * grads.tau;
            model.tau -= cfg.train.learning_rate * (tau_m / bc1) /
                         (std::sqrt(tau_v / bc2) + cfg.train.eps_opt);
            model.tau = std::max(model.tau, kTauFloor);
        }
    }
    if (stats) {
        stats->final_loss = last_loss;
        stats->batches = batches;
    }
}

double retrieval_accuracy(const QaevalModel& model, const std::vector<QaExample>& held_out,
                          int n, uint64_t seed) {
    Rng rng = Rng(seed).substream("retrieval");
    std::vector<size_t> order(held_out.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    long correct = 0, total = 0;
    size_t pos = 0;
    while (pos < order.size()) {
        std::vector<const QaExample*> batch;
        std::set<std::string> seen;
        while (pos < order.size() && batch.size() < static_cast<size_t>(n)) {
            const QaExample& ex = held_out[order[pos]];
            ++pos;
            if (seen.insert(ex.pair.answer).second) batch.push_back(&ex);
        }
        if (batch.size() < static_cast<size_t>(n)) break;  // only full batches count
        MatrixXd u(batch.size(), model.e_dim), v(batch.size(), model.e_dim);
        for (size_t i = 0; i < batch.size(); ++i) {
            u.row(i) = embed_state(model, HiddenState{batch[i]->h}).transpose();
            v.row(i) = embed_qa(model, batch[i]->pair).transpose();
        }
        MatrixXd sim = u * v.transpose();
        for (size_t i = 0; i < batch.size(); ++i) {
            long best = 0;
            sim.row(static_cast<long>(i)).maxCoeff(&best);
            if (best == static_cast<long>(i)) ++correct;
            ++total;
        }
    }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

std::vector<QaExample> harvest_qa_examples(const std::vector<Episode>& episodes,
                                           const ActionerModel& actioner) {
    std::vector<QaExample> out;
    for (const auto& ep : episodes) {
        auto obs_cache = replay_observations(ep);
        for (int t = 1; t <= static_cast<int>(ep.expert_actions.size()); ++t) {
            const SubGoal& sg = ep.subgoal_at(t);
            QaExample ex;
            ex.h = encode(actioner, state_at_step(ep, obs_cache, t)).h;
            ex.pair.qa_type = QaType::CurrentSubgoal;
            ex.pair.answer_source = AnswerSource::PlannerSubgoal;
            ex.pair.question = "What is current sub-goal?";
            ex.pair.answer = sg.render() + ".";
            out.push_back(std::move(ex));
        }
    }
    return out;
}

std::string QaevalModel::to_json() const {
    json j;
    j["format"] = "elba-qaeval-v1";
    j["e_dim"] = e_dim;
    j["state_dim"] = state_dim;
    j["tau"] = tau;
    j["tau_sample"] = tau_sample;
    j["vocab_hash"] = vocab_hash();
    j["tok_emb"] = json::parse(nn::matrix_to_json(tok_emb));
    j["qa_proj"] = json::parse(nn::net_to_json(qa_proj));
    j["state_proj"] = json::parse(nn::net_to_json(state_proj));
    return j.dump();
}

QaevalModel QaevalModel::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "elba-qaeval-v1")
        raise("BadCheckpoint", "unknown qaeval format");
    if (j.at("vocab_hash").get<uint64_t>() != vocab_hash())
        raise("BadCheckpoint", "vocabulary hash mismatch");
    QaevalModel m;
    m.e_dim = j.at("e_dim").get<int>();
    m.state_dim = j.at("state_dim").get<int>();
    m.tau = j.at("tau").get<double>();
    m.tau_sample = j.at("tau_sample").get<double>();
    m.tok_emb = nn::matrix_from_json(j.at("tok_emb").dump());
    m.qa_proj = nn::net_from_json(j.at("qa_proj").dump());
    m.state_proj = nn::net_from_json(j.at("state_proj").dump());
    return m;
}

void save_qaeval(const QaevalModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise("IO", "cannot write " + path);
    f << model.to_json() << "\n";
}

QaevalModel load_qaeval(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise("IO", "cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return QaevalModel::from_json(text);
}

}  // namespace elba
