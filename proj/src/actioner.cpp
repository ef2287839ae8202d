#include "elba/actioner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "elba/error.hpp"

namespace elba {

using nn::MatrixXd;
using nn::VectorXd;
using nlohmann::json;

namespace {

MatrixXd init_embedding(int rows, int cols, const Rng& rng, const std::string& name) {
    Rng r = rng.substream("emb/" + name);
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = r.uniform(-0.1, 0.1);
    return m;
}

int clamp_token(int id) { return (id < 0 || id >= vocab_size()) ? kUnkToken : id; }

// Mean of embedding rows; zero vector for an empty list.
VectorXd pool_rows(const MatrixXd& emb, const std::vector<int>& ids, int d) {
    VectorXd out = VectorXd::Zero(d);
    if (ids.empty()) return out;
    for (int id : ids) out += emb.row(id).transpose();
    return out / static_cast<double>(ids.size());
}

// Weighted patch pooling: a flat mean buries the facing cell (the trigger for
// every interaction and turn) 25:1, which leaves the cloned policy unable to
// interact at all. The cell directly ahead and the held-object slots get
// boosted weight instead.
const std::vector<double>& obs_slot_weights() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kPatchSlots, 1.0);
        int facing = (1 * kPatchSide + kPatchSide / 2) * 3;  // ahead=1, lateral=0
        v[facing] = v[facing + 1] = v[facing + 2] = 8.0;
        v[kPatchSlots - 3] = v[kPatchSlots - 2] = v[kPatchSlots - 1] = 4.0;  // held
        return v;
    }();
    return w;
}

double obs_weight_total() {
    static const double total = [] {
        double t = 0.0;
        for (double w : obs_slot_weights()) t += w;
        return t;
    }();
    return total;
}

// Recency weight for the i-th newest history entry (0 = newest).
inline double recency_weight(int age) { return std::pow(0.7, age); }

}  // namespace

ActionerModel make_actioner(const ActionerConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    ActionerModel m;
    m.d = cfg.d;
    m.window = cfg.window;
    m.tok_emb = init_embedding(vocab_size(), cfg.d, rng, "tok");
    m.obs_emb = init_embedding(kObsSymbolCount, cfg.d, rng, "obs");
    m.act_emb = init_embedding(kActionKindCount, cfg.d, rng, "act");
    using A = nn::Activation;
    m.encoder = nn::make_net({3 * cfg.d, cfg.d, cfg.d}, {A::Tanh, A::Tanh},
                             rng.substream("encoder"));
    m.head_action = nn::make_net({cfg.d, cfg.head_hidden, kActionKindCount},
                                 {A::Tanh, A::Identity}, rng.substream("head_action"));
    m.head_object = nn::make_net({cfg.d, cfg.head_hidden, kObjectVocabSize},
                                 {A::Tanh, A::Identity}, rng.substream("head_object"));
    return m;
}

HiddenState encode(const ActionerModel& model, const StateInfo& state, EncodeCache* cache) {
    if (state.obs_history.size() != state.action_history.size())
        raise("DimensionMismatch", "observation/action histories differ in length");
    int d = model.d;

    std::vector<int> dial;
    dial.reserve(state.dialog_tokens.size());
    for (int id : state.dialog_tokens) dial.push_back(clamp_token(id));
    VectorXd dial_pool = pool_rows(model.tok_emb, dial, d);

    size_t w0 = state.obs_history.size() > static_cast<size_t>(model.window)
                    ? state.obs_history.size() - static_cast<size_t>(model.window)
                    : 0;
    const auto& slot_w = obs_slot_weights();
    VectorXd obs_pool = VectorXd::Zero(d);
    int obs_used = 0;
    double obs_norm = 0.0;
    for (size_t i = w0; i < state.obs_history.size(); ++i) {
        const ObsPatch& patch = state.obs_history[i];
        VectorXd pe = VectorXd::Zero(d);
        for (size_t s = 0; s < patch.size(); ++s)
            pe += slot_w[s] * model.obs_emb.row(patch[s]).transpose();
        double rw = recency_weight(static_cast<int>(state.obs_history.size() - 1 - i));
        obs_pool += (rw / obs_weight_total()) * pe;
        obs_norm += rw;
        ++obs_used;
    }
    if (obs_norm > 0.0) obs_pool /= obs_norm;

    VectorXd act_pool = VectorXd::Zero(d);
    int act_used = 0;
    double act_norm = 0.0;
    for (size_t i = w0; i < state.action_history.size(); ++i) {
        const Action& a = state.action_history[i];
        VectorXd ae = model.act_emb.row(static_cast<int>(a.kind)).transpose();
        if (a.arg) ae += model.obs_emb.row(static_cast<int>(*a.arg)).transpose();
        double rw = recency_weight(static_cast<int>(state.action_history.size() - 1 - i));
        act_pool += rw * ae;
        act_norm += rw;
        ++act_used;
    }
    if (act_norm > 0.0) act_pool /= act_norm;

    VectorXd x(3 * d);
    x << dial_pool, obs_pool, act_pool;

    HiddenState h;
    if (cache) {
        cache->state = state;
        cache->state.dialog_tokens = dial;
        cache->dial_pool = dial_pool;
        cache->obs_pool = obs_pool;
        cache->act_pool = act_pool;
        cache->obs_window_used = obs_used;
        cache->act_window_used = act_used;
        cache->obs_norm = obs_norm;
        cache->act_norm = act_norm;
        h.h = nn::forward(model.encoder, x, &cache->encoder_cache);
    } else {
        h.h = nn::forward(model.encoder, x);
    }
    return h;
}

std::pair<VectorXd, VectorXd> decode(const ActionerModel& model, const HiddenState& h) {
    if (h.h.size() != model.d) raise("DimensionMismatch", "hidden state size mismatch");
    VectorXd pa = nn::softmax(nn::forward(model.head_action, h.h));
    VectorXd po = nn::softmax(nn::forward(model.head_object, h.h));
    return {pa, po};
}

PolicyOutput predict(const ActionerModel& model, const StateInfo& state, EncodeCache* cache) {
    PolicyOutput out;
    out.h = encode(model, state, cache);
    auto [pa, po] = decode(model, out.h);
    out.p_action = std::move(pa);
    out.p_object = std::move(po);
    return out;
}

int argmax_lowest(const VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

VectorXd grad_wrt_hidden(const ActionerModel& model, const HiddenState& h, int pseudo_action,
                         int pseudo_object, bool include_object) {
    if (h.h.size() != model.d) raise("DimensionMismatch", "hidden state size mismatch");
    nn::ForwardCache ca;
    VectorXd logits_a = nn::forward(model.head_action, h.h, &ca);
    auto ce_a = nn::softmax_ce(logits_a, pseudo_action);
    VectorXd g = nn::backward(model.head_action, ca, ce_a.logit_grad);
    if (include_object) {
        nn::ForwardCache co;
        VectorXd logits_o = nn::forward(model.head_object, h.h, &co);
        auto ce_o = nn::softmax_ce(logits_o, pseudo_object);
        g += nn::backward(model.head_object, co, ce_o.logit_grad);
    }
    return g;
}

std::vector<ObsPatch> replay_observations(const Episode& ep) {
    std::vector<ObsPatch> obs;
    GridWorld w = ep.world0();
    for (const auto& a : ep.expert_actions) {
        auto [next, outcome] = step(w, a);
        w = next;
        obs.push_back(observe(w));
    }
    return obs;
}

StateInfo state_at_step(const Episode& ep, const std::vector<ObsPatch>& obs_cache, int t) {
    StateInfo s;
    for (const auto& u : ep.dialog) {
        if (u.step < t) {
            for (int id : tokenize(u.text)) s.dialog_tokens.push_back(id);
        }
    }
    for (int i = 0; i < t - 1; ++i) {
        s.obs_history.push_back(obs_cache[static_cast<size_t>(i)]);
        s.action_history.push_back(ep.expert_actions[static_cast<size_t>(i)]);
    }
    return s;
}

namespace {

// Current-sub-goal QA block, formatted exactly like the oracle template.
void append_subgoal_qa(std::vector<int>& dial, const SubGoal& sg) {
    dial.push_back(kQToken);
    for (int id : tokenize("what is current sub-goal")) dial.push_back(id);
    dial.push_back(kAToken);
    for (int id : tokenize(sg.render())) dial.push_back(id);
}

struct ActionerGrads {
    MatrixXd tok, obs, act;
    nn::Gradients enc, ha, ho;

    explicit ActionerGrads(const ActionerModel& m)
        : tok(MatrixXd::Zero(m.tok_emb.rows(), m.tok_emb.cols())),
          obs(MatrixXd::Zero(m.obs_emb.rows(), m.obs_emb.cols())),
          act(MatrixXd::Zero(m.act_emb.rows(), m.act_emb.cols())),
          enc(nn::zero_gradients(m.encoder)),
          ha(nn::zero_gradients(m.head_action)),
          ho(nn::zero_gradients(m.head_object)) {}

    double squared_norm() const {
        return tok.squaredNorm() + obs.squaredNorm() + act.squaredNorm() + enc.squared_norm() +
               ha.squared_norm() + ho.squared_norm();
    }

    void scale(double s) {
        tok *= s;
        obs *= s;
        act *= s;
        enc.scale(s);
        ha.scale(s);
        ho.scale(s);
    }
};

// Push dL/dh through the encoder and distribute onto the embedding tables.
void backprop_encoder(const ActionerModel& model, const EncodeCache& cache, const VectorXd& dh,
                      ActionerGrads& grads) {
    VectorXd dx = nn::backward(model.encoder, cache.encoder_cache, dh, &grads.enc);
    int d = model.d;
    VectorXd ddial = dx.segment(0, d);
    VectorXd dobs = dx.segment(d, d);
    VectorXd dact = dx.segment(2 * d, d);

    const StateInfo& s = cache.state;
    if (!s.dialog_tokens.empty()) {
        VectorXd per = ddial / static_cast<double>(s.dialog_tokens.size());
        for (int id : s.dialog_tokens) grads.tok.row(id) += per.transpose();
    }
    if (cache.obs_window_used > 0 && cache.obs_norm > 0.0) {
        size_t w0 = s.obs_history.size() - static_cast<size_t>(cache.obs_window_used);
        const auto& slot_w = obs_slot_weights();
        for (size_t i = w0; i < s.obs_history.size(); ++i) {
            const ObsPatch& patch = s.obs_history[i];
            double rw = recency_weight(static_cast<int>(s.obs_history.size() - 1 - i));
            VectorXd per = dobs * (rw / (obs_weight_total() * cache.obs_norm));
            for (size_t slot = 0; slot < patch.size(); ++slot)
                grads.obs.row(patch[slot]) += slot_w[slot] * per.transpose();
        }
    }
    if (cache.act_window_used > 0 && cache.act_norm > 0.0) {
        size_t w0 = s.action_history.size() - static_cast<size_t>(cache.act_window_used);
        for (size_t i = w0; i < s.action_history.size(); ++i) {
            const Action& a = s.action_history[i];
            double rw = recency_weight(static_cast<int>(s.action_history.size() - 1 - i));
            VectorXd per = dact * (rw / cache.act_norm);
            grads.act.row(static_cast<int>(a.kind)) += per.transpose();
            if (a.arg) grads.obs.row(static_cast<int>(*a.arg)) += per.transpose();
        }
    }
}

}  // namespace

ActionerModel train_bc(const std::vector<Episode>& episodes, const ActionerConfig& cfg,
                       BcStats* stats, const ActionerModel* resume) {
    if (episodes.empty()) raise("DimensionMismatch", "train_bc needs episodes");
    ActionerModel model = resume ? *resume : make_actioner(cfg, cfg.train.seed);
    Rng rng = Rng(cfg.train.seed).substream("bc");

    std::vector<std::vector<ObsPatch>> obs_caches;
    obs_caches.reserve(episodes.size());
    std::vector<std::pair<int, int>> examples;  // (episode, 1-based step)
    for (size_t e = 0; e < episodes.size(); ++e) {
        obs_caches.push_back(replay_observations(episodes[e]));
        for (int t = 1; t <= static_cast<int>(episodes[e].expert_actions.size()); ++t)
            examples.emplace_back(static_cast<int>(e), t);
    }

    nn::AdamState adam_enc = nn::make_adam_state(model.encoder);
    nn::AdamState adam_ha = nn::make_adam_state(model.head_action);
    nn::AdamState adam_ho = nn::make_adam_state(model.head_object);
    nn::AdamMatrix adam_tok(model.tok_emb), adam_obs(model.obs_emb), adam_act(model.act_emb);
    long step_count = 0;

    nn::TrainConfig unclipped = cfg.train;
    unclipped.grad_clip = -1.0;  // global clip handled here across all tables

    double last_loss = 0.0;
    long correct = 0, total = 0;
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        Rng erng = rng.substream("epoch/" + std::to_string(epoch));
        erng.shuffle(examples);
        bool last_epoch = epoch == cfg.train.epochs - 1;
        for (size_t pos = 0; pos < examples.size();
             pos += static_cast<size_t>(cfg.train.batch_size)) {
            size_t end =
                std::min(examples.size(), pos + static_cast<size_t>(cfg.train.batch_size));
            ActionerGrads grads(model);
            double batch_loss = 0.0;
            for (size_t i = pos; i < end; ++i) {
                auto [e, t] = examples[i];
                const Episode& ep = episodes[static_cast<size_t>(e)];
                StateInfo s = state_at_step(ep, obs_caches[static_cast<size_t>(e)], t);
                if (cfg.qa_augment_rate > 0.0 && erng.chance(cfg.qa_augment_rate))
                    append_subgoal_qa(s.dialog_tokens, ep.subgoal_at(t));

                EncodeCache cache;
                HiddenState h = encode(model, s, &cache);
                const Action& label = ep.expert_actions[static_cast<size_t>(t - 1)];
                nn::ForwardCache ca, co;
                VectorXd la = nn::forward(model.head_action, h.h, &ca);
                auto ce_a = nn::softmax_ce(la, static_cast<int>(label.kind));
                double loss = ce_a.loss;
                VectorXd dh = nn::backward(model.head_action, ca, ce_a.logit_grad, &grads.ha);
                if (is_interaction(label.kind) && label.arg) {
                    VectorXd lo = nn::forward(model.head_object, h.h, &co);
                    auto ce_o = nn::softmax_ce(lo, static_cast<int>(*label.arg));
                    loss += ce_o.loss;
                    dh += nn::backward(model.head_object, co, ce_o.logit_grad, &grads.ho);
                }
                if (!std::isfinite(loss)) raise("NonFiniteLoss", "behavior cloning loss not finite");
                batch_loss += loss;
                backprop_encoder(model, cache, dh, grads);
                if (last_epoch) {
                    ++total;
                    if (argmax_lowest(nn::softmax(la)) == static_cast<int>(label.kind)) ++correct;
                }
            }
            double inv = 1.0 / static_cast<double>(end - pos);
            grads.scale(inv);
            last_loss = batch_loss * inv;
            if (cfg.train.grad_clip > 0.0) {
                double norm = std::sqrt(grads.squared_norm());
                if (norm > cfg.train.grad_clip) grads.scale(cfg.train.grad_clip / norm);
            }
            ++step_count;
            nn::apply_update(model.encoder, grads.enc, unclipped, &adam_enc);
            nn::apply_update(model.head_action, grads.ha, unclipped, &adam_ha);
            nn::apply_update(model.head_object, grads.ho, unclipped, &adam_ho);
            adam_tok.update(model.tok_emb, grads.tok, unclipped, step_count);
            adam_obs.update(model.obs_emb, grads.obs, unclipped, step_count);
            adam_act.update(model.act_emb, grads.act, unclipped, step_count);
        }
    }
    if (stats) {
        stats->final_loss = last_loss;
        stats->action_accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
        stats->steps_seen = total;
    }
    return model;
}

std::string ActionerModel::to_json() const {
    json j;
    j["format"] = "elba-actioner-v1";
    j["d"] = d;
    j["window"] = window;
    j["vocab_hash"] = vocab_hash();
    j["tok_emb"] = json::parse(nn::matrix_to_json(tok_emb));
    j["obs_emb"] = json::parse(nn::matrix_to_json(obs_emb));
    j["act_emb"] = json::parse(nn::matrix_to_json(act_emb));
    j["encoder"] = json::parse(nn::net_to_json(encoder));
    j["head_action"] = json::parse(nn::net_to_json(head_action));
    j["head_object"] = json::parse(nn::net_to_json(head_object));
    return j.dump();
}

ActionerModel ActionerModel::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "elba-actioner-v1")
        raise("BadCheckpoint", "unknown actioner format");
    if (j.at("vocab_hash").get<uint64_t>() != vocab_hash())
        raise("BadCheckpoint", "vocabulary hash mismatch");
    ActionerModel m;
    m.d = j.at("d").get<int>();
    m.window = j.at("window").get<int>();
    m.tok_emb = nn::matrix_from_json(j.at("tok_emb").dump());
    m.obs_emb = nn::matrix_from_json(j.at("obs_emb").dump());
    m.act_emb = nn::matrix_from_json(j.at("act_emb").dump());
    m.encoder = nn::net_from_json(j.at("encoder").dump());
    m.head_action = nn::net_from_json(j.at("head_action").dump());
    m.head_object = nn::net_from_json(j.at("head_object").dump());
    return m;
}

std::string ActionerModel::manifest_json() const {
    json j;
    j["format"] = "elba-actioner-manifest-v1";
    j["vocab_hash"] = vocab_hash();
    j["d"] = d;
    j["window"] = window;
    json av = json::array();
    for (int i = 0; i < kActionKindCount; ++i)
        av.push_back(action_kind_id(static_cast<ActionKind>(i)));
    j["action_vocab"] = av;
    json ov = json::array();
    for (int i = 0; i < kCategoryCount; ++i) ov.push_back(category_id(static_cast<Category>(i)));
    ov.push_back("<none>");
    j["object_vocab"] = ov;
    return j.dump(2);
}

void save_actioner(const ActionerModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise("IO", "cannot write " + path);
    f << model.to_json() << "\n";
    std::ofstream mf(path + ".manifest.json", std::ios::trunc);
    if (!mf) raise("IO", "cannot write manifest for " + path);
    mf << model.manifest_json() << "\n";
}

ActionerModel load_actioner(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise("IO", "cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return ActionerModel::from_json(text);
}

}  // namespace elba
