#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elba/episode.hpp"
#include "elba/nn.hpp"
#include "elba/world.hpp"

namespace elba {

// State history the policy conditions on. Dialog token ids include any QA
// text asked so far; observation and action histories stay aligned.
struct StateInfo {
    std::vector<int> dialog_tokens;
    std::vector<ObsPatch> obs_history;
    std::vector<Action> action_history;
};

struct HiddenState {
    nn::VectorXd h;
};

struct PolicyOutput {
    nn::VectorXd p_action;  // over action kinds
    nn::VectorXd p_object;  // over categories + <none>
    HiddenState h;
};

constexpr int kObjectVocabSize = kCategoryCount + 1;
constexpr int kObjectNone = kCategoryCount;

struct ActionerConfig {
    int d = 64;           // hidden width
    int window = 16;      // pooled history window for observations/actions
    int head_hidden = 64;
    nn::TrainConfig train;
    double qa_augment_rate = 0.0;  // fraction of BC states given a sub-goal QA block
};

struct ActionerModel {
    int d = 64;
    int window = 16;
    nn::MatrixXd tok_emb;  // vocab x d
    nn::MatrixXd obs_emb;  // observation symbols x d
    nn::MatrixXd act_emb;  // action kinds x d
    nn::DenseNet encoder;     // 3d -> d -> d, tanh
    nn::DenseNet head_action; // d -> head_hidden -> |A|
    nn::DenseNet head_object; // d -> head_hidden -> |categories|+1

    std::string to_json() const;
    static ActionerModel from_json(const std::string& text);
    std::string manifest_json() const;
};

ActionerModel make_actioner(const ActionerConfig& cfg, uint64_t seed);

// Sufficient statistics to push a hidden-state gradient back to embeddings.
struct EncodeCache {
    StateInfo state;
    nn::VectorXd dial_pool, obs_pool, act_pool;
    nn::ForwardCache encoder_cache;
    int obs_window_used = 0;
    int act_window_used = 0;
    double obs_norm = 0.0;  // recency-weight totals for the backward pass
    double act_norm = 0.0;
};

HiddenState encode(const ActionerModel& model, const StateInfo& state,
                   EncodeCache* cache = nullptr);

std::pair<nn::VectorXd, nn::VectorXd> decode(const ActionerModel& model, const HiddenState& h);

PolicyOutput predict(const ActionerModel& model, const StateInfo& state,
                     EncodeCache* cache = nullptr);

// Lowest index wins ties.
int argmax_lowest(const nn::VectorXd& v);

// Gradient of CE(head_action, pseudo_action) [+ CE(head_object, pseudo_object)
// when include_object] with respect to h.
nn::VectorXd grad_wrt_hidden(const ActionerModel& model, const HiddenState& h,
                             int pseudo_action, int pseudo_object, bool include_object);

struct BcStats {
    double final_loss = 0.0;
    double action_accuracy = 0.0;  // over training states, last epoch
    long steps_seen = 0;
};

// Starts from `resume` when given (training continues deterministically).
ActionerModel train_bc(const std::vector<Episode>& episodes, const ActionerConfig& cfg,
                       BcStats* stats = nullptr, const ActionerModel* resume = nullptr);

// Teacher-forcing state at 1-based step t of an episode; obs_cache must hold
// the observation after each expert action (replay_observations).
StateInfo state_at_step(const Episode& ep, const std::vector<ObsPatch>& obs_cache, int t);
std::vector<ObsPatch> replay_observations(const Episode& ep);

void save_actioner(const ActionerModel& model, const std::string& path);
ActionerModel load_actioner(const std::string& path);

}  // namespace elba
