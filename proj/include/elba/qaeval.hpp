#pragma once

#include <string>
#include <vector>

#include "elba/actioner.hpp"
#include "elba/nn.hpp"
#include "elba/qagen.hpp"

namespace elba {

struct QaevalConfig {
    int e_dim = 32;               // shared embedding space
    double tau_init = 0.07;       // learnable temperature, clamped >= 1e-3
    double tau_sample = 1.0;      // fixed sampling temperature
    nn::TrainConfig train;
};

struct QaevalModel {
    int e_dim = 32;
    int state_dim = 64;
    nn::MatrixXd tok_emb;       // vocab x e_dim
    nn::DenseNet qa_proj;       // e_dim -> e_dim -> e_dim
    nn::DenseNet state_proj;    // state_dim -> e_dim -> e_dim
    double tau = 0.07;
    double tau_sample = 1.0;

    std::string to_json() const;
    static QaevalModel from_json(const std::string& text);
};

QaevalModel make_qaeval(const QaevalConfig& cfg, int state_dim, uint64_t seed);

// Unit-norm embeddings of the two towers.
nn::VectorXd embed_qa(const QaevalModel& model, const QAPair& pair);
nn::VectorXd embed_state(const QaevalModel& model, const HiddenState& h);

// Normalized dot product, in [-1, 1].
double score(const QaevalModel& model, const HiddenState& h, const QAPair& pair);

struct RankResult {
    std::vector<QAPair> top_k;     // highest scores, candidate order breaks ties
    std::vector<double> top_scores;
    QAPair chosen;                 // sampled from top_k by softmax(score / tau_sample)
    int chosen_index = 0;          // index into top_k
};

RankResult rank_and_sample(const QaevalModel& model, const HiddenState& h,
                           const std::vector<QAPair>& candidates, int k, Rng& rng);

struct QaExample {
    nn::VectorXd h;  // actioner hidden state
    QAPair pair;     // positive QA for that state
};

struct ContrastiveStats {
    double final_loss = 0.0;
    long batches = 0;
};

// Symmetric in-batch contrastive training (rows and columns of the N x N
// similarity matrix, positives on the diagonal). Batches deduplicate by
// answer text so the diagonal labels stay well-posed.
void train_contrastive(QaevalModel& model, const std::vector<QaExample>& data,
                       const QaevalConfig& cfg, ContrastiveStats* stats = nullptr);

// Mean loss of one batch without updating (used by tests).
double contrastive_loss(const QaevalModel& model, const std::vector<QaExample>& batch);

// Top-1 retrieval accuracy over batches of size n with distinct answers.
double retrieval_accuracy(const QaevalModel& model, const std::vector<QaExample>& held_out,
                          int n, uint64_t seed);

// (state, current-sub-goal oracle pair) training examples from expert
// trajectories, one per step.
std::vector<QaExample> harvest_qa_examples(const std::vector<Episode>& episodes,
                                           const ActionerModel& actioner);

void save_qaeval(const QaevalModel& model, const std::string& path);
QaevalModel load_qaeval(const std::string& path);

}  // namespace elba
