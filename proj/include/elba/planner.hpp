#pragma once

#include <string>
#include <vector>

#include "elba/episode.hpp"
#include "elba/nn.hpp"
#include "elba/task.hpp"

namespace elba {

struct PlannerConfig {
    int emb_dim = 32;
    nn::TrainConfig train;
};

// Task-type classifier over pooled dialog tokens plus per-task-type
// next-sub-goal transition tables (add-one smoothed empirical counts).
struct PlannerModel {
    int emb_dim = 32;
    nn::MatrixXd tok_emb;
    nn::DenseNet classifier;                // emb_dim -> emb_dim -> task types
    std::vector<SubGoal> subgoal_list;      // global sub-goal index
    // Rows: 0 = start, 1..S = sub-goal; cols: 0..S-1 = sub-goal, S = end.
    std::vector<nn::MatrixXd> transitions;  // one per task type

    std::string to_json() const;
    static PlannerModel from_json(const std::string& text);
};

PlannerModel train_planner(const std::vector<Episode>& episodes, const PlannerConfig& cfg,
                           const PlannerModel* resume = nullptr);

// Classifier probabilities over task types (uniform when the dialog has no
// known tokens).
nn::VectorXd classify_task(const PlannerModel& model, const std::vector<int>& dialog_tokens);

// Greedy transition rollout from the first not-yet-completed sub-goal, at
// most 12 entries. action_vocab constrains which sub-goal verbs are allowed.
std::vector<SubGoal> predict_subgoals(const PlannerModel& model,
                                      const std::vector<int>& dialog_tokens,
                                      const std::vector<ActionKind>& action_vocab,
                                      const std::vector<Action>& history_actions);

constexpr int kMaxPredictedSubgoals = 12;

// Rouge-L F-measure over token sequences; empty vs empty is 1.
double rouge_l(const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis);

void save_planner(const PlannerModel& model, const std::string& path);
PlannerModel load_planner(const std::string& path);

}  // namespace elba
