#pragma once

#include <optional>
#include <string>
#include <vector>

#include "elba/actioner.hpp"
#include "elba/confusion.hpp"
#include "elba/episode.hpp"
#include "elba/planner.hpp"
#include "elba/qaeval.hpp"
#include "elba/qagen.hpp"

namespace elba {

struct AgentConfig {
    ConfusionConfig confusion;
    QaMode qa_mode = QaMode::None;
    int k = 5;                 // top-k ranking size
    int candidate_cap = 16;    // K
    int horizon = 200;
    uint64_t seed = 0;
    double malform_rate = 0.0;
};

struct ModelSet {
    const ActionerModel* actioner = nullptr;
    const PlannerModel* planner = nullptr;  // required when qa_mode != none
    const QaevalModel* qaeval = nullptr;    // required when qa_mode != none
};

struct QaAttempt {
    QAPair pair;
    bool committed = false;
    // Measures around the augmentation, for conformance replay.
    ConfusionMeasure before;
    ConfusionMeasure after;
    int augmented_argmax_action = 0;
    int augmented_argmax_object = 0;
};

struct TrajectoryStep {
    int t = 0;  // 1-based
    ConfusionMeasure measure;           // pre-question measure
    std::vector<QaAttempt> attempts;    // in order; at most one uncommitted, last
    ActionKind action = ActionKind::Stop;
    std::optional<Category> action_arg;
    StepOutcome outcome = StepOutcome::Ok;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool success = false;
    double gc_fraction = 0.0;
    int questions_asked = 0;   // committed only
    int env_steps = 0;
    int expert_steps = 0;
    QaMode qa_mode = QaMode::None;
    ConfusionMode confusion_mode = ConfusionMode::Entropy;
    uint64_t episode_seed = 0;
    Split split = Split::Train;

    std::string to_json_line() const;
    static Trajectory from_json_line(const std::string& line);
};

// Inserts "<q> question tokens <a> answer tokens" into the dialog; histories
// untouched, the input state is not modified.
StateInfo augment_state(const StateInfo& s, const QAPair& qa);

Trajectory run_episode(const ModelSet& models, const Episode& episode, const AgentConfig& cfg);

// The question-free policy loop (predict, argmax, step); kept separate from
// run_episode so baseline-equivalence checks compare two code paths.
std::vector<Action> rollout_baseline(const ActionerModel& actioner, const Episode& episode,
                                     int horizon);

// Mean and population standard deviation of committed questions per episode.
std::pair<double, double> question_stats(const std::vector<Trajectory>& trajectories);

}  // namespace elba
