#pragma once

#include "elba/actioner.hpp"
#include "elba/nn.hpp"

namespace elba {

enum class ConfusionMode : int { Entropy, Gradient, Fixed };
const std::string& confusion_mode_id(ConfusionMode m);
std::optional<ConfusionMode> confusion_mode_from_id(std::string_view id);

struct ConfusionConfig {
    ConfusionMode mode = ConfusionMode::Entropy;
    double entropy_action_threshold = 0.9;  // nats
    double entropy_object_threshold = 0.9;  // nats
    double grad_norm_threshold = 1.2;
    int fixed_period = 3;
    int max_questions_per_step = 1;
    bool fixed_uses_commit_check = false;
    bool grad_includes_object_always = false;
};

struct ConfusionMeasure {
    ConfusionMode mode = ConfusionMode::Entropy;
    double action_entropy = 0.0;
    double object_entropy = 0.0;
    double grad_norm = 0.0;
    bool is_interaction = false;  // argmax action is an interaction
};

// Shannon entropy in nats, 0 ln 0 := 0. Throws InvalidDistribution on
// negative mass or a sum off by more than 1e-6.
double entropy(const nn::VectorXd& p);

ConfusionMeasure measure(const ActionerModel& model, const StateInfo& state,
                         const ConfusionConfig& cfg);
// Same, reusing an existing prediction (avoids re-encoding).
ConfusionMeasure measure_output(const ActionerModel& model, const PolicyOutput& out,
                                const ConfusionConfig& cfg);

// t is the 1-based environment step (fixed mode asks when t % period == 0).
bool is_confused(const ConfusionMeasure& m, const ConfusionConfig& cfg, int t);

// Strict-decrease rule: entropy mode per the ask-commit pseudocode (argmax
// action taken from `before`); gradient mode compares norms.
bool should_commit(const ConfusionMeasure& before, const ConfusionMeasure& after,
                   const ConfusionConfig& cfg);

}  // namespace elba
