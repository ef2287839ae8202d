#include "elba/agent.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "elba/error.hpp"

namespace elba {

using nlohmann::json;

StateInfo augment_state(const StateInfo& s, const QAPair& qa) {
    StateInfo out = s;
    out.dialog_tokens.push_back(kQToken);
    for (int id : tokenize(qa.question)) out.dialog_tokens.push_back(id);
    out.dialog_tokens.push_back(kAToken);
    for (int id : tokenize(qa.answer)) out.dialog_tokens.push_back(id);
    return out;
}

namespace {

// Executed interaction kinds a planner completion tracker can see.
std::vector<ActionKind> full_action_vocab() {
    std::vector<ActionKind> v;
    for (int i = 0; i < kActionKindCount; ++i) v.push_back(static_cast<ActionKind>(i));
    return v;
}

Action action_from_output(const PolicyOutput& out) {
    Action a;
    a.kind = static_cast<ActionKind>(argmax_lowest(out.p_action));
    if (is_interaction(a.kind)) {
        int obj = argmax_lowest(out.p_object);
        if (obj < kCategoryCount) a.arg = static_cast<Category>(obj);
    }
    return a;
}

double goal_fraction(const GridWorld& w, const Task& task) {
    auto checks = check_goal_conditions(w, task);
    if (checks.empty()) return 0.0;
    long met = std::count(checks.begin(), checks.end(), true);
    return static_cast<double>(met) / static_cast<double>(checks.size());
}

}  // namespace

std::vector<Action> rollout_baseline(const ActionerModel& actioner, const Episode& episode,
                                     int horizon) {
    std::vector<Action> actions;
    GridWorld world = episode.world0();
    StateInfo state;
    size_t next_utterance = 0;

    for (int t = 1; t <= horizon; ++t) {
        while (next_utterance < episode.dialog.size() &&
               episode.dialog[next_utterance].step < t) {
            for (int id : tokenize(episode.dialog[next_utterance].text))
                state.dialog_tokens.push_back(id);
            ++next_utterance;
        }
        PolicyOutput out = predict(actioner, state);
        Action a = action_from_output(out);
        auto [next, outcome] = step(world, a);
        world = next;
        actions.push_back(a);
        state.obs_history.push_back(observe(world));
        state.action_history.push_back(a);
        if (a.kind == ActionKind::Stop) break;
        auto checks = check_goal_conditions(world, episode.task);
        if (std::all_of(checks.begin(), checks.end(), [](bool b) { return b; })) break;
    }
    return actions;
}

Trajectory run_episode(const ModelSet& models, const Episode& episode, const AgentConfig& cfg) {
    if (!models.actioner) raise("ModelMissing", "run_episode needs an actioner");
    if (cfg.qa_mode != QaMode::None && (!models.planner || !models.qaeval))
        raise("ModelMissing", "qa_mode requires planner and qaeval models");

    Trajectory traj;
    traj.qa_mode = cfg.qa_mode;
    traj.confusion_mode = cfg.confusion.mode;
    traj.episode_seed = episode.seed;
    traj.split = episode.split;
    traj.expert_steps = static_cast<int>(episode.expert_actions.size());

    GridWorld world = episode.world0();
    StateInfo state;
    size_t next_utterance = 0;
    Rng sample_rng = Rng(cfg.seed).substream("episode/" + std::to_string(episode.seed));
    const auto action_vocab = full_action_vocab();
    std::vector<Action> executed_interactions;

    for (int t = 1; t <= cfg.horizon; ++t) {
        while (next_utterance < episode.dialog.size() &&
               episode.dialog[next_utterance].step < t) {
            for (int id : tokenize(episode.dialog[next_utterance].text))
                state.dialog_tokens.push_back(id);
            ++next_utterance;
        }

        PolicyOutput out = predict(*models.actioner, state);
        ConfusionMeasure meas = measure_output(*models.actioner, out, cfg.confusion);

        TrajectoryStep rec;
        rec.t = t;
        rec.measure = meas;

        int commits_this_step = 0;
        while (cfg.qa_mode != QaMode::None &&
               commits_this_step < cfg.confusion.max_questions_per_step &&
               is_confused(meas, cfg.confusion, t)) {
            std::vector<SubGoal> z = predict_subgoals(*models.planner, state.dialog_tokens,
                                                      action_vocab, executed_interactions);
            CandidateConfig cand_cfg;
            cand_cfg.mode = cfg.qa_mode;
            cand_cfg.cap = cfg.candidate_cap;
            cand_cfg.malform_rate = cfg.malform_rate;
            cand_cfg.malform_seed = Rng::mix(cfg.seed, episode.seed + static_cast<uint64_t>(t));
            std::vector<QAPair> candidates =
                build_candidates(world, z, state.dialog_tokens, cand_cfg);
            if (candidates.empty()) break;

            RankResult ranked =
                rank_and_sample(*models.qaeval, out.h, candidates, cfg.k, sample_rng);
            StateInfo augmented = augment_state(state, ranked.chosen);
            PolicyOutput aug_out = predict(*models.actioner, augmented);
            ConfusionMeasure aug_meas = measure_output(*models.actioner, aug_out, cfg.confusion);

            QaAttempt attempt;
            attempt.pair = ranked.chosen;
            attempt.before = meas;
            attempt.after = aug_meas;
            attempt.augmented_argmax_action = argmax_lowest(aug_out.p_action);
            attempt.augmented_argmax_object = argmax_lowest(aug_out.p_object);

            bool commit;
            if (cfg.confusion.mode == ConfusionMode::Fixed && !cfg.confusion.fixed_uses_commit_check)
                commit = true;
            else
                commit = should_commit(meas, aug_meas, cfg.confusion);
            attempt.committed = commit;
            rec.attempts.push_back(attempt);

            if (!commit) break;
            // Adopt the augmented state and distributions; the QA text
            // persists in the dialog for all later steps.
            state = std::move(augmented);
            out = std::move(aug_out);
            meas = aug_meas;
            ++commits_this_step;
            ++traj.questions_asked;
        }

        Action a = action_from_output(out);
        auto [next, outcome] = step(world, a);
        world = next;
        rec.action = a.kind;
        rec.action_arg = a.arg;
        rec.outcome = outcome;
        traj.steps.push_back(std::move(rec));

        state.obs_history.push_back(observe(world));
        state.action_history.push_back(a);
        if (is_interaction(a.kind)) executed_interactions.push_back(a);

        if (a.kind == ActionKind::Stop) break;
        auto checks = check_goal_conditions(world, episode.task);
        if (std::all_of(checks.begin(), checks.end(), [](bool b) { return b; })) break;
    }

    traj.env_steps = static_cast<int>(traj.steps.size());
    auto checks = check_goal_conditions(world, episode.task);
    traj.success = std::all_of(checks.begin(), checks.end(), [](bool b) { return b; });
    traj.gc_fraction = goal_fraction(world, episode.task);
    return traj;
}

std::pair<double, double> question_stats(const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) raise("DimensionMismatch", "question_stats needs trajectories");
    double mean = 0.0;
    for (const auto& t : trajectories) mean += t.questions_asked;
    mean /= static_cast<double>(trajectories.size());
    double var = 0.0;
    for (const auto& t : trajectories) {
        double d = t.questions_asked - mean;
        var += d * d;
    }
    var /= static_cast<double>(trajectories.size());
    return {mean, std::sqrt(var)};
}

namespace {

json measure_to_json(const ConfusionMeasure& m) {
    return {{"mode", confusion_mode_id(m.mode)},
            {"action_entropy", m.action_entropy},
            {"object_entropy", m.object_entropy},
            {"grad_norm", m.grad_norm},
            {"is_interaction", m.is_interaction}};
}

ConfusionMeasure measure_from_json(const json& j) {
    ConfusionMeasure m;
    m.mode = *confusion_mode_from_id(j.at("mode").get<std::string>());
    m.action_entropy = j.at("action_entropy").get<double>();
    m.object_entropy = j.at("object_entropy").get<double>();
    m.grad_norm = j.at("grad_norm").get<double>();
    m.is_interaction = j.at("is_interaction").get<bool>();
    return m;
}

}  // namespace

std::string Trajectory::to_json_line() const {
    json steps_j = json::array();
    for (const auto& s : steps) {
        json sj;
        sj["t"] = s.t;
        sj["measure"] = measure_to_json(s.measure);
        if (!s.attempts.empty()) {
            json attempts_j = json::array();
            for (const auto& at : s.attempts) {
                json aj;
                aj["q"] = at.pair.question;
                aj["a"] = at.pair.answer;
                aj["type"] = qa_type_id(at.pair.qa_type);
                aj["step"] = s.t;
                aj["committed"] = at.committed;
                aj["before"] = measure_to_json(at.before);
                aj["after"] = measure_to_json(at.after);
                aj["aug_argmax_action"] = at.augmented_argmax_action;
                aj["aug_argmax_object"] = at.augmented_argmax_object;
                attempts_j.push_back(aj);
            }
            sj["attempts"] = attempts_j;
        }
        Action act{s.action, s.action_arg};
        sj["action"] = act.encode();
        sj["outcome"] = static_cast<int>(s.outcome);
        steps_j.push_back(sj);
    }
    json j;
    j["steps"] = steps_j;
    j["success"] = success;
    j["gc_fraction"] = gc_fraction;
    j["questions_asked"] = questions_asked;
    j["env_steps"] = env_steps;
    j["expert_steps"] = expert_steps;
    j["qa_mode"] = qa_mode_id(qa_mode);
    j["confusion_mode"] = confusion_mode_id(confusion_mode);
    j["episode_seed"] = episode_seed;
    j["split"] = split_tag(split);
    return j.dump();
}

Trajectory Trajectory::from_json_line(const std::string& line) {
    json j = json::parse(line);
    Trajectory t;
    t.success = j.at("success").get<bool>();
    t.gc_fraction = j.at("gc_fraction").get<double>();
    t.questions_asked = j.at("questions_asked").get<int>();
    t.env_steps = j.at("env_steps").get<int>();
    t.expert_steps = j.at("expert_steps").get<int>();
    t.qa_mode = *qa_mode_from_id(j.at("qa_mode").get<std::string>());
    t.confusion_mode = *confusion_mode_from_id(j.at("confusion_mode").get<std::string>());
    t.episode_seed = j.at("episode_seed").get<uint64_t>();
    t.split = *split_from_tag(j.at("split").get<std::string>());
    for (const auto& sj : j.at("steps")) {
        TrajectoryStep s;
        s.t = sj.at("t").get<int>();
        s.measure = measure_from_json(sj.at("measure"));
        if (sj.contains("attempts")) {
            for (const auto& aj : sj.at("attempts")) {
                QaAttempt a;
                a.pair.question = aj.at("q").get<std::string>();
                a.pair.answer = aj.at("a").get<std::string>();
                a.pair.qa_type = *qa_type_from_id(aj.at("type").get<std::string>());
                a.committed = aj.at("committed").get<bool>();
                a.before = measure_from_json(aj.at("before"));
                a.after = measure_from_json(aj.at("after"));
                a.augmented_argmax_action = aj.at("aug_argmax_action").get<int>();
                a.augmented_argmax_object = aj.at("aug_argmax_object").get<int>();
                s.attempts.push_back(a);
            }
        }
        Action act = Action::decode(sj.at("action").get<std::string>());
        s.action = act.kind;
        s.action_arg = act.arg;
        s.outcome = static_cast<StepOutcome>(sj.at("outcome").get<int>());
        t.steps.push_back(std::move(s));
    }
    return t;
}

}  // namespace elba
