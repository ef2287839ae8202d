#include "elba/planner.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "elba/actioner.hpp"
#include "elba/error.hpp"

namespace elba {

using nn::MatrixXd;
using nn::VectorXd;
using nlohmann::json;

namespace {

VectorXd pool_dialog(const MatrixXd& emb, const std::vector<int>& tokens) {
    VectorXd out = VectorXd::Zero(emb.cols());
    int known = 0;
    for (int id : tokens) {
        if (id <= kUnkToken || id >= static_cast<int>(emb.rows())) continue;
        out += emb.row(id).transpose();
        ++known;
    }
    if (known > 0) out /= static_cast<double>(known);
    return out;
}

bool dialog_known(const std::vector<int>& tokens) {
    return std::any_of(tokens.begin(), tokens.end(),
                       [](int id) { return id > kUnkToken && id < vocab_size(); });
}

// The heuristic completion tracker: a sub-goal counts as executed when its
// verb/noun pair matches an interaction the agent already performed. Find
// sub-goals never match (the paper's ill-timed-question failure source).
bool subgoal_matches_action(const SubGoal& sg, const Action& a) {
    switch (sg.verb) {
        case SubGoalVerb::Pickup:
            return a.kind == ActionKind::Pickup && a.arg == sg.noun1;
        case SubGoalVerb::Place:
            return a.kind == ActionKind::Place && sg.noun2 && a.arg == *sg.noun2;
        case SubGoalVerb::Slice:
            return a.kind == ActionKind::Slice && a.arg == sg.noun1;
        case SubGoalVerb::Open:
            return a.kind == ActionKind::Open && a.arg == sg.noun1;
        case SubGoalVerb::Close:
            return a.kind == ActionKind::Close && a.arg == sg.noun1;
        case SubGoalVerb::ToggleOn:
            return a.kind == ActionKind::ToggleOn && a.arg == sg.noun1;
        case SubGoalVerb::Find:
        case SubGoalVerb::Boil:
            return false;
    }
    return false;
}

ActionKind required_kind(SubGoalVerb verb) {
    switch (verb) {
        case SubGoalVerb::Find: return ActionKind::Forward;
        case SubGoalVerb::Pickup: return ActionKind::Pickup;
        case SubGoalVerb::Place: return ActionKind::Place;
        case SubGoalVerb::Slice: return ActionKind::Slice;
        case SubGoalVerb::Boil: return ActionKind::Place;
        case SubGoalVerb::Open: return ActionKind::Open;
        case SubGoalVerb::Close: return ActionKind::Close;
        case SubGoalVerb::ToggleOn: return ActionKind::ToggleOn;
    }
    return ActionKind::Forward;
}

}  // namespace

PlannerModel train_planner(const std::vector<Episode>& episodes, const PlannerConfig& cfg,
                           const PlannerModel* resume) {
    if (episodes.empty()) raise("DimensionMismatch", "train_planner needs episodes");

    PlannerModel model;
    model.emb_dim = cfg.emb_dim;
    Rng rng(cfg.train.seed);
    if (resume) {
        model.tok_emb = resume->tok_emb;
        model.classifier = resume->classifier;
    } else {
        Rng emb_rng = rng.substream("emb/planner");
        model.tok_emb = MatrixXd(vocab_size(), cfg.emb_dim);
        for (int i = 0; i < model.tok_emb.rows(); ++i)
            for (int j = 0; j < cfg.emb_dim; ++j) model.tok_emb(i, j) = emb_rng.uniform(-0.1, 0.1);
        model.classifier = nn::make_net({cfg.emb_dim, cfg.emb_dim, kTaskTypeCount},
                                        {nn::Activation::Tanh, nn::Activation::Identity},
                                        rng.substream("classifier"));
    }

    // Global sub-goal index, sorted by render for a stable order.
    std::map<std::string, SubGoal> seen;
    for (const auto& ep : episodes)
        for (const auto& sg : ep.task.gold_subgoals) seen.emplace(sg.render(), sg);
    for (const auto& [key, sg] : seen) model.subgoal_list.push_back(sg);

    auto index_of = [&](const SubGoal& sg) {
        std::string key = sg.render();
        for (size_t i = 0; i < model.subgoal_list.size(); ++i)
            if (model.subgoal_list[i].render() == key) return static_cast<int>(i);
        return -1;
    };

    // Add-one smoothed transition counts per task type.
    int s = static_cast<int>(model.subgoal_list.size());
    for (int tt = 0; tt < kTaskTypeCount; ++tt)
        model.transitions.emplace_back(MatrixXd::Ones(s + 1, s + 1));
    for (const auto& ep : episodes) {
        MatrixXd& tr = model.transitions[static_cast<size_t>(ep.task.type)];
        int prev = -1;  // start row
        for (const auto& sg : ep.task.gold_subgoals) {
            int cur = index_of(sg);
            tr(prev + 1, cur) += 1.0;
            prev = cur;
        }
        if (prev >= 0) tr(prev + 1, s) += 1.0;  // end column
    }
    for (auto& tr : model.transitions)
        for (int r = 0; r < tr.rows(); ++r) tr.row(r) /= tr.row(r).sum();

    // Classifier training: pooled dialog -> task type. Embeddings stay fixed;
    // the closed template grammar makes the pooled features separable as-is.
    std::vector<VectorXd> inputs;
    std::vector<int> labels;
    for (const auto& ep : episodes) {
        std::vector<int> tokens;
        for (const auto& u : ep.dialog)
            if (u.step == 0)
                for (int id : tokenize(u.text)) tokens.push_back(id);
        inputs.push_back(pool_dialog(model.tok_emb, tokens));
        labels.push_back(static_cast<int>(ep.task.type));
    }
    nn::AdamState adam = nn::make_adam_state(model.classifier);
    std::vector<size_t> order(inputs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = rng.substream("classifier/shuffle");
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.train.batch_size)) {
            size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.train.batch_size));
            std::vector<VectorXd> batch;
            std::vector<int> batch_labels;
            for (size_t i = pos; i < end; ++i) {
                batch.push_back(inputs[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            nn::train_step(
                model.classifier, batch,
                [&](size_t i, const VectorXd& out, double* loss) {
                    auto ce = nn::softmax_ce(out, batch_labels[i]);
                    *loss = ce.loss;
                    return ce.logit_grad;
                },
                cfg.train, &adam);
        }
    }
    return model;
}

VectorXd classify_task(const PlannerModel& model, const std::vector<int>& dialog_tokens) {
    if (!dialog_known(dialog_tokens))
        return VectorXd::Constant(kTaskTypeCount, 1.0 / kTaskTypeCount);
    return nn::softmax(nn::forward(model.classifier, pool_dialog(model.tok_emb, dialog_tokens)));
}

std::vector<SubGoal> predict_subgoals(const PlannerModel& model,
                                      const std::vector<int>& dialog_tokens,
                                      const std::vector<ActionKind>& action_vocab,
                                      const std::vector<Action>& history_actions) {
    std::vector<SubGoal> out;
    if (model.subgoal_list.empty()) return out;

    int task_type = argmax_lowest(classify_task(model, dialog_tokens));
    const MatrixXd& tr = model.transitions[static_cast<size_t>(task_type)];
    int s = static_cast<int>(model.subgoal_list.size());

    auto verb_allowed = [&](const SubGoal& sg) {
        if (action_vocab.empty()) return true;
        ActionKind need = required_kind(sg.verb);
        return std::find(action_vocab.begin(), action_vocab.end(), need) != action_vocab.end();
    };
    auto next_from = [&](int row) {
        int best = -1;
        double best_p = -1.0;
        for (int c = 0; c <= s; ++c) {
            if (c < s && !verb_allowed(model.subgoal_list[static_cast<size_t>(c)])) continue;
            if (tr(row, c) > best_p) {
                best_p = tr(row, c);
                best = c;
            }
        }
        return best;
    };

    // Walk the argmax chain, then drop the prefix up to the last sub-goal the
    // action history already completed.
    std::vector<int> chain;
    int cur = next_from(0);
    int guard = 2 * kMaxPredictedSubgoals;
    while (cur >= 0 && cur < s && static_cast<int>(chain.size()) < guard) {
        chain.push_back(cur);
        cur = next_from(cur + 1);
    }
    int done_until = -1;
    for (size_t i = 0; i < chain.size(); ++i) {
        const SubGoal& sg = model.subgoal_list[static_cast<size_t>(chain[i])];
        for (const auto& a : history_actions) {
            if (subgoal_matches_action(sg, a)) {
                done_until = static_cast<int>(i);
                break;
            }
        }
    }
    for (size_t i = static_cast<size_t>(done_until + 1); i < chain.size(); ++i) {
        out.push_back(model.subgoal_list[static_cast<size_t>(chain[i])]);
        if (static_cast<int>(out.size()) >= kMaxPredictedSubgoals) break;
    }
    return out;
}

double rouge_l(const std::vector<std::string>& reference,
               const std::vector<std::string>& hypothesis) {
    size_t n = reference.size(), m = hypothesis.size();
    if (n == 0 && m == 0) return 1.0;
    if (n == 0 || m == 0) return 0.0;
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (size_t i = 1; i <= n; ++i)
        for (size_t j = 1; j <= m; ++j)
            dp[i][j] = reference[i - 1] == hypothesis[j - 1]
                           ? dp[i - 1][j - 1] + 1
                           : std::max(dp[i - 1][j], dp[i][j - 1]);
    double lcs = dp[n][m];
    double recall = lcs / static_cast<double>(n);
    double precision = lcs / static_cast<double>(m);
    if (recall + precision == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::string PlannerModel::to_json() const {
    json j;
    j["format"] = "elba-planner-v1";
    j["emb_dim"] = emb_dim;
    j["vocab_hash"] = vocab_hash();
    j["tok_emb"] = json::parse(nn::matrix_to_json(tok_emb));
    j["classifier"] = json::parse(nn::net_to_json(classifier));
    json sgs = json::array();
    for (const auto& sg : subgoal_list) sgs.push_back(sg.render());
    j["subgoals"] = sgs;
    json trs = json::array();
    for (const auto& tr : transitions) trs.push_back(json::parse(nn::matrix_to_json(tr)));
    j["transitions"] = trs;
    return j.dump();
}

PlannerModel PlannerModel::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "elba-planner-v1")
        raise("BadCheckpoint", "unknown planner format");
    if (j.at("vocab_hash").get<uint64_t>() != vocab_hash())
        raise("BadCheckpoint", "vocabulary hash mismatch");
    PlannerModel m;
    m.emb_dim = j.at("emb_dim").get<int>();
    m.tok_emb = nn::matrix_from_json(j.at("tok_emb").dump());
    m.classifier = nn::net_from_json(j.at("classifier").dump());
    for (const auto& s : j.at("subgoals")) {
        auto sg = SubGoal::parse(s.get<std::string>());
        if (!sg) raise("BadCheckpoint", "bad sub-goal in planner checkpoint");
        m.subgoal_list.push_back(*sg);
    }
    for (const auto& tr : j.at("transitions"))
        m.transitions.push_back(nn::matrix_from_json(tr.dump()));
    return m;
}

void save_planner(const PlannerModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise("IO", "cannot write " + path);
    f << model.to_json() << "\n";
}

PlannerModel load_planner(const std::string& path) {
    std::ifstream f(path);
    if (!f) raise("IO", "cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return PlannerModel::from_json(text);
}

}  // namespace elba
