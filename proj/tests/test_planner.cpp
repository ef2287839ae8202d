#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "elba/dataset.hpp"
#include "elba/planner.hpp"

using namespace elba;

namespace {

std::vector<Episode> corpus() {
    static std::vector<Episode> eps = [] {
        RunConfig cfg = RunConfig::defaults();
        cfg.set("gen.n_layouts", "5");
        cfg.set("gen.episodes_per_layout", "10");
        cfg.set("gen.hint_rate", "0.0");
        cfg.set("gen.eval_hint_rate", "0.0");
        return build_episodes(cfg);
    }();
    return eps;
}

PlannerModel trained() {
    static PlannerModel model = [] {
        PlannerConfig cfg;
        cfg.train.seed = 9;
        cfg.train.epochs = 30;
        cfg.train.learning_rate = 0.02;
        return train_planner(corpus(), cfg);
    }();
    return model;
}

std::vector<ActionKind> all_kinds() {
    std::vector<ActionKind> v;
    for (int i = 0; i < kActionKindCount; ++i) v.push_back(static_cast<ActionKind>(i));
    return v;
}

// Independent LCS oracle (recursive with memo, distinct from the DP table in
// the implementation).
int lcs_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b, size_t i,
               size_t j, std::vector<std::vector<int>>& memo) {
    if (i == a.size() || j == b.size()) return 0;
    int& m = memo[i][j];
    if (m >= 0) return m;
    if (a[i] == b[j]) return m = 1 + lcs_oracle(a, b, i + 1, j + 1, memo);
    return m = std::max(lcs_oracle(a, b, i + 1, j, memo), lcs_oracle(a, b, i, j + 1, memo));
}

double rouge_oracle(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    if (ref.empty() && hyp.empty()) return 1.0;
    if (ref.empty() || hyp.empty()) return 0.0;
    std::vector<std::vector<int>> memo(ref.size(), std::vector<int>(hyp.size(), -1));
    double lcs = lcs_oracle(ref, hyp, 0, 0, memo);
    double r = lcs / ref.size(), p = lcs / hyp.size();
    return (p + r) == 0 ? 0.0 : 2 * p * r / (p + r);
}

}  // namespace

TEST_CASE("train_planner: single-task-type corpus classifies perfectly") {
    auto all = corpus();
    std::vector<Episode> slice_only;
    for (const auto& ep : all)
        if (ep.task.type == TaskType::SliceX) slice_only.push_back(ep);
    REQUIRE(slice_only.size() >= 3);
    PlannerConfig cfg;
    cfg.train.seed = 4;
    cfg.train.epochs = 20;
    cfg.train.learning_rate = 0.02;
    PlannerModel model = train_planner(slice_only, cfg);
    for (const auto& ep : slice_only) {
        std::vector<int> tokens;
        for (const auto& u : ep.dialog) {
            auto ids = tokenize(u.text);
            tokens.insert(tokens.end(), ids.begin(), ids.end());
        }
        auto probs = classify_task(model, tokens);
        CHECK(argmax_lowest(probs) == static_cast<int>(TaskType::SliceX));
    }
}

TEST_CASE("train_planner: transition rows are smoothed distributions") {
    PlannerModel model = trained();
    for (const auto& tr : model.transitions) {
        for (int r = 0; r < tr.rows(); ++r) {
            CHECK(std::abs(tr.row(r).sum() - 1.0) < 1e-9);
            for (int c = 0; c < tr.cols(); ++c) CHECK(tr(r, c) > 0.0);
        }
    }
}

TEST_CASE("train_planner is deterministic per seed") {
    PlannerConfig cfg;
    cfg.train.seed = 21;
    cfg.train.epochs = 5;
    PlannerModel a = train_planner(corpus(), cfg);
    PlannerModel b = train_planner(corpus(), cfg);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("predict_subgoals: slice dialog starts at the knife") {
    PlannerModel model = trained();
    auto z = predict_subgoals(model, tokenize("please slice a potato"), all_kinds(), {});
    REQUIRE(!z.empty());
    CHECK(z[0].render() == "find knife");
}

TEST_CASE("predict_subgoals: completed prefix is omitted") {
    PlannerModel model = trained();
    std::vector<Action> history = {{ActionKind::Pickup, Category::Knife}};
    auto z = predict_subgoals(model, tokenize("please slice a potato"), all_kinds(), history);
    REQUIRE(!z.empty());
    CHECK(z[0].render() != "find knife");
    CHECK(z[0].render() != "pickup knife");
}

TEST_CASE("predict_subgoals: unknown dialog still returns a bounded plan") {
    PlannerModel model = trained();
    std::vector<int> junk = {kUnkToken, kUnkToken, kUnkToken};
    auto z = predict_subgoals(model, junk, all_kinds(), {});
    CHECK(z.size() <= static_cast<size_t>(kMaxPredictedSubgoals));
    for (const auto& sg : z) CHECK(SubGoal::parse(sg.render()).has_value());
}

TEST_CASE("predict_subgoals respects the action vocabulary constraint") {
    PlannerModel model = trained();
    // Without Slice in the vocabulary no slice sub-goal may appear.
    std::vector<ActionKind> no_slice;
    for (ActionKind k : all_kinds())
        if (k != ActionKind::Slice) no_slice.push_back(k);
    auto z = predict_subgoals(model, tokenize("please slice a potato"), no_slice, {});
    for (const auto& sg : z) CHECK(sg.verb != SubGoalVerb::Slice);
}

TEST_CASE("rouge_l frozen cases") {
    CHECK(rouge_l({"a", "b", "c"}, {"a", "b", "c"}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rouge_l({"a", "b"}, {"x", "y"}) == doctest::Approx(0.0).epsilon(1e-12));
    double f = rouge_l({"a", "b", "c", "d"}, {"a", "c"});
    CHECK(f == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(rouge_l({}, {}) == doctest::Approx(1.0));
    CHECK(rouge_l({"a"}, {}) == doctest::Approx(0.0));
}

TEST_CASE("rouge_l agrees with the recursive oracle on random inputs") {
    Rng rng(33);
    const std::vector<std::string> words = {"find", "potato", "knife", "pickup", "slice", "desk"};
    for (int trial = 0; trial < 200; ++trial) {
        auto draw = [&](size_t n) {
            std::vector<std::string> v;
            for (size_t i = 0; i < n; ++i) v.push_back(words[rng.below(words.size())]);
            return v;
        };
        auto ref = draw(rng.below(8));
        auto hyp = draw(rng.below(8));
        CHECK(rouge_l(ref, hyp) == doctest::Approx(rouge_oracle(ref, hyp)).epsilon(1e-12));
        // Symmetry when lengths match.
        if (ref.size() == hyp.size())
            CHECK(rouge_l(ref, hyp) == doctest::Approx(rouge_l(hyp, ref)).epsilon(1e-12));
    }
}

TEST_CASE("planner mid-episode quality gate on the validation split") {
    RunConfig cfg = RunConfig::defaults();
    cfg.set("gen.n_layouts", "6");
    cfg.set("gen.episodes_per_layout", "25");
    cfg.set("gen.hint_rate", "0.0");
    cfg.set("gen.eval_hint_rate", "0.0");
    auto episodes = build_episodes(cfg);
    auto train = episodes_of_split(episodes, Split::Train);
    auto valid = episodes_of_split(episodes, Split::Valid);
    REQUIRE(!train.empty());
    REQUIRE(!valid.empty());

    PlannerConfig pcfg;
    pcfg.train.seed = 2;
    pcfg.train.epochs = 30;
    pcfg.train.learning_rate = 0.02;
    PlannerModel model = train_planner(train, pcfg);

    std::vector<ActionKind> kinds;
    for (int i = 0; i < kActionKindCount; ++i) kinds.push_back(static_cast<ActionKind>(i));

    double total = 0.0;
    int n = 0;
    for (const auto& ep : valid) {
        int mid = std::max(1, static_cast<int>(ep.expert_actions.size()) / 2);
        std::vector<int> dialog;
        for (const auto& u : ep.dialog)
            if (u.step < mid) {
                auto ids = tokenize(u.text);
                dialog.insert(dialog.end(), ids.begin(), ids.end());
            }
        std::vector<Action> history(ep.expert_actions.begin(),
                                    ep.expert_actions.begin() + (mid - 1));
        auto z = predict_subgoals(model, dialog, kinds, history);

        // Reference: gold sub-goals from the span active at mid onward.
        std::vector<std::string> ref_tokens, hyp_tokens;
        size_t active = 0;
        for (size_t i = 0; i < ep.subgoal_spans.size(); ++i)
            if (ep.subgoal_spans[i].first <= mid - 1) active = i;
        for (size_t i = active; i < ep.subgoal_spans.size(); ++i)
            for (const auto& w : tokenize_words(ep.subgoal_spans[i].second.render()))
                ref_tokens.push_back(w);
        for (const auto& sg : z)
            for (const auto& w : tokenize_words(sg.render())) hyp_tokens.push_back(w);
        total += rouge_l(ref_tokens, hyp_tokens);
        ++n;
    }
    double mean = total / n;
    INFO("mean validation Rouge-L = ", mean, " over ", n, " episodes");
    CHECK(mean >= 0.6);
}
