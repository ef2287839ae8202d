#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "elba/qaeval.hpp"

using namespace elba;
using nn::VectorXd;

namespace {

QaevalModel fresh_model(uint64_t seed, int state_dim = 24) {
    QaevalConfig cfg;
    cfg.e_dim = 16;
    cfg.train.seed = seed;
    return make_qaeval(cfg, state_dim, seed);
}

QAPair pair_of(const std::string& q, const std::string& a) {
    QAPair p;
    p.question = q;
    p.answer = a;
    p.qa_type = QaType::Generated;
    return p;
}

std::vector<QAPair> sample_pairs(int n) {
    const std::vector<std::string> nouns = {"potato", "knife",  "mug",   "cabinet",
                                            "desk",   "stove",  "sink",  "plate",
                                            "tomato", "fridge", "shelf", "cup"};
    std::vector<QAPair> out;
    for (int i = 0; i < n; ++i) {
        const std::string& noun = nouns[static_cast<size_t>(i) % nouns.size()];
        std::string verb = i % 2 == 0 ? "pickup " : "find ";
        out.push_back(pair_of("What is current sub-goal?", verb + noun + " " + std::to_string(i)));
    }
    return out;
}

// Exhaustive argmax over k-subsets of the summed score.
std::vector<int> best_subset_oracle(const std::vector<double>& scores, int k) {
    int n = static_cast<int>(scores.size());
    double best_sum = -1e18;
    std::vector<int> best;
    std::vector<int> idx(static_cast<size_t>(k));
    std::function<void(int, int, double, std::vector<int>&)> rec =
        [&](int start, int depth, double sum, std::vector<int>& cur) {
            if (depth == k) {
                if (sum > best_sum + 1e-15) {
                    best_sum = sum;
                    best = cur;
                }
                return;
            }
            for (int i = start; i < n; ++i) {
                cur.push_back(i);
                rec(i + 1, depth + 1, sum + scores[static_cast<size_t>(i)], cur);
                cur.pop_back();
            }
        };
    std::vector<int> cur;
    rec(0, 0, 0.0, cur);
    return best;
}

}  // namespace

TEST_CASE("embed_qa / embed_state are unit-norm, pure, and total") {
    QaevalModel model = fresh_model(3);
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        QAPair p = pair_of("Where is potato?", "potato " + std::to_string(i));
        VectorXd e = embed_qa(model, p);
        CHECK(std::abs(e.norm() - 1.0) < 1e-9);
        CHECK((embed_qa(model, p) - e).norm() == 0.0);
        VectorXd h(24);
        for (int j = 0; j < 24; ++j) h(j) = rng.uniform(-2.0, 2.0);
        VectorXd s = embed_state(model, HiddenState{h});
        CHECK(std::abs(s.norm() - 1.0) < 1e-9);
    }
    // Zero hidden state still embeds (bias-driven).
    VectorXd z = embed_state(model, HiddenState{VectorXd::Zero(24)});
    CHECK(std::abs(z.norm() - 1.0) < 1e-9);
    CHECK(z.allFinite());
}

TEST_CASE("score is a bounded dot product") {
    QaevalModel model = fresh_model(5);
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        VectorXd h(24);
        for (int j = 0; j < 24; ++j) h(j) = rng.uniform(-5.0, 5.0);
        QAPair p = pair_of("What is my next step?", "find mug " + std::to_string(i % 7));
        double phi = score(model, HiddenState{h}, p);
        CHECK(phi <= 1.0 + 1e-12);
        CHECK(phi >= -1.0 - 1e-12);
        double manual = embed_state(model, HiddenState{h}).dot(embed_qa(model, p));
        CHECK(phi == doctest::Approx(manual).epsilon(1e-12));
    }
}

TEST_CASE("score is invariant to positive rescaling before normalization") {
    QaevalModel model = fresh_model(4);
    QaevalModel scaled = model;
    scaled.qa_proj.layers.back().w *= 3.5;
    scaled.qa_proj.layers.back().b *= 3.5;
    VectorXd h = VectorXd::LinSpaced(24, -1.0, 1.0);
    QAPair p = pair_of("Where is knife?", "knife");
    CHECK(score(model, HiddenState{h}, p) ==
          doctest::Approx(score(scaled, HiddenState{h}, p)).epsilon(1e-9));
}

TEST_CASE("rank_and_sample: k = |Q| reorders by score") {
    QaevalModel model = fresh_model(6);
    auto pairs = sample_pairs(6);
    VectorXd h = VectorXd::LinSpaced(24, -0.5, 0.5);
    Rng rng(1);
    RankResult res = rank_and_sample(model, HiddenState{h}, pairs, 6, rng);
    REQUIRE(res.top_k.size() == 6);
    for (size_t i = 1; i < res.top_scores.size(); ++i)
        CHECK(res.top_scores[i - 1] >= res.top_scores[i]);
    std::multiset<std::string> original, ranked;
    for (const auto& p : pairs) original.insert(p.answer);
    for (const auto& p : res.top_k) ranked.insert(p.answer);
    CHECK(original == ranked);
}

TEST_CASE("rank_and_sample: near-zero temperature picks the top pair") {
    QaevalModel model = fresh_model(7);
    model.tau_sample = 1e-9;
    auto pairs = sample_pairs(5);
    VectorXd h = VectorXd::LinSpaced(24, -1.0, 1.0);
    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        RankResult res = rank_and_sample(model, HiddenState{h}, pairs, 3, rng);
        CHECK(res.chosen_index == 0);
        CHECK(res.chosen.answer == res.top_k[0].answer);
    }
}

TEST_CASE("rank_and_sample: k larger than the candidate set uses all") {
    QaevalModel model = fresh_model(8);
    auto pairs = sample_pairs(3);
    VectorXd h = VectorXd::Zero(24);
    Rng rng(2);
    RankResult res = rank_and_sample(model, HiddenState{h}, pairs, 10, rng);
    CHECK(res.top_k.size() == 3);
}

TEST_CASE("top-k equals the exhaustive subset argmax (1000 randomized trials)") {
    Rng trial_rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        QaevalModel model = fresh_model(1000 + static_cast<uint64_t>(trial % 13));
        int n = 2 + static_cast<int>(trial_rng.below(7));  // |Q| <= 8
        int k = 1 + static_cast<int>(trial_rng.below(static_cast<uint64_t>(n)));
        auto pairs = sample_pairs(n);
        VectorXd h(24);
        for (int j = 0; j < 24; ++j) h(j) = trial_rng.uniform(-2.0, 2.0);

        std::vector<double> scores;
        for (const auto& p : pairs) scores.push_back(score(model, HiddenState{h}, p));

        Rng rng(trial_rng.next_u64());
        RankResult res = rank_and_sample(model, HiddenState{h}, pairs, k, rng);
        double got = 0.0;
        for (double s : res.top_scores) got += s;
        auto oracle_idx = best_subset_oracle(scores, k);
        double want = 0.0;
        for (int i : oracle_idx) want += scores[static_cast<size_t>(i)];
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("contrastive loss: N=1 is zero, identical embeddings give ln N") {
    QaevalModel model = fresh_model(11);
    std::vector<QaExample> one = {{VectorXd::Ones(24), pair_of("Where is mug?", "mug")}};
    CHECK(contrastive_loss(model, one) == doctest::Approx(0.0).epsilon(1e-12));

    // Same state and same pair in every slot: all embeddings equal.
    std::vector<QaExample> same(8, one[0]);
    CHECK(contrastive_loss(model, same) == doctest::Approx(std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("contrastive loss is permutation equivariant over the batch") {
    QaevalModel model = fresh_model(12);
    Rng rng(13);
    std::vector<QaExample> batch;
    auto pairs = sample_pairs(6);
    for (int i = 0; i < 6; ++i) {
        VectorXd h(24);
        for (int j = 0; j < 24; ++j) h(j) = rng.uniform(-1.0, 1.0);
        batch.push_back({h, pairs[static_cast<size_t>(i)]});
    }
    double base = contrastive_loss(model, batch);
    std::vector<QaExample> shuffled = {batch[3], batch[0], batch[5],
                                       batch[1], batch[4], batch[2]};
    CHECK(contrastive_loss(model, shuffled) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("train_contrastive: determinism and tau clamp") {
    Rng rng(21);
    std::vector<QaExample> data;
    auto pairs = sample_pairs(24);
    for (int i = 0; i < 24; ++i) {
        VectorXd h(24);
        for (int j = 0; j < 24; ++j) h(j) = rng.uniform(-1.0, 1.0);
        data.push_back({h, pairs[static_cast<size_t>(i)]});
    }
    QaevalConfig cfg;
    cfg.e_dim = 16;
    cfg.train.seed = 5;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 8;
    QaevalModel a = make_qaeval(cfg, 24, 5);
    QaevalModel b = make_qaeval(cfg, 24, 5);
    train_contrastive(a, data, cfg);
    train_contrastive(b, data, cfg);
    CHECK(a.to_json() == b.to_json());
    CHECK(a.tau >= 1e-3);
}

TEST_CASE("contrastive training reaches >50% held-out retrieval on matched pairs") {
    // Synthetic matched data: each distinct pair owns a state cluster center;
    // train and held-out examples are noisy draws from the centers.
    const int state_dim = 24;
    const int n_clusters = 36;
    Rng rng(777);
    auto pairs = sample_pairs(n_clusters);
    std::vector<VectorXd> centers;
    for (int c = 0; c < n_clusters; ++c) {
        VectorXd v(state_dim);
        for (int j = 0; j < state_dim; ++j) v(j) = rng.uniform(-1.0, 1.0);
        centers.push_back(v);
    }
    auto draw = [&](int cluster, Rng& r) {
        VectorXd v = centers[static_cast<size_t>(cluster)];
        for (int j = 0; j < state_dim; ++j) v(j) += r.uniform(-0.15, 0.15);
        return v;
    };
    std::vector<QaExample> train_data, held_out;
    for (int i = 0; i < 540; ++i) {
        int c = i % n_clusters;
        train_data.push_back({draw(c, rng), pairs[static_cast<size_t>(c)]});
    }
    Rng hrng(778);
    for (int i = 0; i < 180; ++i) {
        int c = i % n_clusters;
        held_out.push_back({draw(c, hrng), pairs[static_cast<size_t>(c)]});
    }

    QaevalConfig cfg;
    cfg.e_dim = 16;
    cfg.train.seed = 31;
    cfg.train.epochs = 20;
    cfg.train.batch_size = 16;
    cfg.train.learning_rate = 0.005;
    QaevalModel model = make_qaeval(cfg, state_dim, 31);
    double before = retrieval_accuracy(model, held_out, 16, 99);
    train_contrastive(model, train_data, cfg);
    double after = retrieval_accuracy(model, held_out, 16, 99);
    INFO("retrieval before ", before, " after ", after);
    CHECK(after > 0.5);
    CHECK(after > before);
}

TEST_CASE("pairs differing only in the answer embed differently after training") {
    QaevalModel model = fresh_model(14);
    QAPair a = pair_of("What is current sub-goal?", "pickup knife.");
    QAPair b = pair_of("What is current sub-goal?", "find potato.");
    CHECK((embed_qa(model, a) - embed_qa(model, b)).norm() > 1e-9);
}

TEST_CASE("qaeval checkpoints round-trip") {
    QaevalModel model = fresh_model(15);
    model.tau = 0.042;
    std::string text = model.to_json();
    QaevalModel back = QaevalModel::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.tau == doctest::Approx(0.042).epsilon(1e-15));
}
