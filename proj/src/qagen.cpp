#include "elba/qagen.hpp"

#include <algorithm>
#include <array>

#include "elba/error.hpp"
#include "elba/rng.hpp"

namespace elba {

namespace {

const std::array<std::string, 6> kQaTypeIds = {"Location",       "Appearance", "Direction",
                                               "CurrentSubgoal", "NextSubgoal", "Generated"};
const std::array<std::string, 4> kQaModeIds = {"none", "oracle", "generated", "combined"};

std::string capitalized(Category c) { return category_id(c); }

uint64_t stream_hash(const std::vector<int>& dialog_tokens, const std::string& answer) {
    std::string repr;
    for (int id : dialog_tokens) repr += std::to_string(id) + ",";
    repr += "|" + answer;
    return Rng::hash_name(repr);
}

}  // namespace

const std::string& qa_type_id(QaType t) { return kQaTypeIds[static_cast<size_t>(t)]; }

std::optional<QaType> qa_type_from_id(std::string_view id) {
    for (int i = 0; i < 6; ++i)
        if (kQaTypeIds[static_cast<size_t>(i)] == id) return static_cast<QaType>(i);
    return std::nullopt;
}

const std::string& qa_mode_id(QaMode m) { return kQaModeIds[static_cast<size_t>(m)]; }

std::optional<QaMode> qa_mode_from_id(std::string_view id) {
    for (int i = 0; i < 4; ++i)
        if (kQaModeIds[static_cast<size_t>(i)] == id) return static_cast<QaMode>(i);
    return std::nullopt;
}

std::vector<QAPair> oracle_qas(const GridWorld& world, const std::vector<SubGoal>& z) {
    std::vector<QAPair> out;
    if (z.empty()) return out;

    std::vector<Category> cats{z[0].noun1};
    if (z[0].noun2 && *z[0].noun2 != z[0].noun1) cats.push_back(*z[0].noun2);

    for (Category c : cats) {
        try {
            LocationFacts facts = oracle_location(world, c);
            QAPair p;
            p.qa_type = QaType::Location;
            p.answer_source = AnswerSource::OracleFact;
            p.question = "Where is " + capitalized(c) + "?";
            p.answer = "The " + capitalized(c) + " is to your " + direction_word(facts.direction) +
                       " in/on the " + facts.container + ".";
            out.push_back(std::move(p));
        } catch (const Error& e) {
            if (e.code() != "NoSuchObject") throw;
        }
    }
    for (Category c : cats) {
        try {
            AppearanceFacts facts = oracle_appearance(world, c);
            QAPair p;
            p.qa_type = QaType::Appearance;
            p.answer_source = AnswerSource::OracleFact;
            p.question = "What does " + capitalized(c) + " look like?";
            p.answer = "The " + capitalized(c) + " is " + color_word(facts.color) +
                       " and made of " + material_word(facts.material) + ".";
            out.push_back(std::move(p));
        } catch (const Error& e) {
            if (e.code() != "NoSuchObject") throw;
        }
    }
    for (Category c : cats) {
        try {
            TurnHint hint = oracle_direction(world, c);
            QAPair p;
            p.qa_type = QaType::Direction;
            p.answer_source = AnswerSource::OracleFact;
            p.question = "Which direction should I turn to?";
            switch (hint) {
                case TurnHint::Left: p.answer = "You should turn left."; break;
                case TurnHint::Right: p.answer = "You should turn right."; break;
                case TurnHint::None: p.answer = "You don't need to move."; break;
            }
            out.push_back(std::move(p));
        } catch (const Error& e) {
            if (e.code() != "NoSuchObject" && e.code() != "NoPath") throw;
        }
    }

    QAPair cur;
    cur.qa_type = QaType::CurrentSubgoal;
    cur.answer_source = AnswerSource::PlannerSubgoal;
    cur.question = "What is current sub-goal?";
    cur.answer = z[0].render() + ".";
    out.push_back(std::move(cur));
    if (z.size() > 1) {
        QAPair nxt;
        nxt.qa_type = QaType::NextSubgoal;
        nxt.answer_source = AnswerSource::PlannerSubgoal;
        nxt.question = "What is next sub-goal?";
        nxt.answer = z[1].render() + ".";
        out.push_back(std::move(nxt));
    }
    return out;
}

std::vector<AnswerCandidate> extract_answers(const std::vector<SubGoal>& z) {
    std::vector<AnswerCandidate> out;
    auto push = [&](const std::string& text, int origin, bool phrase) {
        for (const auto& c : out)
            if (c.text == text) return;
        out.push_back({text, origin, phrase});
    };
    for (size_t i = 0; i < z.size(); ++i) {
        std::string phrase = z[i].render();
        for (Category c : extract_categories(tokenize_words(phrase)))
            push(category_word(c), static_cast<int>(i), false);
        push(phrase, static_cast<int>(i), true);
    }
    return out;
}

std::string generate_question(const std::vector<int>& dialog_tokens,
                              const AnswerCandidate& answer) {
    if (answer.text.empty()) raise("BadAnswer", "empty answer candidate");
    bool alt = stream_hash(dialog_tokens, answer.text) & 1;
    if (!answer.is_phrase) {
        return alt ? "What should I do with " + answer.text + "?"
                   : "Where is " + answer.text + "?";
    }
    return alt ? "What should I do now?" : "What is my next step?";
}

std::vector<QAPair> build_candidates(const GridWorld& world, const std::vector<SubGoal>& z,
                                     const std::vector<int>& dialog_tokens,
                                     const CandidateConfig& cfg) {
    std::vector<QAPair> out;
    if (cfg.mode == QaMode::None) return out;

    if (cfg.mode == QaMode::Oracle || cfg.mode == QaMode::Combined)
        out = oracle_qas(world, z);

    if (cfg.mode == QaMode::Generated || cfg.mode == QaMode::Combined) {
        auto candidates = extract_answers(z);
        Rng malform_rng = Rng(cfg.malform_seed).substream("malform");
        for (size_t i = 0; i < candidates.size(); ++i) {
            const auto& cand = candidates[i];
            QAPair p;
            p.qa_type = QaType::Generated;
            p.answer_source =
                cand.is_phrase ? AnswerSource::ExtractedPhrase : AnswerSource::ExtractedNoun;
            // malform_rate swaps in a question built for a different answer,
            // reproducing mismatched question/answer pairings.
            const AnswerCandidate* q_source = &cand;
            if (cfg.malform_rate > 0.0 && candidates.size() > 1 &&
                malform_rng.chance(cfg.malform_rate)) {
                size_t other = malform_rng.below(candidates.size() - 1);
                if (other >= i) ++other;
                q_source = &candidates[other];
            }
            p.question = generate_question(dialog_tokens, *q_source);
            p.answer = cand.text;
            bool dup = false;
            for (const auto& existing : out)
                if (existing == p) dup = true;
            if (!dup) out.push_back(std::move(p));
        }
    }

    if (static_cast<int>(out.size()) > cfg.cap) out.resize(static_cast<size_t>(cfg.cap));
    return out;
}

}  // namespace elba
