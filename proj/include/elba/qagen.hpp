#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elba/dialog.hpp"
#include "elba/task.hpp"
#include "elba/world.hpp"

namespace elba {

enum class QaType : int { Location, Appearance, Direction, CurrentSubgoal, NextSubgoal, Generated };
const std::string& qa_type_id(QaType t);
std::optional<QaType> qa_type_from_id(std::string_view id);

enum class AnswerSource : int { OracleFact, PlannerSubgoal, ExtractedNoun, ExtractedPhrase };

struct QAPair {
    std::string question;  // non-empty, ends in '?'
    std::string answer;    // non-empty
    QaType qa_type = QaType::Generated;
    AnswerSource answer_source = AnswerSource::OracleFact;

    bool operator==(const QAPair& o) const {
        return question == o.question && answer == o.answer;
    }
};

struct AnswerCandidate {
    std::string text;       // lowercase canonical form
    int origin_index = 0;   // sub-goal the candidate came from
    bool is_phrase = false; // full sub-goal phrase vs single noun
};

enum class QaMode : int { None, Oracle, Generated, Combined };
const std::string& qa_mode_id(QaMode m);
std::optional<QaMode> qa_mode_from_id(std::string_view id);

// Template pairs for the current sub-goal's categories plus the
// current/next sub-goal pairs from z. Categories absent from the world are
// skipped. Order: Location, Appearance, Direction, Current, Next.
std::vector<QAPair> oracle_qas(const GridWorld& world, const std::vector<SubGoal>& z);

// Candidate answers: per sub-goal its nouns (in order) then its full phrase;
// duplicates dropped keeping first occurrence.
std::vector<AnswerCandidate> extract_answers(const std::vector<SubGoal>& z);

// Answer-aware question from a deterministic grammar; intent alternates by a
// hash of (dialog, answer).
std::string generate_question(const std::vector<int>& dialog_tokens,
                              const AnswerCandidate& answer);

struct CandidateConfig {
    QaMode mode = QaMode::Combined;
    int cap = 16;               // K
    double malform_rate = 0.0;  // chance of mismatched generated pairings
    uint64_t malform_seed = 0;
};

std::vector<QAPair> build_candidates(const GridWorld& world, const std::vector<SubGoal>& z,
                                     const std::vector<int>& dialog_tokens,
                                     const CandidateConfig& cfg);

}  // namespace elba
