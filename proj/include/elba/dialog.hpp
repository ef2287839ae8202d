#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elba/task.hpp"
#include "elba/world.hpp"

namespace elba {

// An utterance becomes visible to the agent at every step strictly after
// `step` (the task instruction has step 0 and is visible from the start).
struct Utterance {
    int step = 0;
    std::string text;
    bool operator==(const Utterance&) const = default;
};

// Templated task instruction plus optional per-sub-goal hints.
std::vector<Utterance> synthesize_dialog(const Task& task,
                                         const std::vector<std::pair<int, SubGoal>>& spans,
                                         uint64_t seed, double hint_rate);

// ---------------------------------------------------------------------------
// Ground-truth fact provider behind the oracle QA templates.
// ---------------------------------------------------------------------------
enum class RelativeDirection { Left, Right, Front, Behind };
enum class TurnHint { Left, Right, None };

struct LocationFacts {
    RelativeDirection direction = RelativeDirection::Front;
    std::string container;  // hosting container word or "floor"
};

struct AppearanceFacts {
    Color color = Color::Brown;
    Material material = Material::Organic;
};

const std::string& direction_word(RelativeDirection d);

LocationFacts oracle_location(const GridWorld& world, Category target);
AppearanceFacts oracle_appearance(const GridWorld& world, Category target);
TurnHint oracle_direction(const GridWorld& world, Category target);

}  // namespace elba
