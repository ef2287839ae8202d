#pragma once

#include <vector>

#include "elba/task.hpp"
#include "elba/world.hpp"

namespace elba {

struct ExpertResult {
    std::vector<Action> actions;                       // ends with Stop
    std::vector<std::pair<int, SubGoal>> subgoal_spans;  // (start step index, sub-goal)
};

// Shortest navigation (BFS over x, y, facing with Forward < TurnLeft <
// TurnRight tie-break), interactions per gold sub-goal order. Throws NoPath
// when a target is unreachable.
ExpertResult expert_rollout(const GridWorld& world, const Task& task);

// First navigation action on the shortest path to face the nearest instance
// of the category. Empty optional when no move is needed. Throws NoPath.
std::optional<Action> first_step_toward(const GridWorld& world, Category target);

}  // namespace elba
